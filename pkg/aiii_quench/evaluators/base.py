"""
Abstract base class for spin-texture evaluators.

An evaluator turns a momentum into a time series of the measured textures
for one way of realising the post-quench propagator. This module defines
the interface all evaluators implement and the exception classes they raise.
"""

import logging
from abc import ABC, abstractmethod

import numpy as np

from aiii_quench.errors import QuenchError
from aiii_quench.schemas import QuenchSpec
from aiii_quench.services.dynamics import SpinTexture, TrotterStepError, evaluation_times
from aiii_quench.services.model import Momentum, h_field


class TextureEvaluatorError(QuenchError):
    """Base exception for texture evaluation errors"""
    pass


class NoiseLevelError(TextureEvaluatorError, ValueError):
    """Raised when the dephasing amplitude is negative or not finite"""
    pass


class TextureEvaluator(ABC):
    """
    Abstract base class for texture evaluators.

    Evaluators are stateless apart from the spec they were built with, so a
    single instance can be shipped to worker processes and reused for every
    momentum of a sweep.
    """

    def __init__(self, spec: QuenchSpec):
        """
        Initialize the evaluator.

        Args:
            spec: Quench protocol, including the post-quench model parameters
        """
        self.spec = spec
        self.logger = logging.getLogger(f"{__name__}.{self.__class__.__name__}")

    @abstractmethod
    def texture_series(self, k: Momentum, times: np.ndarray, k_index: int = 0) -> np.ndarray:
        """
        Texture components at each requested time.

        Args:
            k: Momentum
            times: Evolution times in seconds, shape (T,)
            k_index: Stable index of the momentum within its sweep; keys the
                noise stream of stochastic evaluators

        Returns:
            Array of shape (T, 3) with <γ1>, <γ2>, <γ3>

        Raises:
            TrotterStepError: When a time is not a multiple of the slice length
        """
        pass

    @abstractmethod
    def get_mode_name(self) -> str:
        """
        Get the name of the evolution mode this evaluator implements.

        Returns:
            Mode name string
        """
        pass

    def time_grid(self, k: Momentum) -> np.ndarray:
        return evaluation_times(self.spec, h_field(self.spec.params, k))

    def averaged_texture(self, k: Momentum, k_index: int = 0) -> SpinTexture:
        """Time-averaged texture over the QuenchSpec time grid (or dense window)."""
        series = self.texture_series(k, self.time_grid(k), k_index)
        return SpinTexture.from_array(np.mean(series, axis=0))

    def averaged_textures(self, points: np.ndarray, first_index: int = 0) -> np.ndarray:
        """
        Time-averaged textures for a block of momenta.

        Args:
            points: Array of shape (N, 3)
            first_index: Sweep index of points[0]

        Returns:
            Array of shape (N, 3)
        """
        out = np.empty((len(points), 3))
        for i, point in enumerate(points):
            out[i] = self.averaged_texture(Momentum.from_array(point), first_index + i).as_array()
        return out


__all__ = [
    "NoiseLevelError",
    "TextureEvaluator",
    "TextureEvaluatorError",
    "TrotterStepError",
]
