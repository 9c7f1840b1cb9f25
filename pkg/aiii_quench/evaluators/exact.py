"""
Evaluators built on exact propagators: the closed form for the clean
Hamiltonian, and batched eigendecompositions for its dephased copies.
"""

import math

import numpy as np

from aiii_quench.evaluators.base import NoiseLevelError, TextureEvaluator, TextureEvaluatorError
from aiii_quench.schemas import EvolutionMode, QuenchSpec
from aiii_quench.services.dynamics import closed_form_stack, dephasing_draws, textures_of_states
from aiii_quench.services.model import Momentum, h_field, hamiltonian, prequench_ground_state
from aiii_quench.services.qops import expm_hermitian_stack, pauli_tensor

_Z1 = pauli_tensor("Z", "I")
_Z2 = pauli_tensor("I", "Z")


class ExactTextureEvaluator(TextureEvaluator):
    """Closed-form evolution exp(-iHt) = cos(Et)·I - i·sin(Et)/E·H"""

    def texture_series(self, k: Momentum, times: np.ndarray, k_index: int = 0) -> np.ndarray:
        propagators = closed_form_stack(h_field(self.spec.params, k), times)
        states = propagators @ prequench_ground_state()
        return textures_of_states(states)

    def get_mode_name(self) -> str:
        return EvolutionMode.EXACT.value


class DephasedTextureEvaluator(TextureEvaluator):
    """
    Exact evolution under H + d_z1·σz¹ + d_z2·σz² with d ~ Uniform(-A, A),
    averaged over the QuenchSpec noise samples.

    The draws for a momentum depend only on (seed, k_index). A = 0 falls
    through to the clean evaluator so that the two agree bit for bit.
    """

    def __init__(self, spec: QuenchSpec):
        if spec.mode != EvolutionMode.NOISY:
            raise TextureEvaluatorError(f"Dephased textures need noisy-exact mode, got {spec.mode.value}")
        if not (math.isfinite(spec.noise_level) and spec.noise_level >= 0):
            raise NoiseLevelError(f"Noise level must be finite and non-negative, got {spec.noise_level}")
        super().__init__(spec)
        self._clean = ExactTextureEvaluator(spec)

    def texture_series(self, k: Momentum, times: np.ndarray, k_index: int = 0) -> np.ndarray:
        if self.spec.noise_level == 0.0:
            return self._clean.texture_series(k, times, k_index)

        draws = dephasing_draws(self.spec, k_index)
        noisy = (
            hamiltonian(self.spec.params, k)[None, :, :]
            + draws[:, 0, None, None] * _Z1[None, :, :]
            + draws[:, 1, None, None] * _Z2[None, :, :]
        )
        propagators = expm_hermitian_stack(noisy, np.asarray(times, dtype=float))
        states = propagators @ prequench_ground_state()
        # (samples, T, 3) -> sample mean per time
        return np.mean(textures_of_states(states), axis=0)

    def get_mode_name(self) -> str:
        return EvolutionMode.NOISY.value
