"""
Evaluator package: one texture evaluator per evolution mode.
"""

from aiii_quench.evaluators.base import (
    NoiseLevelError,
    TextureEvaluator,
    TextureEvaluatorError,
    TrotterStepError,
)
from aiii_quench.evaluators.exact import DephasedTextureEvaluator, ExactTextureEvaluator
from aiii_quench.evaluators.stepped import CompiledTextureEvaluator, TrotterTextureEvaluator
from aiii_quench.schemas import EvolutionMode, QuenchSpec

_EVALUATORS: dict[EvolutionMode, type[TextureEvaluator]] = {
    EvolutionMode.EXACT: ExactTextureEvaluator,
    EvolutionMode.TROTTER: TrotterTextureEvaluator,
    EvolutionMode.COMPILED: CompiledTextureEvaluator,
    EvolutionMode.NOISY: DephasedTextureEvaluator,
}


def get_evaluator(spec: QuenchSpec) -> TextureEvaluator:
    """Instantiate the evaluator for spec.mode."""
    try:
        return _EVALUATORS[spec.mode](spec)
    except KeyError as e:
        raise TextureEvaluatorError(f"No evaluator for mode {spec.mode!r}") from e


__all__ = [
    "CompiledTextureEvaluator",
    "DephasedTextureEvaluator",
    "ExactTextureEvaluator",
    "NoiseLevelError",
    "TextureEvaluator",
    "TextureEvaluatorError",
    "TrotterStepError",
    "TrotterTextureEvaluator",
    "get_evaluator",
]
