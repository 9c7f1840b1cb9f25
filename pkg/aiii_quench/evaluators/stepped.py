"""
Evaluators that build the propagator from repeated Trotter slices, either
as the ideal product of exponentials or as a simulated NMR pulse sequence.
"""

import numpy as np

from aiii_quench.evaluators.base import TextureEvaluator
from aiii_quench.schemas import EvolutionMode
from aiii_quench.services.dynamics import textures_of_states, trotter_slice, trotter_steps
from aiii_quench.services.model import HVector, Momentum, h_field, prequench_ground_state
from aiii_quench.services.nmr import compile_slice, simulate_sequence
from aiii_quench.services.qops import Operator4


class TrotterTextureEvaluator(TextureEvaluator):
    """First-order Trotter product exp(-iH_zx τ)·exp(-iH_zz τ)·exp(-iH_xy τ)"""

    def slice_unitary(self, h: HVector) -> Operator4:
        return trotter_slice(h, self.spec.tau)

    def texture_series(self, k: Momentum, times: np.ndarray, k_index: int = 0) -> np.ndarray:
        one_slice = self.slice_unitary(h_field(self.spec.params, k))
        psi0 = prequench_ground_state()
        states = np.stack(
            [np.linalg.matrix_power(one_slice, trotter_steps(t, self.spec.tau)) @ psi0 for t in times]
        )
        return textures_of_states(states)

    def get_mode_name(self) -> str:
        return EvolutionMode.TROTTER.value


class CompiledTextureEvaluator(TrotterTextureEvaluator):
    """Trotter slices replaced by the simulated NMR pulse sequence"""

    def slice_unitary(self, h: HVector) -> Operator4:
        sequence = compile_slice(h, self.spec.tau, self.spec.nmr)
        return simulate_sequence(sequence, self.spec.nmr, self.spec.pulse_model)

    def get_mode_name(self) -> str:
        return EvolutionMode.COMPILED.value
