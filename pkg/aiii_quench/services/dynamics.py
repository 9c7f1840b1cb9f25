"""
Quench dynamics and spin-texture measurement.

The pre-quench ground state (|00> - |01>)/sqrt(2) evolves under the
post-quench Bloch Hamiltonian; the textures are the expectations of
γ1 = σx¹, γ2 = σy¹ and γ3 = σz¹σz². Propagators come in four flavours:
exact closed form, first-order Trotter product, NMR-compiled slices and
exact evolution with static dephasing terms.
"""

import logging
from dataclasses import dataclass

import numpy as np

from aiii_quench.constants import (
    DENSE_HORIZON,
    SINC_SWITCH,
    TROTTER_INTEGER_TOL,
)
from aiii_quench.errors import QuenchError
from aiii_quench.schemas import Averaging, EvolutionMode, ModelParams, QuenchSpec
from aiii_quench.services.model import HVector, Momentum, h_field, prequench_ground_state
from aiii_quench.services.qops import (
    GAMMA1,
    GAMMA2,
    GAMMA3,
    IDENTITY4,
    Operator4,
    PureState4,
    dirac_hamiltonian,
    evolve_closed_form,
    fidelity_unitary,
)

logger = logging.getLogger(__name__)


class TrotterStepError(QuenchError, ValueError):
    """Raised when an evolution time is not an integer number of Trotter slices"""
    pass


@dataclass(frozen=True)
class SpinTexture:
    """Expectations of (γ1, γ2, γ3)"""
    g1: float
    g2: float
    g3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.g1, self.g2, self.g3])

    @classmethod
    def from_array(cls, values) -> "SpinTexture":
        return cls(float(values[0]), float(values[1]), float(values[2]))


# (3, 4, 4) stack of the measured observables
_OBSERVABLES = np.stack([GAMMA1, GAMMA2, GAMMA3])


def textures_of_states(states: np.ndarray) -> np.ndarray:
    """
    Texture components for a stack of pure states.

    Args:
        states: Array of shape (..., 4)

    Returns:
        Array of shape (..., 3) with <γ1>, <γ2>, <γ3>
    """
    projected = np.einsum("oij,...j->...oi", _OBSERVABLES, states)
    return np.einsum("...i,...oi->...o", states.conj(), projected).real


def evolve_exact(p: ModelParams, k: Momentum, t: float) -> PureState4:
    """Evolve the pre-quench ground state for time t with the closed-form propagator."""
    if t < 0:
        raise ValueError("Evolution time must be non-negative")
    return evolve_closed_form(h_field(p, k), t) @ prequench_ground_state()


def closed_form_stack(h: HVector, times: np.ndarray) -> np.ndarray:
    """
    Closed-form propagators for many times at once.

    Returns:
        Array of shape (T, 4, 4)
    """
    times = np.asarray(times, dtype=float)
    phases = h.E * times
    small = np.abs(phases) < SINC_SWITCH
    with np.errstate(divide="ignore", invalid="ignore"):
        sin_over_e = np.where(small, times * (1.0 - phases**2 / 6.0), np.sin(phases) / h.E)
    hamiltonian = dirac_hamiltonian(h.h0, h.h1, h.h2, h.h3)
    return (
        np.cos(phases)[:, None, None] * IDENTITY4[None, :, :]
        - 1j * sin_over_e[:, None, None] * hamiltonian[None, :, :]
    )


def trotter_slice(h: HVector, tau: float) -> Operator4:
    """
    One first-order Trotter slice exp(-iH_zx τ)·exp(-iH_zz τ)·exp(-iH_xy τ).

    Each factor is itself Dirac-form, so the closed form applies to it.
    """
    u_zx = evolve_closed_form(HVector(h.h0, 0.0, 0.0, 0.0), tau)
    u_zz = evolve_closed_form(HVector(0.0, 0.0, 0.0, h.h3), tau)
    u_xy = evolve_closed_form(HVector(0.0, h.h1, h.h2, 0.0), tau)
    return u_zx @ u_zz @ u_xy


def trotter_steps(total: float, tau: float) -> int:
    """
    Number of slices m = T/τ.

    Raises:
        TrotterStepError: When T/τ is not a positive integer within tolerance
    """
    ratio = total / tau
    steps = round(ratio)
    if steps < 1 or abs(ratio - steps) > TROTTER_INTEGER_TOL * max(1.0, ratio):
        raise TrotterStepError(f"T={total} s is not a positive integer multiple of tau={tau} s")
    return int(steps)


def trotter_propagator(p: ModelParams, k: Momentum, total: float, tau: float) -> Operator4:
    """
    Trotterised propagator (exp(-iH_zx τ) exp(-iH_zz τ) exp(-iH_xy τ))^m.

    Args:
        p: Post-quench model parameters
        k: Momentum
        total: Evolution time T in seconds
        tau: Slice length in seconds

    Returns:
        Unitary product of m = T/τ slices

    Raises:
        TrotterStepError: When T/τ is not an integer
    """
    steps = trotter_steps(total, tau)
    return np.linalg.matrix_power(trotter_slice(h_field(p, k), tau), steps)


def dense_times(h: HVector, points: int, fallback_energy: float) -> np.ndarray:
    """
    Long-horizon time grid for the theory average: `points` equally spaced
    times on (0, DENSE_HORIZON / E].
    """
    energy = h.E if h.E > 1e-9 * fallback_energy else fallback_energy
    horizon = DENSE_HORIZON / energy
    return np.linspace(horizon / points, horizon, points)


def evaluation_times(spec: QuenchSpec, h: HVector) -> np.ndarray:
    """Times over which the texture of a point is averaged."""
    if spec.averaging == Averaging.DENSE:
        return dense_times(h, spec.dense_points, spec.params.xi_so)
    return np.asarray(spec.times, dtype=float)


def noise_generator(seed: int, k_index: int) -> np.random.Generator:
    """
    Counter-based generator keyed by (seed, k_index).

    Draws are taken sample-major, so sample s always receives the same pair
    regardless of how momenta are scheduled across workers.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(k_index,))))


def dephasing_draws(spec: QuenchSpec, k_index: int) -> np.ndarray:
    """(noise_samples, 2) array of (d_z1, d_z2) ~ Uniform(-A, A)."""
    rng = noise_generator(spec.seed, k_index)
    amplitude = spec.noise_level
    return rng.uniform(-amplitude, amplitude, size=(spec.noise_samples, 2))


def _spec_for(spec: QuenchSpec | None, p: ModelParams, mode: EvolutionMode | str) -> QuenchSpec:
    if spec is None:
        return QuenchSpec(params=p, mode=EvolutionMode(mode))
    return spec.model_copy(update={"params": p, "mode": EvolutionMode(mode)})


def spin_texture(
    p: ModelParams,
    k: Momentum,
    t: float,
    mode: EvolutionMode | str = EvolutionMode.EXACT,
    spec: QuenchSpec | None = None,
    k_index: int = 0,
) -> SpinTexture:
    """
    Texture <γ1>, <γ2>, <γ3> at a single evolution time.

    In noisy-exact mode the value is the Monte-Carlo mean over the QuenchSpec
    noise samples for this momentum index.
    """
    from aiii_quench.evaluators import get_evaluator

    evaluator = get_evaluator(_spec_for(spec, p, mode))
    series = evaluator.texture_series(k, np.array([t], dtype=float), k_index)
    return SpinTexture.from_array(series[0])


def time_averaged_texture(spec: QuenchSpec, k: Momentum, k_index: int = 0) -> SpinTexture:
    """
    Arithmetic mean of the texture over the QuenchSpec time grid.

    Deterministic for a fixed seed; noisy-exact specs average over noise too.
    """
    from aiii_quench.evaluators import get_evaluator

    return get_evaluator(spec).averaged_texture(k, k_index)


def dephased_texture(spec: QuenchSpec, k: Momentum, k_index: int = 0) -> SpinTexture:
    """
    Monte-Carlo mean of the time-averaged texture under H + d_z1·σz¹ + d_z2·σz².

    Raises:
        TextureEvaluatorError: When the spec is not in noisy-exact mode
        NoiseLevelError: When the noise level is negative
    """
    from aiii_quench.evaluators import DephasedTextureEvaluator

    return DephasedTextureEvaluator(spec).averaged_texture(k, k_index)


@dataclass(frozen=True)
class TrotterFidelityReport:
    mean: float
    minimum: float
    evaluations: int


def trotter_fidelity_report(
    p: ModelParams,
    momenta: list[Momentum],
    times: tuple[float, ...] | list[float],
    tau: float,
) -> TrotterFidelityReport:
    """
    Fidelity between exact and Trotter propagators over points x times.

    Args:
        p: Post-quench model parameters
        momenta: Sample points (typically the shell points)
        times: Evolution times, each a multiple of tau
        tau: Slice length in seconds

    Returns:
        Mean and minimum gate fidelity
    """
    values = []
    for k in momenta:
        h = h_field(p, k)
        one_slice = trotter_slice(h, tau)
        for t in times:
            exact = evolve_closed_form(h, t)
            trotter = np.linalg.matrix_power(one_slice, trotter_steps(t, tau))
            values.append(fidelity_unitary(exact, trotter))
    if not values:
        raise ValueError("Trotter fidelity needs at least one point and one time")
    report = TrotterFidelityReport(mean=float(np.mean(values)), minimum=float(np.min(values)), evaluations=len(values))
    logger.info(f"Trotter fidelity over {report.evaluations} evaluations: mean {report.mean:.5f}, min {report.minimum:.5f}")
    return report


def long_time_texture(h: HVector) -> np.ndarray:
    """
    Infinite-time average -h_i·h0/E² of the texture (the dense average's limit).

    Only used as a reference value; vanishes on the band-inversion surface.
    """
    if h.E == 0.0:
        return np.zeros(3)
    return -h.so_field * h.h0 / (h.E * h.E)


__all__ = [
    "SpinTexture",
    "TrotterStepError",
    "TrotterFidelityReport",
    "closed_form_stack",
    "dense_times",
    "dephased_texture",
    "dephasing_draws",
    "evaluation_times",
    "evolve_exact",
    "long_time_texture",
    "noise_generator",
    "spin_texture",
    "textures_of_states",
    "time_averaged_texture",
    "trotter_fidelity_report",
    "trotter_propagator",
    "trotter_slice",
    "trotter_steps",
]
