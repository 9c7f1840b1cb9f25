"""
NMR realisation of the quench on a two-spin (13C, 1H) sample.

A Trotter slice is compiled into rotations, J-coupling delays and a hard
pulse; sequences are simulated under the on-resonance NMR Hamiltonian
(πJ/2)·σz¹σz² plus control terms. Also covers pseudo-pure state
preparation by spatial averaging and the spectral readout model.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from aiii_quench.constants import GAMMA_RATIO, MAX_DELAY_S, PPS_EPS_DEFAULT
from aiii_quench.errors import QuenchError
from aiii_quench.schemas import NmrParams, PulseModel
from aiii_quench.services.export import format_number
from aiii_quench.services.model import HVector
from aiii_quench.services.qops import (
    IDENTITY4,
    PAULI,
    DensityMatrix4,
    Operator4,
    expm_hermitian,
    pauli_tensor,
    rotation,
)

logger = logging.getLogger(__name__)

_X_AXIS = 0.0
_Y_AXIS = math.pi / 2
_MINUS_X_AXIS = math.pi

_ZZ = pauli_tensor("Z", "Z")


class NmrError(QuenchError):
    """Base exception for pulse compilation and simulation failures"""
    pass


class DelayOverflowError(NmrError):
    """Raised when a J-coupling delay exceeds the sanity bound"""
    pass


def _check_qubit(qubit: int) -> None:
    if qubit not in (1, 2):
        raise ValueError(f"Qubit index must be 1 or 2, got {qubit}")


@dataclass(frozen=True)
class Rotation:
    """Instantaneous rotation by `flip` about the in-plane axis at angle `axis`"""
    qubit: int
    axis: float
    flip: float

    def __post_init__(self):
        _check_qubit(self.qubit)

    @property
    def duration(self) -> float:
        return 0.0

    def to_text(self) -> str:
        return f"ROT {self.qubit} {format_number(math.degrees(self.axis))} {format_number(math.degrees(self.flip))}"


@dataclass(frozen=True)
class JDelay:
    """Free evolution under the J coupling"""
    duration: float

    def __post_init__(self):
        if not self.duration >= 0.0:
            raise ValueError("Delay duration must be non-negative")

    def to_text(self) -> str:
        return f"JDELAY {format_number(self.duration)}"


@dataclass(frozen=True)
class HardPulse:
    """Rectangular pulse with amplitude b1 (Hz) and phase (rad)"""
    qubit: int
    b1: float
    phase: float
    length: float

    def __post_init__(self):
        _check_qubit(self.qubit)
        if not self.length >= 0.0:
            raise ValueError("Pulse length must be non-negative")

    @property
    def duration(self) -> float:
        return self.length

    def control_hamiltonian(self) -> Operator4:
        """πB₁(cos φ·σx + sin φ·σy) on the pulsed qubit."""
        single = math.pi * self.b1 * (math.cos(self.phase) * PAULI["X"] + math.sin(self.phase) * PAULI["Y"])
        if self.qubit == 1:
            return np.kron(single, PAULI["I"])
        return np.kron(PAULI["I"], single)

    def to_text(self) -> str:
        return (
            f"HARD {self.qubit} {format_number(self.b1)} "
            f"{format_number(math.degrees(self.phase))} {format_number(self.length)}"
        )


@dataclass(frozen=True)
class GradientCrush:
    """Pulsed field gradient that removes every coherence"""

    @property
    def duration(self) -> float:
        return 0.0

    def to_text(self) -> str:
        return "CRUSH"


PulsePrimitive = Union[Rotation, JDelay, HardPulse, GradientCrush]


@dataclass(frozen=True)
class PulseSequence:
    """Primitives in chronological order (first applied first)"""
    primitives: tuple[PulsePrimitive, ...] = field(default_factory=tuple)

    @property
    def duration(self) -> float:
        return float(sum(p.duration for p in self.primitives))

    def __len__(self) -> int:
        return len(self.primitives)

    def __add__(self, other: "PulseSequence") -> "PulseSequence":
        return PulseSequence(self.primitives + other.primitives)

    def to_text(self) -> str:
        return "".join(f"{p.to_text()}\n" for p in self.primitives)


def coupling_delay(coefficient: float, tau: float, nmr: NmrParams) -> float:
    """Delay T(h) = 2|h|τ/(πJ) that accumulates the phase |h|·τ."""
    delay = 2.0 * abs(coefficient) * tau / (math.pi * nmr.J)
    if delay > MAX_DELAY_S:
        raise DelayOverflowError(
            f"J delay {delay:.6g} s for coefficient {coefficient:.6g} rad/s exceeds {MAX_DELAY_S} s"
        )
    return delay


def compile_slice(h: HVector, tau: float, nmr: NmrParams) -> PulseSequence:
    """
    Compile exp(-iH_zx τ)·exp(-iH_zz τ)·exp(-iH_xy τ) into NMR primitives.

    Chronologically the hard pulse (h1, h2) comes first, then the σz¹σz²
    block (h3), then the σz¹σx² block (h0). Zero coefficients emit nothing.

    Args:
        h: Bloch coefficients of the slice
        tau: Slice length in seconds
        nmr: Sample parameters

    Returns:
        PulseSequence in chronological order

    Raises:
        DelayOverflowError: When a delay exceeds MAX_DELAY_S
    """
    if not tau > 0:
        raise ValueError("Slice length tau must be positive")

    primitives: list[PulsePrimitive] = []

    transverse = math.hypot(h.h1, h.h2)
    if transverse > 0.0:
        primitives.append(
            HardPulse(
                qubit=1,
                b1=transverse * tau / (math.pi * nmr.tau_hard),
                phase=math.atan2(h.h2, h.h1),
                length=nmr.tau_hard,
            )
        )

    if h.h3 != 0.0:
        delay = JDelay(coupling_delay(h.h3, tau, nmr))
        if h.h3 > 0:
            primitives.append(delay)
        else:
            primitives += [Rotation(2, _X_AXIS, -math.pi), delay, Rotation(2, _X_AXIS, math.pi)]

    if h.h0 != 0.0:
        delay = JDelay(coupling_delay(h.h0, tau, nmr))
        # y(π/2) rotation on qubit 2 maps σz² onto σx²
        sign = 1.0 if h.h0 > 0 else -1.0
        primitives += [
            Rotation(2, _Y_AXIS, -sign * math.pi / 2),
            delay,
            Rotation(2, _Y_AXIS, sign * math.pi / 2),
        ]

    return PulseSequence(tuple(primitives))


def _coupling_hamiltonian(nmr: NmrParams) -> Operator4:
    return (math.pi * nmr.J / 2.0) * _ZZ


def primitive_unitary(
    primitive: PulsePrimitive,
    nmr: NmrParams,
    model: PulseModel | str = PulseModel.IDEAL,
) -> Operator4:
    """Propagator of a single unitary primitive."""
    match primitive:
        case Rotation(qubit=qubit, axis=axis, flip=flip):
            return rotation(qubit, axis, flip)
        case JDelay(duration=duration):
            return expm_hermitian(_coupling_hamiltonian(nmr), duration)
        case HardPulse():
            hamiltonian = primitive.control_hamiltonian()
            if PulseModel(model) == PulseModel.FINITE:
                hamiltonian = hamiltonian + _coupling_hamiltonian(nmr)
            return expm_hermitian(hamiltonian, primitive.length)
        case GradientCrush():
            raise NmrError("Gradient crush is not unitary; use apply_sequence on a density matrix")
    raise TypeError(f"Unknown pulse primitive {primitive!r}")


def simulate_sequence(
    seq: PulseSequence,
    nmr: NmrParams,
    model: PulseModel | str = PulseModel.IDEAL,
) -> Operator4:
    """
    Total propagator of a unitary sequence.

    The ideal model treats hard pulses as instantaneous with the coupling
    suspended; the finite-pulse model lets J act during each pulse.
    """
    total = IDENTITY4.copy()
    for primitive in seq.primitives:
        total = primitive_unitary(primitive, nmr, model) @ total
    return total


def crush(rho: DensityMatrix4) -> DensityMatrix4:
    """Zero all off-diagonal entries in the computational basis."""
    return np.diag(np.diag(rho))


def apply_sequence(
    seq: PulseSequence,
    rho: DensityMatrix4,
    nmr: NmrParams,
    model: PulseModel | str = PulseModel.IDEAL,
) -> DensityMatrix4:
    """Run a sequence, gradient crushes included, on a density matrix."""
    state = np.asarray(rho, dtype=np.complex128)
    for primitive in seq.primitives:
        if isinstance(primitive, GradientCrush):
            state = crush(state)
        else:
            u = primitive_unitary(primitive, nmr, model)
            state = u @ state @ u.conj().T
    return state


def thermal_state(eps: float) -> DensityMatrix4:
    """
    High-temperature equilibrium I/4 + (eps/4)·(σz¹ + r·σz²), r = γ_H/γ_C.

    Qubit 2 is the proton.
    """
    deviation = pauli_tensor("Z", "I") + GAMMA_RATIO * pauli_tensor("I", "Z")
    return IDENTITY4 / 4.0 + (eps / 4.0) * deviation


def pps_sequence(nmr: NmrParams) -> PulseSequence:
    """Spatial-averaging sequence from the thermal state to |00><00|."""
    delay = 1.0 / (2.0 * nmr.J)
    return PulseSequence(
        (
            Rotation(2, _X_AXIS, math.acos(2.0 / GAMMA_RATIO)),
            GradientCrush(),
            Rotation(2, _MINUS_X_AXIS, math.pi / 4),
            JDelay(delay),
            Rotation(2, _Y_AXIS, math.pi / 4),
            GradientCrush(),
        )
    )


def prepare_pps(nmr: NmrParams, eps: float = PPS_EPS_DEFAULT) -> DensityMatrix4:
    """
    Pseudo-pure state (1-eps)/4·I + eps·|00><00|.

    Args:
        nmr: Sample parameters (J sets the coupling delay)
        eps: Polarization, 0 < eps << 1

    Returns:
        Diagonal density matrix
    """
    if not 0.0 < eps < 1.0:
        raise ValueError("Polarization eps must lie in (0, 1)")
    rho = apply_sequence(pps_sequence(nmr), thermal_state(eps), nmr)
    logger.debug(f"PPS populations: {np.real(np.diag(rho))}")
    return rho


def prepare_initial_state(nmr: NmrParams, eps: float = PPS_EPS_DEFAULT) -> DensityMatrix4:
    """Pseudo-pure pre-quench state: R²_y(-π/2) applied to the PPS."""
    prep = PulseSequence((Rotation(2, _Y_AXIS, -math.pi / 2),))
    return apply_sequence(prep, prepare_pps(nmr, eps), nmr)


@dataclass(frozen=True)
class ReadoutPeaks:
    """
    Qubit-1 spectral peaks. The superscript selects the state of qubit 2;
    gamma3 is the antiphase readout of <σz¹σz²>.
    """
    m0_x: float
    m0_y: float
    m1_x: float
    m1_y: float
    gamma3: float

    @property
    def sigma_x(self) -> float:
        return self.m0_x + self.m1_x

    @property
    def sigma_y(self) -> float:
        return self.m0_y + self.m1_y


_PROJECT_0 = np.array([[1, 0], [0, 0]], dtype=np.complex128)
_PROJECT_1 = np.array([[0, 0], [0, 1]], dtype=np.complex128)


def _peak(rho: DensityMatrix4, pauli: str, projector: np.ndarray) -> float:
    return float(np.real(np.trace(np.kron(PAULI[pauli], projector) @ rho)))


def readout_expectations(rho: DensityMatrix4) -> ReadoutPeaks:
    """
    Peak table for qubit 1: <M⁰_x>, <M⁰_y>, <M¹_x>, <M¹_y> with
    M^j = σ ⊗ |j><j|, and the γ3 value read after R¹_y(π/2).
    """
    rho = np.asarray(rho, dtype=np.complex128)
    mapping = rotation(1, _Y_AXIS, math.pi / 2)
    rotated = mapping @ rho @ mapping.conj().T
    return ReadoutPeaks(
        m0_x=_peak(rho, "X", _PROJECT_0),
        m0_y=_peak(rho, "Y", _PROJECT_0),
        m1_x=_peak(rho, "X", _PROJECT_1),
        m1_y=_peak(rho, "Y", _PROJECT_1),
        gamma3=_peak(rotated, "X", _PROJECT_0) - _peak(rotated, "X", _PROJECT_1),
    )
