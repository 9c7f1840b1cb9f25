"""
Exact two-qubit linear algebra.

Operators are 4x4 complex numpy arrays in the basis |00>, |01>, |10>, |11>
with qubit 1 as the left tensor factor. States are either length-4 amplitude
vectors or 4x4 density matrices. All functions are pure.
"""

from __future__ import annotations

import math
from typing import TYPE_CHECKING

import numpy as np
import numpy.typing as npt

from aiii_quench.constants import (
    EXPECTATION_IMAG_TOL,
    HERMITIAN_TOL,
    SINC_SWITCH,
    UNITARY_TOL,
)
from aiii_quench.errors import QuenchError

if TYPE_CHECKING:
    from aiii_quench.services.model import HVector

Operator4 = npt.NDArray[np.complex128]
PureState4 = npt.NDArray[np.complex128]
DensityMatrix4 = npt.NDArray[np.complex128]


class OperatorError(QuenchError, ValueError):
    """Base exception for operator precondition failures"""
    pass


class NotHermitianError(OperatorError):
    """Raised when an observable or Hamiltonian is not Hermitian"""
    pass


class NotUnitaryError(OperatorError):
    """Raised when a propagator is not unitary"""
    pass


def _frozen(matrix: npt.ArrayLike) -> Operator4:
    arr = np.array(matrix, dtype=np.complex128)
    arr.setflags(write=False)
    return arr


PAULI: dict[str, Operator4] = {
    "I": _frozen([[1, 0], [0, 1]]),
    "X": _frozen([[0, 1], [1, 0]]),
    "Y": _frozen([[0, -1j], [1j, 0]]),
    "Z": _frozen([[1, 0], [0, -1]]),
}

IDENTITY4 = _frozen(np.eye(4))


def pauli_tensor(a: str, b: str) -> Operator4:
    """
    Build the two-qubit Pauli string sigma_a (qubit 1) ⊗ sigma_b (qubit 2).

    Args:
        a: Label for qubit 1, one of I, X, Y, Z
        b: Label for qubit 2, one of I, X, Y, Z

    Returns:
        Read-only 4x4 operator

    Examples:
        >>> pauli_tensor("Z", "Z").diagonal().real
        array([ 1., -1., -1.,  1.])
    """
    return _frozen(np.kron(PAULI[a.upper()], PAULI[b.upper()]))


# Dirac matrices of the model and the spin-texture observables
GAMMA0 = pauli_tensor("Z", "X")
GAMMA1 = pauli_tensor("X", "I")
GAMMA2 = pauli_tensor("Y", "I")
GAMMA3 = pauli_tensor("Z", "Z")
TEXTURE_OBSERVABLES = (GAMMA1, GAMMA2, GAMMA3)

# Anticommutes with all four Dirac terms
CHIRAL = pauli_tensor("Z", "Y")


def dirac_hamiltonian(h0: float, h1: float, h2: float, h3: float) -> Operator4:
    """Return h0·γ0 + h1·γ1 + h2·γ2 + h3·γ3."""
    return h0 * GAMMA0 + h1 * GAMMA1 + h2 * GAMMA2 + h3 * GAMMA3


def is_hermitian(op: npt.ArrayLike, tol: float = HERMITIAN_TOL) -> bool:
    arr = np.asarray(op)
    return arr.shape == (4, 4) and bool(np.max(np.abs(arr - arr.conj().T)) <= tol)


def is_unitary(op: npt.ArrayLike, tol: float = UNITARY_TOL) -> bool:
    arr = np.asarray(op)
    if arr.shape != (4, 4):
        return False
    return bool(np.max(np.abs(arr.conj().T @ arr - np.eye(4))) <= tol)


def require_hermitian(op: npt.ArrayLike, name: str = "operator") -> Operator4:
    """
    Validate Hermiticity and return the operator as a complex array.

    Raises:
        NotHermitianError: When the check fails
    """
    arr = np.asarray(op, dtype=np.complex128)
    # Scale-aware: Hamiltonians carry rad/s magnitudes in the thousands
    scale = max(1.0, float(np.max(np.abs(arr)))) if arr.size else 1.0
    if not is_hermitian(arr, HERMITIAN_TOL * scale):
        raise NotHermitianError(f"{name} is not a Hermitian 4x4 matrix")
    return arr


def require_unitary(op: npt.ArrayLike, name: str = "propagator") -> Operator4:
    arr = np.asarray(op, dtype=np.complex128)
    if not is_unitary(arr):
        raise NotUnitaryError(f"{name} is not a unitary 4x4 matrix")
    return arr


def evolve_closed_form(h: HVector, t: float) -> Operator4:
    """
    Propagator exp(-iHt) for a Dirac-form Hamiltonian.

    The four Dirac terms pairwise anticommute, so H² = E²·I and
    exp(-iHt) = cos(Et)·I - i·sin(Et)/E·H. Below |Et| < SINC_SWITCH the
    ratio sin(Et)/E is replaced by its series limit, which keeps the
    propagator continuous through gap closings.

    Args:
        h: Bloch coefficients with populated gap energy E
        t: Evolution time in seconds

    Returns:
        Unitary 4x4 propagator
    """
    energy = h.E
    phase = energy * t
    if abs(phase) < SINC_SWITCH:
        sin_over_e = t * (1.0 - phase * phase / 6.0)
    else:
        sin_over_e = math.sin(phase) / energy
    hamiltonian = dirac_hamiltonian(h.h0, h.h1, h.h2, h.h3)
    return math.cos(phase) * IDENTITY4 - 1j * sin_over_e * hamiltonian


def expm_hermitian(hamiltonian: npt.ArrayLike, t: float) -> Operator4:
    """
    Propagator exp(-iHt) of a general Hermitian 4x4 matrix via eigendecomposition.

    Args:
        hamiltonian: Hermitian matrix (rad/s)
        t: Evolution time in seconds

    Returns:
        Unitary 4x4 propagator

    Raises:
        NotHermitianError: When the input is not Hermitian
    """
    h_arr = require_hermitian(hamiltonian, "hamiltonian")
    eigvals, eigvecs = np.linalg.eigh(h_arr)
    return (eigvecs * np.exp(-1j * eigvals * t)) @ eigvecs.conj().T


def expm_hermitian_stack(hamiltonians: np.ndarray, times: np.ndarray) -> np.ndarray:
    """
    Propagators for a stack of Hermitian matrices at several times.

    Args:
        hamiltonians: Array of shape (S, 4, 4); Hermiticity is assumed
        times: Array of shape (T,)

    Returns:
        Array of shape (S, T, 4, 4)
    """
    eigvals, eigvecs = np.linalg.eigh(hamiltonians)
    phases = np.exp(-1j * eigvals[:, None, :] * np.asarray(times)[None, :, None])
    left = eigvecs[:, None, :, :] * phases[:, :, None, :]
    return left @ np.swapaxes(eigvecs.conj(), -1, -2)[:, None, :, :]


def as_density_matrix(state: npt.ArrayLike) -> DensityMatrix4:
    """Promote a pure state to |psi><psi|; density matrices pass through."""
    arr = np.asarray(state, dtype=np.complex128)
    if arr.shape == (4,):
        return np.outer(arr, arr.conj())
    if arr.shape == (4, 4):
        return arr
    raise ValueError(f"Expected a length-4 state or 4x4 density matrix, got shape {arr.shape}")


def expectation(obs: npt.ArrayLike, state: npt.ArrayLike) -> float:
    """
    Tr(obs·rho) for a pure state or density matrix.

    Args:
        obs: Hermitian observable
        state: Length-4 amplitudes or 4x4 density matrix

    Returns:
        Real expectation value

    Raises:
        NotHermitianError: When obs is not Hermitian
        OperatorError: When the imaginary residue exceeds tolerance
    """
    obs_arr = require_hermitian(obs, "observable")
    arr = np.asarray(state, dtype=np.complex128)
    if arr.shape == (4,):
        value = complex(np.vdot(arr, obs_arr @ arr))
    else:
        value = complex(np.trace(obs_arr @ as_density_matrix(arr)))
    if abs(value.imag) > EXPECTATION_IMAG_TOL * max(1.0, abs(value.real)):
        raise OperatorError(f"Expectation has imaginary residue {value.imag:.3e}")
    return value.real


def fidelity_unitary(u: npt.ArrayLike, v: npt.ArrayLike) -> float:
    """
    Gate fidelity |Tr(U†V)|/4 between two unitaries.

    Raises:
        NotUnitaryError: When either argument is not unitary
    """
    u_arr = require_unitary(u, "U")
    v_arr = require_unitary(v, "V")
    return float(min(1.0, abs(np.trace(u_arr.conj().T @ v_arr)) / 4.0))


def rotation(qubit: int, phi: float, theta: float) -> Operator4:
    """
    Single-qubit rotation exp(-i·theta/2·(cos(phi)·X + sin(phi)·Y)) on qubit 1 or 2.

    phi = 0 is the x axis and phi = pi/2 the y axis.
    """
    generator = math.cos(phi) * PAULI["X"] + math.sin(phi) * PAULI["Y"]
    single = math.cos(theta / 2) * PAULI["I"] - 1j * math.sin(theta / 2) * generator
    if qubit == 1:
        return np.kron(single, PAULI["I"])
    if qubit == 2:
        return np.kron(PAULI["I"], single)
    raise ValueError(f"Qubit index must be 1 or 2, got {qubit}")
