"""
The AIII-class Bloch Hamiltonian.

H(k) = h0·σz¹σx² + h1·σx¹ + h2·σy¹ + h3·σz¹σz² with
h0 = m_z - xi0·(cos kx + cos ky + cos kz) and (h1, h2, h3) = xi_so·sin k.
Energies are angular frequencies (rad/s); momenta are dimensionless.
"""

import math
from dataclasses import dataclass, field
from typing import Final

import numpy as np

from aiii_quench.constants import BOUNDARY_EPS_REL
from aiii_quench.schemas import ModelParams
from aiii_quench.services.qops import (
    CHIRAL,
    Operator4,
    PureState4,
    dirac_hamiltonian,
)

BOUNDARY_FLAG: Final = "boundary"

_TWO_PI = 2.0 * math.pi


def canonical_angle(k: float) -> float:
    """Map a wavenumber into [-pi, pi); values already inside are returned unchanged."""
    if -math.pi <= k < math.pi:
        return k
    wrapped = math.fmod(k + math.pi, _TWO_PI)
    if wrapped < 0:
        wrapped += _TWO_PI
    wrapped -= math.pi
    if wrapped >= math.pi:
        wrapped -= _TWO_PI
    return wrapped


def wrap_array(k: np.ndarray) -> np.ndarray:
    """Vectorised canonical_angle."""
    k = np.asarray(k, dtype=float)
    wrapped = np.mod(k + math.pi, _TWO_PI) - math.pi
    wrapped = np.where(wrapped >= math.pi, wrapped - _TWO_PI, wrapped)
    return np.where((k >= -math.pi) & (k < math.pi), k, wrapped)


@dataclass(frozen=True)
class Momentum:
    """A point of the periodic Brillouin zone, canonicalised into [-pi, pi)^3"""
    kx: float
    ky: float
    kz: float

    def __post_init__(self):
        for name in ("kx", "ky", "kz"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"Momentum component {name} must be finite")
            object.__setattr__(self, name, canonical_angle(value))

    def as_array(self) -> np.ndarray:
        return np.array([self.kx, self.ky, self.kz])

    @classmethod
    def from_array(cls, values) -> "Momentum":
        return cls(float(values[0]), float(values[1]), float(values[2]))


@dataclass(frozen=True)
class HVector:
    """Bloch coefficients (h0, h1, h2, h3) and the gap energy E"""
    h0: float
    h1: float
    h2: float
    h3: float
    E: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "E", math.sqrt(self.h0**2 + self.h1**2 + self.h2**2 + self.h3**2))

    def as_array(self) -> np.ndarray:
        return np.array([self.h0, self.h1, self.h2, self.h3])

    @property
    def so_field(self) -> np.ndarray:
        return np.array([self.h1, self.h2, self.h3])


def h_field(p: ModelParams, k: Momentum) -> HVector:
    """
    Evaluate the Bloch coefficients at one momentum.

    Examples:
        >>> h_field(ModelParams(m_z=0.0), Momentum(math.pi / 2, -math.pi / 2, math.pi / 2)).h1
        400.0
    """
    return HVector(
        h0=p.m_z - p.xi0 * (math.cos(k.kx) + math.cos(k.ky) + math.cos(k.kz)),
        h1=p.xi_so * math.sin(k.kx),
        h2=p.xi_so * math.sin(k.ky),
        h3=p.xi_so * math.sin(k.kz),
    )


def h0_values(p: ModelParams, kx, ky, kz) -> np.ndarray:
    """h0 on arrays of momenta (broadcasting)."""
    return p.m_z - p.xi0 * (np.cos(kx) + np.cos(ky) + np.cos(kz))


def grad_h0(p: ModelParams, k: np.ndarray) -> np.ndarray:
    """Gradient of h0 with respect to k; accepts (..., 3) arrays."""
    return p.xi0 * np.sin(np.asarray(k, dtype=float))


def so_field_values(p: ModelParams, k: np.ndarray) -> np.ndarray:
    """(h1, h2, h3) for (..., 3) momentum arrays."""
    return p.xi_so * np.sin(np.asarray(k, dtype=float))


def hamiltonian(p: ModelParams, k: Momentum) -> Operator4:
    """Bloch Hamiltonian at k; Hermitian and traceless."""
    h = h_field(p, k)
    return dirac_hamiltonian(h.h0, h.h1, h.h2, h.h3)


def band_energies(p: ModelParams, k: Momentum) -> np.ndarray:
    """Sorted eigenvalues of H(k): (-E, -E, +E, +E)."""
    return np.linalg.eigvalsh(hamiltonian(p, k))


def chiral_operator() -> Operator4:
    return CHIRAL


def prequench_ground_state() -> PureState4:
    """
    Ground state in the m_z -> +inf limit, (|00> - |01>)/sqrt(2).

    This is |0> ⊗ |->, the -1 eigenvector of σz¹σx².
    """
    amp = 1.0 / math.sqrt(2.0)
    state = np.array([amp, -amp, 0.0, 0.0], dtype=np.complex128)
    state.setflags(write=False)
    return state


def phase_oracle(p: ModelParams, eps_rel: float = BOUNDARY_EPS_REL) -> int | str:
    """
    Equilibrium winding number of the post-quench Hamiltonian.

    Args:
        p: Model parameters
        eps_rel: Boundary tolerance in units of xi0

    Returns:
        2 for |m_z| < xi0, -1 for xi0 < |m_z| < 3·xi0, 0 for |m_z| > 3·xi0,
        or BOUNDARY_FLAG within eps_rel·xi0 of a phase boundary
    """
    eps = eps_rel * p.xi0
    mass = abs(p.m_z)
    if abs(mass - p.xi0) <= eps or abs(mass - 3.0 * p.xi0) <= eps:
        return BOUNDARY_FLAG
    if mass < p.xi0:
        return 2
    if mass < 3.0 * p.xi0:
        return -1
    return 0
