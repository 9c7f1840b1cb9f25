"""
Test cases for the AIII Bloch Hamiltonian
"""

import math

import numpy as np
import pytest

from aiii_quench.schemas import ModelParams
from aiii_quench.services.model import (
    BOUNDARY_FLAG,
    HVector,
    Momentum,
    band_energies,
    canonical_angle,
    chiral_operator,
    grad_h0,
    h0_values,
    h_field,
    hamiltonian,
    phase_oracle,
    prequench_ground_state,
    wrap_array,
)
from aiii_quench.services.qops import GAMMA0, is_hermitian

XI0 = 1600.0


class TestMomentum:
    """Test cases for Brillouin-zone canonicalisation"""

    def test_canonical_range(self):
        """Test that wavenumbers land in [-pi, pi)"""
        assert canonical_angle(math.pi) == -math.pi
        assert canonical_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
        assert canonical_angle(-3 * math.pi / 2) == pytest.approx(math.pi / 2)
        assert -math.pi <= canonical_angle(123.4) < math.pi

    def test_canonical_is_idempotent(self):
        """Test that in-range values come back bit for bit"""
        for k in (-math.pi, -1.0, 0.0, 0.5235987755982988, math.pi - 1e-12):
            assert canonical_angle(k) == k
            assert canonical_angle(canonical_angle(k + 2 * math.pi)) == canonical_angle(k + 2 * math.pi)

    def test_wrap_array_matches_scalar(self):
        """Test the vectorised wrap against the scalar version"""
        values = np.array([-7.0, -math.pi, 0.3, math.pi, 9.5])
        wrapped = wrap_array(values)
        for v, w in zip(values, wrapped):
            assert w == pytest.approx(canonical_angle(float(v)), abs=1e-12)

    def test_momentum_is_canonicalised(self):
        """Test that Momentum stores canonical components"""
        k = Momentum(math.pi, 2 * math.pi, -0.25)
        assert k.kx == -math.pi
        assert k.ky == pytest.approx(0.0, abs=1e-12)
        assert k.kz == -0.25

    def test_momentum_rejects_non_finite(self):
        """Test that NaN components raise"""
        with pytest.raises(ValueError, match="finite"):
            Momentum(float("nan"), 0.0, 0.0)


class TestHField:
    """Test cases for the Bloch coefficients"""

    def test_reference_point(self):
        """Test h at m_z = 0, k = (pi/2, -pi/2, pi/2)"""
        h = h_field(ModelParams(m_z=0.0), Momentum(math.pi / 2, -math.pi / 2, math.pi / 2))
        assert h.h0 == pytest.approx(0.0, abs=1e-9)
        assert (h.h1, h.h2, h.h3) == pytest.approx((400.0, -400.0, 400.0))

    def test_zone_corner(self, params_case_ii):
        """Test h0 = m_z + 3·xi0 at the zone corner"""
        h = h_field(params_case_ii, Momentum(math.pi, math.pi, math.pi))
        assert h.h0 == pytest.approx(4.3 * XI0)
        assert h.so_field == pytest.approx(np.zeros(3), abs=1e-9)

    def test_energy_is_norm(self):
        """Test E = |h|"""
        h = HVector(3.0, 4.0, 0.0, 12.0)
        assert h.E == pytest.approx(13.0)

    def test_gradient_matches_finite_difference(self, params_case_i):
        """Test grad h0 against central differences"""
        k = np.array([0.3, -1.1, 2.0])
        step = 1e-6
        numeric = np.array([
            (h0_values(params_case_i, *(k + step * e)) - h0_values(params_case_i, *(k - step * e))) / (2 * step)
            for e in np.eye(3)
        ])
        assert grad_h0(params_case_i, k) == pytest.approx(numeric, rel=1e-6)


class TestHamiltonian:
    """Test cases for the Bloch Hamiltonian"""

    @pytest.fixture
    def momenta(self):
        rng = np.random.default_rng(11)
        return [Momentum(*rng.uniform(-math.pi, math.pi, size=3)) for _ in range(10)]

    def test_hermitian_and_traceless(self, params_case_i, momenta):
        """Test Hermiticity and zero trace"""
        for k in momenta:
            ham = hamiltonian(params_case_i, k)
            assert is_hermitian(ham, 1e-9)
            assert abs(np.trace(ham)) < 1e-9

    def test_chiral_symmetry(self, params_case_ii, momenta):
        """Test that the chiral operator anticommutes with H(k)"""
        gamma = chiral_operator()
        for k in momenta:
            ham = hamiltonian(params_case_ii, k)
            assert np.allclose(gamma @ ham + ham @ gamma, 0.0, atol=1e-9)

    def test_bands_are_doubly_degenerate(self, params_case_i, momenta):
        """Test sorted eigenvalues (-E, -E, E, E)"""
        for k in momenta:
            energy = h_field(params_case_i, k).E
            assert band_energies(params_case_i, k) == pytest.approx([-energy, -energy, energy, energy], abs=1e-8)

    def test_prequench_state(self):
        """Test that the pre-quench state is the -1 eigenvector of γ0"""
        psi = prequench_ground_state()
        assert np.linalg.norm(psi) == pytest.approx(1.0)
        assert np.allclose(GAMMA0 @ psi, -psi)


class TestPhaseOracle:
    """Test cases for the equilibrium phase classification"""

    @pytest.mark.parametrize(
        "m_z,expected",
        [
            (0.0, 2),
            (0.5 * XI0, 2),
            (-0.86 * XI0, 2),
            (1.3 * XI0, -1),
            (-1.3 * XI0, -1),
            (2.9 * XI0, -1),
            (3.2 * XI0, 0),
            (-4.0 * XI0, 0),
        ],
    )
    def test_phases(self, m_z, expected):
        """Test the phase of each region"""
        assert phase_oracle(ModelParams(m_z=m_z)) == expected

    @pytest.mark.parametrize("m_z", [XI0, -XI0, 3.0 * XI0, -3.0 * XI0, XI0 * (1 + 1e-7)])
    def test_boundaries(self, m_z):
        """Test that phase boundaries are flagged"""
        assert phase_oracle(ModelParams(m_z=m_z)) == BOUNDARY_FLAG
