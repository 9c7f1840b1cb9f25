"""
Test cases for NMR pulse compilation, state preparation and readout
"""

import math

import numpy as np
import pytest

from aiii_quench.schemas import NmrParams, PulseModel
from aiii_quench.services.dynamics import trotter_slice
from aiii_quench.services.model import HVector, prequench_ground_state
from aiii_quench.services.nmr import (
    DelayOverflowError,
    GradientCrush,
    HardPulse,
    JDelay,
    NmrError,
    PulseSequence,
    Rotation,
    apply_sequence,
    compile_slice,
    coupling_delay,
    crush,
    pps_sequence,
    prepare_initial_state,
    prepare_pps,
    primitive_unitary,
    readout_expectations,
    simulate_sequence,
    thermal_state,
)
from aiii_quench.services.qops import IDENTITY4, fidelity_unitary, pauli_tensor, rotation

XI0 = 1600.0
TAU = 2.5e-4


@pytest.fixture
def random_h():
    rng = np.random.default_rng(31)
    return [HVector(*rng.uniform(-XI0, XI0, size=4)) for _ in range(100)]


def _random_density(rng) -> np.ndarray:
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


class TestCompileSlice:
    """Test cases for Trotter-slice compilation"""

    def test_reference_sequence(self, nmr):
        """Test h = (-xi0, 0, 0, -0.5·xi0): no pulse, two sandwiched delays"""
        seq = compile_slice(HVector(-XI0, 0.0, 0.0, -0.5 * XI0), TAU, nmr)
        assert len(seq) == 6
        kinds = [type(p) for p in seq.primitives]
        assert kinds == [Rotation, JDelay, Rotation, Rotation, JDelay, Rotation]
        assert seq.primitives[1].duration == pytest.approx(0.5 * seq.primitives[4].duration)
        assert seq.primitives[4].duration == pytest.approx(2 * XI0 * TAU / (math.pi * 215.0))
        assert seq.primitives[4].duration == pytest.approx(1.1844e-3, rel=1e-4)

    def test_zero_field_compiles_to_nothing(self, nmr):
        """Test that zero coefficients emit no primitives"""
        seq = compile_slice(HVector(0.0, 0.0, 0.0, 0.0), TAU, nmr)
        assert len(seq) == 0
        assert np.allclose(simulate_sequence(seq, nmr), IDENTITY4)

    def test_hard_pulse_parameters(self, nmr):
        """Test amplitude and phase of the transverse pulse"""
        seq = compile_slice(HVector(0.0, 300.0, 300.0, 0.0), TAU, nmr)
        (pulse,) = seq.primitives
        assert isinstance(pulse, HardPulse)
        assert pulse.phase == pytest.approx(math.pi / 4)
        assert pulse.b1 == pytest.approx(math.hypot(300.0, 300.0) * TAU / (math.pi * nmr.tau_hard))
        assert pulse.qubit == 1

    @pytest.mark.parametrize(
        "h0,h3,axes",
        [
            (1.0, 1.0, [None, ("y", -1), None, ("y", 1)]),
            (-1.0, 1.0, [None, ("y", 1), None, ("y", -1)]),
            (1.0, -1.0, [("x", -1), None, ("x", 1), ("y", -1), None, ("y", 1)]),
            (-1.0, -1.0, [("x", -1), None, ("x", 1), ("y", 1), None, ("y", -1)]),
        ],
    )
    def test_sign_layouts(self, nmr, h0, h3, axes):
        """Test the sandwich rotations for each sign combination"""
        seq = compile_slice(HVector(h0 * 800.0, 0.0, 0.0, h3 * 400.0), TAU, nmr)
        assert len(seq) == len(axes)
        for primitive, expected in zip(seq.primitives, axes):
            if expected is None:
                assert isinstance(primitive, JDelay)
                continue
            axis, sign = expected
            assert isinstance(primitive, Rotation)
            assert primitive.qubit == 2
            assert primitive.axis == pytest.approx(0.0 if axis == "x" else math.pi / 2)
            assert math.copysign(1.0, primitive.flip) == sign

    def test_ideal_compilation_is_exact(self, nmr, random_h):
        """Test that the ideal pulse model reproduces the Trotter slice"""
        for h in random_h:
            u = simulate_sequence(compile_slice(h, TAU, nmr), nmr, PulseModel.IDEAL)
            assert fidelity_unitary(u, trotter_slice(h, TAU)) >= 1 - 1e-9

    def test_finite_pulses_are_close(self, nmr, random_h):
        """Test the finite-pulse fidelity"""
        for h in random_h:
            u = simulate_sequence(compile_slice(h, TAU, nmr), nmr, PulseModel.FINITE)
            assert fidelity_unitary(u, trotter_slice(h, TAU)) >= 0.999

    def test_delays_scale_linearly(self, nmr):
        """Test T(h) ∝ |h|"""
        assert coupling_delay(-800.0, TAU, nmr) == pytest.approx(2 * coupling_delay(400.0, TAU, nmr))

    def test_delay_overflow(self, nmr):
        """Test the delay sanity bound"""
        with pytest.raises(DelayOverflowError):
            compile_slice(HVector(100 * XI0, 0.0, 0.0, 0.0), TAU, nmr)
        assert issubclass(DelayOverflowError, NmrError)

    def test_sequence_duration_and_concatenation(self, nmr):
        """Test total duration and sequence addition"""
        a = compile_slice(HVector(800.0, 100.0, 0.0, 0.0), TAU, nmr)
        b = PulseSequence((JDelay(1e-3),))
        joined = a + b
        assert len(joined) == len(a) + 1
        assert joined.duration == pytest.approx(a.duration + 1e-3)

    def test_text_format(self):
        """Test the textual primitive format"""
        seq = PulseSequence((Rotation(2, math.pi / 2, -math.pi), JDelay(0.001), GradientCrush()))
        assert seq.to_text() == "ROT 2 90 -180\nJDELAY 0.001\nCRUSH\n"

    def test_invalid_primitives(self):
        """Test primitive validation"""
        with pytest.raises(ValueError):
            Rotation(3, 0.0, 1.0)
        with pytest.raises(ValueError):
            JDelay(-1.0)
        with pytest.raises(ValueError):
            compile_slice(HVector(1.0, 0.0, 0.0, 0.0), 0.0, NmrParams())

    def test_crush_is_not_unitary(self, nmr):
        """Test that a gradient crush cannot be turned into a propagator"""
        with pytest.raises(NmrError, match="not unitary"):
            primitive_unitary(GradientCrush(), nmr)


class TestStatePreparation:
    """Test cases for thermal and pseudo-pure states"""

    def test_thermal_state(self):
        """Test trace and deviation of the thermal state"""
        rho = thermal_state(1e-5)
        assert np.trace(rho).real == pytest.approx(1.0)
        assert np.real(np.diag(rho)) == pytest.approx(0.25 + 1e-5 / 4 * np.array([5.0, -3.0, 3.0, -5.0]))

    def test_crush_keeps_populations(self):
        """Test that crushing removes coherences only"""
        rho = _random_density(np.random.default_rng(2))
        crushed = crush(rho)
        assert np.allclose(np.diag(crushed), np.diag(rho))
        assert np.count_nonzero(crushed - np.diag(np.diag(crushed))) == 0

    @pytest.mark.parametrize("eps", [1e-5, 1e-2])
    def test_pseudo_pure_state(self, nmr, eps):
        """Test that the deviation is proportional to |00><00|"""
        rho = prepare_pps(nmr, eps)
        deviation = rho - IDENTITY4 / 4
        target = np.zeros((4, 4))
        target[0, 0] = 1.0
        expected = eps * (target - IDENTITY4 / 4)
        assert np.linalg.norm(deviation - expected) <= 1e-3 * np.linalg.norm(expected)
        assert np.trace(rho).real == pytest.approx(1.0)
        assert np.all(np.linalg.eigvalsh(rho) >= -1e-12)

    def test_pps_sequence_structure(self, nmr):
        """Test the spatial-averaging sequence"""
        seq = pps_sequence(nmr)
        assert sum(isinstance(p, GradientCrush) for p in seq.primitives) == 2
        assert seq.duration == pytest.approx(1 / (2 * nmr.J))

    def test_pps_rejects_bad_polarization(self, nmr):
        """Test the polarization range"""
        with pytest.raises(ValueError, match="Polarization"):
            prepare_pps(nmr, 0.0)

    def test_initial_state(self, nmr):
        """Test that the prepared state carries the pre-quench pure state"""
        eps = 1e-2
        rho = prepare_initial_state(nmr, eps)
        psi = prequench_ground_state()
        expected = (1 - eps) / 4 * IDENTITY4 + eps * np.outer(psi, psi.conj())
        assert np.allclose(rho, expected, atol=1e-12)


class TestReadout:
    """Test cases for the spectral readout model"""

    def test_pps_readout(self, nmr):
        """Test that only the |0> peak of qubit 2 appears after R¹_y(π/2)"""
        eps = 1e-3
        r = rotation(1, math.pi / 2, math.pi / 2)
        peaks = readout_expectations(r @ prepare_pps(nmr, eps) @ r.conj().T)
        assert peaks.m0_x == pytest.approx(eps, rel=1e-6)
        assert peaks.m1_x == pytest.approx(0.0, abs=1e-12)
        assert peaks.m0_y == pytest.approx(0.0, abs=1e-12)
        assert peaks.m1_y == pytest.approx(0.0, abs=1e-12)
        assert peaks.sigma_x == pytest.approx(eps, rel=1e-6)

    def test_gamma3_is_zz(self):
        """Test that the antiphase readout equals Tr(σz¹σz²·rho)"""
        rng = np.random.default_rng(9)
        zz = pauli_tensor("Z", "Z")
        for _ in range(100):
            rho = _random_density(rng)
            assert readout_expectations(rho).gamma3 == pytest.approx(np.trace(zz @ rho).real, abs=1e-12)

    def test_peaks_sum_to_single_qubit_expectation(self):
        """Test M⁰ + M¹ = σ¹"""
        rho = _random_density(np.random.default_rng(4))
        peaks = readout_expectations(rho)
        assert peaks.sigma_x == pytest.approx(np.trace(pauli_tensor("X", "I") @ rho).real, abs=1e-12)
        assert peaks.sigma_y == pytest.approx(np.trace(pauli_tensor("Y", "I") @ rho).real, abs=1e-12)

    def test_maximally_mixed_state_is_silent(self):
        """Test that I/4 gives no signal"""
        peaks = readout_expectations(IDENTITY4 / 4)
        assert (peaks.m0_x, peaks.m0_y, peaks.m1_x, peaks.m1_y, peaks.gamma3) == pytest.approx((0, 0, 0, 0, 0))

    def test_prequench_state_has_no_zz(self, nmr):
        """Test <σz¹σz²> = 0 for the prepared initial state"""
        peaks = readout_expectations(prepare_initial_state(nmr, 1e-2))
        assert peaks.gamma3 == pytest.approx(0.0, abs=1e-12)

    def test_apply_sequence_matches_unitary(self, nmr):
        """Test density-matrix propagation for a crush-free sequence"""
        seq = compile_slice(HVector(500.0, -200.0, 100.0, 300.0), TAU, nmr)
        rho = _random_density(np.random.default_rng(8))
        u = simulate_sequence(seq, nmr)
        assert np.allclose(apply_sequence(seq, rho, nmr), u @ rho @ u.conj().T, atol=1e-12)
