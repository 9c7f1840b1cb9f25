"""
Test cases for expression resolution, run configuration and settings
"""

import json
import math

import pytest
from pydantic import ValidationError

from aiii_quench.config import (
    ConfigFileError,
    Settings,
    get_settings,
    load_run_config,
    read_config_file,
    resolve_out_dir,
)
from aiii_quench.constants import TIMES_DEFAULT
from aiii_quench.schemas import EvolutionMode, ModelParams, QuenchSpec, RunConfig
from aiii_quench.services.resolver import ms_to_seconds, parse_angle, parse_energy


class TestResolver:
    """Test cases for angle and energy expressions"""

    @pytest.mark.parametrize(
        "text,expected",
        [
            ("pi/6", math.pi / 6),
            ("-pi/2", -math.pi / 2),
            ("2*pi/3", 2 * math.pi / 3),
            ("pi", math.pi),
            ("0.25", 0.25),
        ],
    )
    def test_parse_angle(self, text, expected):
        """Test pi expressions"""
        assert parse_angle(text) == pytest.approx(expected)

    def test_parse_angle_numbers_pass_through(self):
        """Test that numeric input is returned as float"""
        assert parse_angle(1) == 1.0
        assert isinstance(parse_angle(1), float)

    @pytest.mark.parametrize(
        "text,expected",
        [
            ("0.86*xi0", 1376.0),
            ("-xi0", -1600.0),
            ("0.1xi_so", 40.0),
            ("1.3*xi0", 2080.0),
            ("250", 250.0),
            ("xi0/4", 400.0),
        ],
    )
    def test_parse_energy(self, text, expected):
        """Test energies in units of the model scales"""
        assert parse_energy(text, 1600.0, 400.0) == pytest.approx(expected)

    @pytest.mark.parametrize("text", ["abc", "", "pi*xi0", "2*meV", "xi0/0"])
    def test_parse_energy_rejects_garbage(self, text):
        """Test that unparsable expressions raise"""
        with pytest.raises(ValueError):
            parse_energy(text, 1600.0, 400.0)

    def test_angle_rejects_energy_units(self):
        """Test that xi0 is not an angle unit"""
        with pytest.raises(ValueError, match="not allowed"):
            parse_angle("xi0")

    def test_booleans_rejected(self):
        """Test that booleans are not numbers here"""
        with pytest.raises(ValueError):
            parse_angle(True)
        with pytest.raises(ValueError):
            parse_energy(False, 1600.0, 400.0)

    def test_ms_to_seconds(self):
        """Test millisecond conversion and rounding"""
        assert ms_to_seconds([0.5, 5.0]) == (0.0005, 0.005)


class TestRunConfig:
    """Test cases for RunConfig validation and resolution"""

    def test_defaults(self):
        """Test the default configuration"""
        config = RunConfig()
        assert config.model.m_z == pytest.approx(0.86 * 1600.0)
        assert config.slice.kz == pytest.approx(math.pi / 6)
        assert config.mesh.delta == pytest.approx(160.0)
        assert config.noise.levels == pytest.approx([0.0, 40.0, 100.0, 200.0])
        assert config.pulse.h == pytest.approx([-1600.0, 0.0, 0.0, -800.0])
        assert config.quench.mode == EvolutionMode.TROTTER

    @pytest.mark.parametrize("case,factor", [("I", 0.0), ("II", 1.3), ("III", -1.3), ("trivial", 4.0)])
    def test_case_presets(self, case, factor):
        """Test m_z presets"""
        assert RunConfig(case=case).model.m_z == pytest.approx(factor * 1600.0)

    def test_explicit_mz_wins_over_case(self):
        """Test that an explicit m_z overrides the preset"""
        config = RunConfig(case="II", model={"m_z": "-0.5*xi0"})
        assert config.model.m_z == pytest.approx(-800.0)

    def test_expressions_follow_model_scales(self):
        """Test that expressions use the configured xi0 and xi_so"""
        config = RunConfig(model={"xi0": 1000.0, "xi_so": 250.0, "m_z": "xi0/2"}, noise={"levels": ["xi_so"]})
        assert config.model.m_z == pytest.approx(500.0)
        assert config.noise.levels == pytest.approx([250.0])

    @pytest.mark.parametrize(
        "payload",
        [
            {"slice": {"n": 4}},
            {"mesh": {"n": 8}},
            {"mesh": {"delta": "0.6*xi0"}},
            {"mesh": {"delta": 0}},
            {"model": {"m_z": "nonsense"}},
            {"noise": {"levels": [-1.0]}},
            {"quench": {"noise_level": "-xi_so"}},
            {"unknown": 1},
            {"workers": -1},
        ],
    )
    def test_invalid_payloads(self, payload):
        """Test that invalid values fail validation"""
        with pytest.raises(ValidationError):
            RunConfig.model_validate(payload)

    def test_quench_spec(self):
        """Test the QuenchSpec built from a config"""
        spec = RunConfig(case="II").quench_spec()
        assert spec.params.m_z == pytest.approx(2080.0)
        assert spec.times == pytest.approx(TIMES_DEFAULT)
        assert spec.tau == pytest.approx(2.5e-4)
        assert spec.seed == 2022

    def test_quench_spec_overrides(self):
        """Test keyword overrides of the spec"""
        spec = RunConfig().quench_spec(mode=EvolutionMode.NOISY, noise_level=40.0)
        assert spec.mode == EvolutionMode.NOISY
        assert spec.noise_level == 40.0

    def test_hash_ignores_execution_fields(self):
        """Test that workers and out_dir do not change the config hash"""
        a = RunConfig(workers=1)
        b = RunConfig(workers=8, out_dir="/tmp/elsewhere")
        assert a.sha256() == b.sha256()
        assert "workers" not in a.metadata().config
        assert "out_dir" not in a.metadata().config

    def test_hash_tracks_content(self):
        """Test that the hash changes with the seed"""
        assert RunConfig(seed=1).sha256() != RunConfig(seed=2).sha256()

    def test_hash_of_equivalent_expressions(self):
        """Test that resolved expressions hash like their numeric values"""
        assert RunConfig(model={"m_z": "xi0"}).sha256() == RunConfig(model={"m_z": 1600.0}).sha256()


class TestQuenchSpec:
    """Test cases for QuenchSpec validation"""

    def test_trotter_times_must_be_slice_multiples(self):
        """Test that stepped modes need integer step counts"""
        with pytest.raises(ValidationError, match="integer multiple"):
            QuenchSpec(params=ModelParams(m_z=0.0), mode=EvolutionMode.TROTTER, times=(0.0003,))

    def test_exact_mode_accepts_any_time(self):
        """Test that exact mode has no slice constraint"""
        spec = QuenchSpec(params=ModelParams(m_z=0.0), times=(0.0003,))
        assert spec.times == (0.0003,)

    def test_dense_averaging_needs_exact_propagator(self):
        """Test that stepped modes refuse dense averaging"""
        with pytest.raises(ValidationError, match="Dense"):
            QuenchSpec(params=ModelParams(m_z=0.0), mode=EvolutionMode.COMPILED, averaging="dense")

    @pytest.mark.parametrize("times", [(0.002, 0.001), (0.001, 0.001), (-0.001,)])
    def test_times_strictly_increasing(self, times):
        """Test time-grid validation"""
        with pytest.raises(ValidationError):
            QuenchSpec(params=ModelParams(m_z=0.0), times=times)

    def test_model_params_reject_non_finite(self):
        """Test that NaN m_z raises"""
        with pytest.raises(ValidationError):
            ModelParams(m_z=float("nan"))


class TestConfigLoading:
    """Test cases for config files, overrides and settings"""

    def test_file_then_overrides(self, tmp_path):
        """Test precedence: defaults < file < overrides"""
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"case": "II", "seed": 5, "mesh": {"n": 20}}))
        config = load_run_config(path, {"seed": 9, "mesh": {"delta": "0.2*xi0"}})
        assert config.model.m_z == pytest.approx(2080.0)
        assert config.seed == 9
        assert config.mesh.n == 20
        assert config.mesh.delta == pytest.approx(320.0)

    def test_shipped_defaults_match_builtin(self):
        """Test that config/defaults.json reproduces the built-in defaults"""
        from pathlib import Path

        path = Path(__file__).resolve().parent.parent / "config" / "defaults.json"
        assert load_run_config(path).sha256() == RunConfig(case="slice").sha256()

    def test_missing_file(self, tmp_path):
        """Test that a missing file raises ConfigFileError"""
        with pytest.raises(ConfigFileError, match="Cannot read"):
            read_config_file(tmp_path / "absent.json")

    def test_invalid_json(self, tmp_path):
        """Test that malformed JSON raises ConfigFileError"""
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigFileError, match="not valid JSON"):
            read_config_file(path)

    def test_non_object_json(self, tmp_path):
        """Test that a JSON array is refused"""
        path = tmp_path / "list.json"
        path.write_text("[1, 2]")
        with pytest.raises(ConfigFileError, match="JSON object"):
            read_config_file(path)

    def test_settings_from_environment(self, monkeypatch, tmp_path):
        """Test AIII_QUENCH_* environment variables"""
        monkeypatch.setenv("AIII_QUENCH_OUT_DIR", str(tmp_path))
        monkeypatch.setenv("AIII_QUENCH_LOG_LEVEL", "DEBUG")
        settings = get_settings()
        assert settings.out_dir == str(tmp_path)
        assert settings.log_level == "DEBUG"

    def test_out_dir_resolution(self, tmp_path):
        """Test that the config out_dir wins over settings"""
        settings = Settings(out_dir="from-env")
        assert resolve_out_dir(RunConfig(out_dir=str(tmp_path)), settings) == tmp_path
        assert str(resolve_out_dir(RunConfig(), settings)) == "from-env"
