"""
Pydantic models for the AIII quench simulator

This module defines the domain parameter models (model, quench protocol, NMR
hardware), the run configuration accepted by the command line, and the
report schemas written to JSON outputs.
"""

import hashlib
import json
import math
from enum import Enum
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from aiii_quench import __version__
from aiii_quench.constants import (
    DENSE_POINTS_DEFAULT,
    J_COUPLING_HZ,
    NOISE_SAMPLES_DEFAULT,
    PPS_EPS_DEFAULT,
    SHELL_DELTA_REL,
    TAU_DEFAULT,
    TAU_HARD_DEFAULT,
    TIMES_DEFAULT,
    TROTTER_INTEGER_TOL,
    XI0_DEFAULT,
    XI_SO_DEFAULT,
)
from aiii_quench.services.resolver import ms_to_seconds, parse_angle, parse_energy


class EvolutionMode(str, Enum):
    """How the post-quench propagator is realised"""
    EXACT = "exact"
    TROTTER = "trotter"
    COMPILED = "compiled"
    NOISY = "noisy-exact"


class Averaging(str, Enum):
    """Time grid used for the time-averaged texture"""
    GRID = "grid"      # the protocol's discrete evolution times
    DENSE = "dense"    # long-horizon theory average


class PulseModel(str, Enum):
    IDEAL = "ideal"
    FINITE = "finite-pulse"


# m_z presets in units of xi0
CASE_PRESETS: dict[str, float] = {
    "I": 0.0,
    "II": 1.3,
    "III": -1.3,
    "slice": 0.86,
    "trivial": 4.0,
}


class ModelParams(BaseModel):
    """Parameters of the AIII Bloch Hamiltonian (energies in rad/s)"""
    model_config = ConfigDict(frozen=True)

    m_z: float = Field(..., description="Post-quench mass parameter")
    xi0: float = Field(XI0_DEFAULT, gt=0, description="Band dispersion scale")
    xi_so: float = Field(XI_SO_DEFAULT, gt=0, description="Spin-orbit field scale")

    @field_validator("m_z", "xi0", "xi_so")
    @classmethod
    def validate_finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("Model parameters must be finite")
        return v


class NmrParams(BaseModel):
    """Two-spin NMR hardware parameters"""
    model_config = ConfigDict(frozen=True)

    J: float = Field(J_COUPLING_HZ, gt=0, description="Scalar coupling in Hz")
    tau_hard: float = Field(TAU_HARD_DEFAULT, gt=0, description="Hard-pulse length in seconds")


class QuenchSpec(BaseModel):
    """Full description of one quench experiment"""
    model_config = ConfigDict(frozen=True)

    params: ModelParams
    times: tuple[float, ...] = Field(TIMES_DEFAULT, min_length=1, description="Evolution times in seconds")
    mode: EvolutionMode = EvolutionMode.EXACT
    tau: float = Field(TAU_DEFAULT, gt=0, description="Trotter slice in seconds")
    noise_level: float = Field(0.0, ge=0, description="Dephasing amplitude A in rad/s")
    noise_samples: int = Field(NOISE_SAMPLES_DEFAULT, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    averaging: Averaging = Averaging.GRID
    dense_points: int = Field(DENSE_POINTS_DEFAULT, ge=2)
    nmr: NmrParams = Field(default_factory=NmrParams)
    pulse_model: PulseModel = PulseModel.IDEAL

    @field_validator("times")
    @classmethod
    def validate_times(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        """Times must be finite, non-negative and strictly increasing"""
        if any(not math.isfinite(t) or t < 0 for t in v):
            raise ValueError("Evolution times must be finite and non-negative")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("Evolution times must be strictly increasing")
        return v

    @model_validator(mode="after")
    def validate_mode(self) -> "QuenchSpec":
        stepped = self.mode in (EvolutionMode.TROTTER, EvolutionMode.COMPILED)
        if stepped and self.averaging == Averaging.DENSE:
            raise ValueError(f"Dense averaging is not available in {self.mode.value} mode")
        if stepped:
            for t in self.times:
                steps = t / self.tau
                if round(steps) < 1 or abs(steps - round(steps)) > TROTTER_INTEGER_TOL * max(1.0, steps):
                    raise ValueError(
                        f"Time {t} s is not a positive integer multiple of tau={self.tau} s"
                    )
        return self


# Run configuration sections accepted from JSON files and flags

class ModelSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    m_z: float | str | None = None
    xi0: float = Field(XI0_DEFAULT, gt=0)
    xi_so: float = Field(XI_SO_DEFAULT, gt=0)


class QuenchSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    times_ms: list[float] = Field(default_factory=lambda: [0.5 * i for i in range(1, 11)], min_length=1)
    mode: EvolutionMode = EvolutionMode.TROTTER
    tau_ms: float = Field(0.25, gt=0)
    averaging: Averaging = Averaging.GRID
    dense_points: int = Field(DENSE_POINTS_DEFAULT, ge=2)
    noise_level: float | str = 0.0
    noise_samples: int = Field(NOISE_SAMPLES_DEFAULT, ge=1)


class SliceSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kz: float | str = "pi/6"
    n: int = Field(24, ge=8, le=4096)


class MeshSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(48, ge=16, le=512)
    delta: float | str = f"{SHELL_DELTA_REL}*xi0"


class NmrSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    J: float = Field(J_COUPLING_HZ, gt=0)
    tau_hard_us: float = Field(5.0, gt=0)
    eps: float = Field(PPS_EPS_DEFAULT, gt=0, lt=1)
    pulse_model: PulseModel = PulseModel.IDEAL


class NoiseSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    levels: list[float | str] = Field(
        default_factory=lambda: [0.0, "0.1*xi_so", "0.25*xi_so", "0.5*xi_so"], min_length=1
    )


class PulseSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    h: list[float | str] = Field(
        default_factory=lambda: ["-xi0", 0.0, 0.0, "-0.5*xi0"], min_length=4, max_length=4
    )
    tau_ms: float = Field(0.25, gt=0)


class RunConfig(BaseModel):
    """
    Validated configuration for one CLI run.

    Energy and angle fields accept expressions (see services.resolver); they
    are resolved to floats during validation so the echoed config is numeric.
    """
    model_config = ConfigDict(extra="forbid")

    case: Literal["I", "II", "III", "slice", "trivial"] | None = None
    model: ModelSection = Field(default_factory=ModelSection)
    quench: QuenchSection = Field(default_factory=QuenchSection)
    slice: SliceSection = Field(default_factory=SliceSection)
    mesh: MeshSection = Field(default_factory=MeshSection)
    nmr: NmrSection = Field(default_factory=NmrSection)
    noise: NoiseSection = Field(default_factory=NoiseSection)
    pulse: PulseSection = Field(default_factory=PulseSection)
    seed: int = Field(2022, ge=0, lt=2**64)
    workers: int = Field(0, ge=0)
    out_dir: str | None = None

    @model_validator(mode="after")
    def resolve_expressions(self) -> "RunConfig":
        """Replace string expressions with numbers and apply the case preset"""
        xi0, xi_so = self.model.xi0, self.model.xi_so

        if self.model.m_z is None:
            preset = CASE_PRESETS[self.case or "slice"]
            self.model.m_z = preset * xi0
        else:
            self.model.m_z = parse_energy(self.model.m_z, xi0, xi_so)

        self.quench.noise_level = parse_energy(self.quench.noise_level, xi0, xi_so)
        if self.quench.noise_level < 0:
            raise ValueError("Noise level must be non-negative")

        self.slice.kz = parse_angle(self.slice.kz)
        self.mesh.delta = parse_energy(self.mesh.delta, xi0, xi_so)
        if not 0 < self.mesh.delta < 0.5 * xi0:
            raise ValueError("Shell offset delta must lie in (0, 0.5*xi0)")

        self.noise.levels = [parse_energy(a, xi0, xi_so) for a in self.noise.levels]
        if any(a < 0 for a in self.noise.levels):
            raise ValueError("Noise levels must be non-negative")

        self.pulse.h = [parse_energy(c, xi0, xi_so) for c in self.pulse.h]
        return self

    def model_params(self) -> ModelParams:
        return ModelParams(m_z=float(self.model.m_z), xi0=self.model.xi0, xi_so=self.model.xi_so)

    def nmr_params(self) -> NmrParams:
        return NmrParams(J=self.nmr.J, tau_hard=self.nmr.tau_hard_us * 1e-6)

    def quench_spec(self, **overrides: Any) -> QuenchSpec:
        """Build the QuenchSpec this config describes; keyword overrides win"""
        fields: dict[str, Any] = {
            "params": self.model_params(),
            "times": ms_to_seconds(self.quench.times_ms),
            "mode": self.quench.mode,
            "tau": round(self.quench.tau_ms * 1e-3, 12),
            "noise_level": float(self.quench.noise_level),
            "noise_samples": self.quench.noise_samples,
            "seed": self.seed,
            "averaging": self.quench.averaging,
            "dense_points": self.quench.dense_points,
            "nmr": self.nmr_params(),
            "pulse_model": self.nmr.pulse_model,
        }
        fields.update(overrides)
        return QuenchSpec(**fields)

    def echo(self) -> dict[str, Any]:
        """Config as echoed into outputs; execution-only fields are left out"""
        return self.model_dump(mode="json", exclude={"workers", "out_dir"})

    def canonical_json(self) -> str:
        return json.dumps(self.echo(), sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()

    def metadata(self) -> "OutputMetadata":
        return OutputMetadata(
            version=__version__,
            config_sha256=self.sha256(),
            seed=self.seed,
            config=self.echo(),
        )


# Report schemas

class OutputMetadata(BaseModel):
    """Header written at the top of every output file"""
    tool: str = "aiii-quench"
    version: str
    config_sha256: str
    seed: int
    config: dict[str, Any]


class MeshStats(BaseModel):
    grid_n: int
    vertices: int
    triangles: int
    closed: bool
    components: int = Field(..., ge=0, description="Connected components of the mesh")


class WindingReport(BaseModel):
    """Result of the winding pipeline"""
    nu3_raw: float
    nu3_rounded: int
    analytic_oracle: float
    expected: int | None = Field(None, description="Equilibrium phase classification")
    mesh_stats: MeshStats | None = None
    shell_pairs: int = 0
    flagged_vertices: int = 0
    experiment_count: int = 0
    trotter_fidelity: float | None = Field(None, description="Mean exact-vs-Trotter gate fidelity over shell points and times")
    note: str | None = None


class NoiseRow(BaseModel):
    A: float
    nu3: float
    mean_abs_texture: float
    samples: int


class PulseReport(BaseModel):
    ideal_fidelity: float = Field(..., ge=0, le=1)
    finite_pulse_fidelity: float = Field(..., ge=0, le=1)
    total_duration: float = Field(..., ge=0, description="Wall duration in seconds")
    primitives: int = Field(..., ge=0)
    pure_gamma3: float = Field(..., description="<σz¹σz²> after one slice from the pure pre-quench state")
    pps_gamma3: float = Field(..., description="Same value read out from the pseudo-pure state, divided by eps")


class BisReport(BaseModel):
    slice_contours: int
    slice_points: int
    expected: int | None = None
    mesh_stats: MeshStats | None = None
    note: str | None = None


class ErrorReport(BaseModel):
    """Error payload printed on failure"""
    error: str = Field(..., description="Error code")
    message: str = Field(..., description="Human-readable error message")
    details: dict | None = Field(None, description="Additional error details")
