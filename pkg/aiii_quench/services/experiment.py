"""
Quench Experiment Service.

This service orchestrates the measurement pipelines behind each command:
1. Slice textures on a 2D momentum grid
2. Band-inversion surface location (slice contours, 3D mesh, bands)
3. Shell sampling, dynamical field and winding number
4. Dephasing sweeps over noise amplitudes
5. NMR compilation of a single Trotter slice
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from aiii_quench.schemas import (
    Averaging,
    BisReport,
    EvolutionMode,
    NoiseRow,
    OutputMetadata,
    PulseModel,
    PulseReport,
    QuenchSpec,
    RunConfig,
    WindingReport,
)
from aiii_quench.services import export
from aiii_quench.services.dynamics import trotter_fidelity_report, trotter_slice
from aiii_quench.services.mesh import BisMesh, EmptyBisError, grid_axis
from aiii_quench.services.model import (
    BOUNDARY_FLAG,
    HVector,
    Momentum,
    band_energies,
    phase_oracle,
    prequench_ground_state,
    so_field_values,
)
from aiii_quench.services.nmr import (
    apply_sequence,
    compile_slice,
    prepare_initial_state,
    readout_expectations,
    simulate_sequence,
)
from aiii_quench.services.qops import GAMMA3, expectation, fidelity_unitary
from aiii_quench.services.sweep import averaged_textures
from aiii_quench.services.topology import (
    BoundaryParamsError,
    DynamicalField,
    ShellPair,
    dynamical_field,
    extract_bis_mesh,
    find_bis_slice,
    mesh_stats,
    normalized,
    offset_shells,
    winding_number,
)

logger = logging.getLogger(__name__)

# Readout settings per point: one for (γ1, γ2), one for γ3
READOUT_SETTINGS = 2


def experiment_count(points_per_surface: int, n_times: int) -> int:
    """Single-shot experiments: points x 2 shells x readout settings x times."""
    return points_per_surface * 2 * READOUT_SETTINGS * n_times


@dataclass
class RunResult:
    """What a command produced"""
    report: BaseModel | list[NoiseRow] | None
    paths: list[Path] = field(default_factory=list)


@dataclass
class _SurfaceSample:
    mesh: BisMesh
    pairs: list[ShellPair]


class QuenchExperimentService:
    """
    High-level service running one configured experiment per call.

    Computation is delegated to the topology, dynamics and nmr services;
    this class wires configuration to them and writes every output file.
    """

    def __init__(self, config: RunConfig, out_dir: Path, workers: int | None = None):
        """
        Initialize the experiment service.

        Args:
            config: Validated run configuration
            out_dir: Directory receiving the output files
            workers: Worker processes for momentum sweeps (default: config.workers)
        """
        self.config = config
        self.out_dir = Path(out_dir)
        self.workers = config.workers if workers is None else workers
        self.params = config.model_params()
        self.metadata: OutputMetadata = config.metadata()

        self.logger = logging.getLogger(f"{__name__}.{self.__class__.__name__}")
        self.logger.info(f"Experiment service initialized: m_z={self.params.m_z:.6g} rad/s, out_dir={self.out_dir}")

    def _expected_phase(self) -> int:
        expected = phase_oracle(self.params)
        if expected == BOUNDARY_FLAG:
            raise BoundaryParamsError(f"m_z={self.params.m_z} lies on a phase boundary")
        return int(expected)

    def run_textures(self) -> RunResult:
        """Time-averaged textures on the n x n slice at fixed kz, row-major in (kx, ky)."""
        spec = self.config.quench_spec()
        n, kz = self.config.slice.n, float(self.config.slice.kz)
        axis = grid_axis(n)
        kx, ky = np.meshgrid(axis, axis, indexing="ij")
        points = np.stack([kx.ravel(), ky.ravel(), np.full(n * n, kz)], axis=1)

        self.logger.info(f"Textures on a {n}x{n} slice at kz={kz:.4f} in {spec.mode.value} mode")
        textures = averaged_textures(spec, points, workers=self.workers)

        rows = [(*point, *texture) for point, texture in zip(points, textures)]
        path = export.write_csv(
            self.out_dir / "textures.csv",
            self.metadata,
            ["kx", "ky", "kz", "g1bar", "g2bar", "g3bar"],
            rows,
        )
        return RunResult(report=None, paths=[path])

    def run_bis(self) -> RunResult:
        """Slice contours, the 3D surface and a band cut along kx."""
        kz = float(self.config.slice.kz)
        contours = find_bis_slice(self.params, kz, self.config.slice.n)
        paths = []

        contour_rows = [
            (index, *point, kz) for index, contour in enumerate(contours) for point in contour.points
        ]
        paths.append(
            export.write_csv(self.out_dir / "bis_slice.csv", self.metadata, ["contour", "kx", "ky", "kz"], contour_rows)
        )

        stats, note = None, None
        expected = phase_oracle(self.params)
        try:
            mesh = extract_bis_mesh(self.params, self.config.mesh.n)
            stats = mesh_stats(mesh)
            paths.append(export.write_off(self.out_dir / "bis_mesh.off", self.metadata, mesh.vertices, mesh.triangles))
        except EmptyBisError as e:
            note = f"EmptyBis: {e}"
            self.logger.warning(note)

        band_rows = []
        for k in grid_axis(self.config.slice.n):
            energies = band_energies(self.params, Momentum(float(k), 0.0, kz))
            band_rows.append((k, *energies))
        paths.append(
            export.write_csv(self.out_dir / "bands.csv", self.metadata, ["kx", "E1", "E2", "E3", "E4"], band_rows)
        )

        report = BisReport(
            slice_contours=len(contours),
            slice_points=len(contour_rows),
            expected=None if expected == BOUNDARY_FLAG else int(expected),
            mesh_stats=stats,
            note=note,
        )
        paths.append(export.write_json(self.out_dir / "bis.json", self.metadata, report))
        return RunResult(report=report, paths=paths)

    def _sample_surface(self) -> _SurfaceSample | None:
        try:
            mesh = extract_bis_mesh(self.params, self.config.mesh.n)
        except EmptyBisError as e:
            self.logger.warning(f"EmptyBis: {e}")
            return None
        pairs = offset_shells(mesh, self.params, float(self.config.mesh.delta))
        return _SurfaceSample(mesh=mesh, pairs=pairs)

    def _winding_of(self, sample: _SurfaceSample, spec: QuenchSpec) -> tuple[float, DynamicalField]:
        field_ = dynamical_field(spec, sample.pairs, workers=self.workers)
        nu3 = winding_number(sample.mesh.with_field(field_.unit, field_.flagged))
        return nu3, field_

    def run_winding(self) -> RunResult:
        """Winding number from the dynamical field on the shell pairs."""
        expected = self._expected_phase()
        spec = self.config.quench_spec()
        sample = self._sample_surface()

        if sample is None:
            report = WindingReport(
                nu3_raw=0.0,
                nu3_rounded=0,
                analytic_oracle=0.0,
                expected=expected,
                note="EmptyBis: no band-inversion surface, winding number is 0",
            )
            path = export.write_json(self.out_dir / "winding.json", self.metadata, report)
            return RunResult(report=report, paths=[path])

        nu3, field_ = self._winding_of(sample, spec)
        oracle_field = normalized(so_field_values(self.params, sample.mesh.vertices))
        oracle = winding_number(sample.mesh.with_field(oracle_field))

        n_times = spec.dense_points if spec.averaging == Averaging.DENSE else len(spec.times)
        fidelity = None
        if spec.mode in (EvolutionMode.TROTTER, EvolutionMode.COMPILED):
            momenta = [m for pair in sample.pairs for m in (pair.point_minus, pair.point_plus)]
            fidelity = trotter_fidelity_report(self.params, momenta, spec.times, spec.tau).mean

        report = WindingReport(
            nu3_raw=nu3,
            nu3_rounded=int(round(nu3)),
            analytic_oracle=oracle,
            expected=expected,
            mesh_stats=mesh_stats(sample.mesh),
            shell_pairs=len(sample.pairs),
            flagged_vertices=field_.flagged_count,
            experiment_count=experiment_count(len(sample.pairs), n_times),
            trotter_fidelity=fidelity,
        )
        self.logger.info(f"nu3 = {nu3:.6f} (oracle {oracle:.6f}, expected {expected})")

        paths = [
            export.write_json(self.out_dir / "winding.json", self.metadata, report),
            export.write_csv(
                self.out_dir / "field.csv",
                self.metadata,
                ["vertex", "kx", "ky", "kz", "g1", "g2", "g3", "flagged"],
                [
                    (i, *vertex, *g, bool(flag))
                    for i, (vertex, g, flag) in enumerate(zip(sample.mesh.vertices, field_.unit, field_.flagged))
                ],
            ),
        ]
        return RunResult(report=report, paths=paths)

    def run_noise(self) -> RunResult:
        """Winding number and texture magnitude for each dephasing amplitude."""
        self._expected_phase()
        sample = self._sample_surface()
        rows = []
        for amplitude in self.config.noise.levels:
            spec = self.config.quench_spec(mode=EvolutionMode.NOISY, noise_level=float(amplitude))
            if sample is None:
                nu3, magnitude = 0.0, 0.0
            else:
                nu3, field_ = self._winding_of(sample, spec)
                magnitude = float(
                    np.mean(np.abs(np.concatenate([field_.texture_minus, field_.texture_plus])))
                )
            self.logger.info(f"A={amplitude:.6g}: nu3={nu3:.6f}, mean |texture|={magnitude:.6g}")
            rows.append(NoiseRow(A=float(amplitude), nu3=nu3, mean_abs_texture=magnitude, samples=spec.noise_samples))

        path = export.write_csv(
            self.out_dir / "noise.csv",
            self.metadata,
            ["A", "nu3", "mean_abs_texture", "samples"],
            [(row.A, row.nu3, row.mean_abs_texture, row.samples) for row in rows],
        )
        return RunResult(report=rows, paths=[path])

    def run_pulse(self) -> RunResult:
        """Compile one Trotter slice for the configured h and check it against the ideal product."""
        h = HVector(*(float(c) for c in self.config.pulse.h))
        tau = round(self.config.pulse.tau_ms * 1e-3, 12)
        nmr = self.config.nmr_params()

        sequence = compile_slice(h, tau, nmr)
        target = trotter_slice(h, tau)

        # Traceless readout of the PPS scales the pure-state value by eps
        psi = target @ prequench_ground_state()
        rho = apply_sequence(sequence, prepare_initial_state(nmr, self.config.nmr.eps), nmr)
        pps_gamma3 = readout_expectations(rho).gamma3 / self.config.nmr.eps

        report = PulseReport(
            ideal_fidelity=fidelity_unitary(target, simulate_sequence(sequence, nmr, PulseModel.IDEAL)),
            finite_pulse_fidelity=fidelity_unitary(target, simulate_sequence(sequence, nmr, PulseModel.FINITE)),
            total_duration=sequence.duration,
            primitives=len(sequence),
            pure_gamma3=expectation(GAMMA3, psi),
            pps_gamma3=pps_gamma3,
        )
        self.logger.info(
            f"Compiled {len(sequence)} primitives, {sequence.duration * 1e3:.4f} ms; "
            f"fidelity ideal {report.ideal_fidelity:.12f}, finite {report.finite_pulse_fidelity:.6f}"
        )
        paths = [
            export.write_text(self.out_dir / "pulse.txt", self.metadata, sequence.to_text()),
            export.write_json(self.out_dir / "pulse.json", self.metadata, report),
        ]
        return RunResult(report=report, paths=paths)
