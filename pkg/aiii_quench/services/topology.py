"""
Band-inversion surface, offset shells, dynamical field and winding number.

The winding number is the degree of a unit field over the closed,
grad-h0-oriented surface, summed as signed solid angles of its triangles.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from aiii_quench.constants import (
    BIS_REFINE_TOL_REL,
    FLAGGED_FRACTION_MAX,
    G_FLOOR,
    SHELL_MAX_PATH,
    SHELL_SCAN_STEPS,
    WINDING_SIGN,
)
from aiii_quench.schemas import MeshStats, ModelParams, QuenchSpec
from aiii_quench.services.mesh import (
    BisMesh,
    DegenerateGradientError,
    EmptyBisError,
    OpenMeshError,
    SliceContour,
    TopologyError,
    count_components,
    extract_isosurface,
    grid_axis,
    is_closed,
    marching_squares,
)
from aiii_quench.services.model import (
    BOUNDARY_FLAG,
    Momentum,
    grad_h0,
    h0_values,
    phase_oracle,
    so_field_values,
)
from aiii_quench.services.sweep import averaged_textures

logger = logging.getLogger(__name__)


class NoConvergenceError(TopologyError):
    """Raised when an offset-shell root is not bracketed along the gradient path"""
    pass


class ZeroFieldError(TopologyError):
    """Raised when no vertex carries a usable field direction"""
    pass


class FieldGapError(TopologyError):
    """Raised when too many vertices are flagged for the degree sum"""
    pass


class BoundaryParamsError(TopologyError, ValueError):
    """Raised when m_z sits on a phase boundary"""
    pass


def require_non_boundary(p: ModelParams) -> None:
    if phase_oracle(p) == BOUNDARY_FLAG:
        raise BoundaryParamsError(f"m_z={p.m_z} lies on a phase boundary; the surface is not a manifold")


def find_bis_slice(p: ModelParams, kz: float, n: int) -> list[SliceContour]:
    """
    h0 = 0 contours on the periodic (kx, ky) torus at fixed kz.

    Args:
        p: Model parameters
        kz: Fixed wavenumber
        n: Grid points per axis (>= 8)

    Returns:
        Closed polylines; empty when h0 keeps one sign on the slice
    """
    if n < 8:
        raise ValueError(f"Slice grid needs n >= 8, got {n}")
    axis = grid_axis(n)
    kx, ky = np.meshgrid(axis, axis, indexing="ij")
    values = h0_values(p, kx, ky, kz)
    contours = marching_squares(values, kz)
    logger.info(f"Slice kz={kz:.4f}, n={n}: {len(contours)} contour(s)")
    return contours


def extract_bis_mesh(p: ModelParams, n: int) -> BisMesh:
    """
    Closed triangulation of the band-inversion surface h0 = 0.

    Raises:
        BoundaryParamsError: When m_z is on a phase boundary
        EmptyBisError: When h0 never changes sign
        DegenerateGradientError: When a vertex cannot be refined
        OpenMeshError: When the triangulation is not closed
    """
    if n < 16:
        raise ValueError(f"Mesh grid needs n >= 16, got {n}")
    require_non_boundary(p)
    mesh = extract_isosurface(p, n)
    if not is_closed(mesh):
        raise OpenMeshError(f"Surface at n={n} is not closed and consistently oriented")
    return mesh


def mesh_stats(mesh: BisMesh) -> MeshStats:
    return MeshStats(
        grid_n=mesh.grid_n,
        vertices=mesh.n_vertices,
        triangles=mesh.n_triangles,
        closed=is_closed(mesh),
        components=count_components(mesh),
    )


@dataclass(frozen=True)
class ShellPair:
    """Points on h0 = -delta and h0 = +delta reached from one surface vertex"""
    point_minus: Momentum
    point_plus: Momentum
    delta_k: float
    base_vertex: int


def _root_along(p: ModelParams, origin: np.ndarray, direction: np.ndarray, target: float) -> float:
    """Smallest s in (0, SHELL_MAX_PATH] with h0(origin + s·direction) = target."""

    def residual(s: float) -> float:
        k = origin + s * direction
        return float(h0_values(p, k[0], k[1], k[2])) - target

    steps = np.linspace(0.0, SHELL_MAX_PATH, SHELL_SCAN_STEPS + 1)
    path = origin[None, :] + steps[:, None] * direction[None, :]
    values = h0_values(p, path[:, 0], path[:, 1], path[:, 2]) - target
    start_sign = np.sign(values[0])
    changed = np.flatnonzero(np.sign(values[1:]) != start_sign)
    if len(changed) == 0:
        raise NoConvergenceError(
            f"h0 = {target:.6g} not reached within path length {SHELL_MAX_PATH:.4f} from k={origin.tolist()}"
        )
    j = int(changed[0]) + 1
    if values[j] == 0.0:
        return float(steps[j])
    return float(brentq(residual, steps[j - 1], steps[j], xtol=1e-12))


def offset_shells(mesh: BisMesh, p: ModelParams, delta: float) -> list[ShellPair]:
    """
    Walk from every vertex along -grad h0 and +grad h0 to h0 = -delta and +delta.

    Args:
        mesh: Band-inversion surface
        p: Model parameters
        delta: Shell offset in rad/s, 0 < delta < 0.5·xi0

    Returns:
        One ShellPair per vertex, in vertex order

    Raises:
        NoConvergenceError: When a shell is not reached within SHELL_MAX_PATH
    """
    if not 0.0 < delta < 0.5 * p.xi0:
        raise ValueError(f"Shell offset must lie in (0, {0.5 * p.xi0}), got {delta}")
    tol = BIS_REFINE_TOL_REL * p.xi0
    pairs = []
    for index, vertex in enumerate(mesh.vertices):
        grad = grad_h0(p, vertex)
        norm = float(np.linalg.norm(grad))
        if norm == 0.0:
            raise DegenerateGradientError(f"grad h0 vanishes at vertex {index}")
        unit = grad / norm
        s_plus = _root_along(p, vertex, unit, delta)
        s_minus = _root_along(p, vertex, -unit, -delta)
        plus = vertex + s_plus * unit
        minus = vertex - s_minus * unit
        for point, target in ((plus, delta), (minus, -delta)):
            miss = abs(float(h0_values(p, point[0], point[1], point[2])) - target)
            if miss > tol:
                raise NoConvergenceError(f"Shell point of vertex {index} misses h0={target:.6g} by {miss:.3e}")
        pairs.append(
            ShellPair(
                point_minus=Momentum.from_array(minus),
                point_plus=Momentum.from_array(plus),
                delta_k=s_plus + s_minus,
                base_vertex=index,
            )
        )
    logger.info(f"Sampled {len(pairs)} shell pairs at delta={delta:.6g}")
    return pairs


def shell_points(pairs: list[ShellPair]) -> tuple[np.ndarray, np.ndarray]:
    """
    Flatten pairs into sweep inputs.

    Returns:
        (points of shape (2P, 3) ordered minus, plus per pair; stable noise indices)
    """
    points = np.empty((2 * len(pairs), 3))
    indices = np.empty(2 * len(pairs), dtype=np.int64)
    for i, pair in enumerate(pairs):
        points[2 * i] = pair.point_minus.as_array()
        points[2 * i + 1] = pair.point_plus.as_array()
        indices[2 * i] = 2 * pair.base_vertex
        indices[2 * i + 1] = 2 * pair.base_vertex + 1
    return points, indices


@dataclass(frozen=True)
class DynamicalField:
    """Per-vertex field g, its direction and the shell textures it came from"""
    g: np.ndarray
    unit: np.ndarray
    flagged: np.ndarray
    texture_minus: np.ndarray
    texture_plus: np.ndarray

    @property
    def flagged_count(self) -> int:
        return int(np.count_nonzero(self.flagged))

    @property
    def flagged_fraction(self) -> float:
        return self.flagged_count / len(self.flagged) if len(self.flagged) else 0.0


def field_from_textures(
    pairs: list[ShellPair],
    texture_minus: np.ndarray,
    texture_plus: np.ndarray,
) -> DynamicalField:
    """
    g = -(texture(+delta) - texture(-delta)) / delta_k, normalised per vertex.

    Vertices with |g| < G_FLOOR are flagged and get a zero direction.
    """
    delta_k = np.array([pair.delta_k for pair in pairs])
    g = -(texture_plus - texture_minus) / delta_k[:, None]
    norm = np.linalg.norm(g, axis=1)
    flagged = norm < G_FLOOR
    safe = np.where(flagged, 1.0, norm)
    unit = np.where(flagged[:, None], 0.0, g / safe[:, None])
    if len(pairs) and np.all(flagged):
        raise ZeroFieldError("Dynamical field is below the floor at every vertex")
    if np.any(flagged):
        logger.warning(f"{int(np.count_nonzero(flagged))} of {len(pairs)} vertices have |g| < {G_FLOOR}")
    return DynamicalField(g=g, unit=unit, flagged=flagged, texture_minus=texture_minus, texture_plus=texture_plus)


def dynamical_field(spec: QuenchSpec, pairs: list[ShellPair], workers: int = 1) -> DynamicalField:
    """
    Measure time-averaged textures on both shells and form the dynamical field.

    Args:
        spec: Quench protocol (mode, times, noise)
        pairs: Output of offset_shells
        workers: Worker processes for the texture sweep (0 = all cores)

    Returns:
        DynamicalField in pair order

    Raises:
        ZeroFieldError: When every vertex is flagged
    """
    points, indices = shell_points(pairs)
    textures = averaged_textures(spec, points, indices, workers=workers)
    return field_from_textures(pairs, textures[0::2], textures[1::2])


def solid_angles(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """
    Signed solid angles of spherical triangles with unit corners a, b, c.

    Swapping b and c negates every value exactly.
    """
    triple = np.einsum("ij,ij->i", a, np.cross(b, c))
    dots = np.stack(
        [np.einsum("ij,ij->i", a, b), np.einsum("ij,ij->i", b, c), np.einsum("ij,ij->i", c, a)],
        axis=1,
    )
    return 2.0 * np.arctan2(triple, 1.0 + np.sum(np.sort(dots, axis=1), axis=1))


def winding_number(mesh: BisMesh) -> float:
    """
    Degree of the vertex field over the closed surface, unrounded.

    Triangles touching a flagged vertex are skipped.

    Raises:
        OpenMeshError: When the mesh is not closed
        FieldGapError: When FLAGGED_FRACTION_MAX or more of the vertices are flagged
    """
    if mesh.field is None:
        raise ValueError("Mesh carries no vertex field")
    if not is_closed(mesh):
        raise OpenMeshError("Winding number needs a closed, consistently oriented surface")
    flagged = mesh.flagged if mesh.flagged is not None else np.zeros(mesh.n_vertices, dtype=bool)
    fraction = np.count_nonzero(flagged) / max(mesh.n_vertices, 1)
    if fraction >= FLAGGED_FRACTION_MAX:
        raise FieldGapError(f"{fraction:.2%} of vertices are flagged (limit {FLAGGED_FRACTION_MAX:.0%})")

    usable = ~np.any(flagged[mesh.triangles], axis=1)
    triangles = mesh.triangles[usable]
    a, b, c = (mesh.field[triangles[:, m]] for m in range(3))
    total = float(np.sum(solid_angles(a, b, c)))
    return WINDING_SIGN * total / (4.0 * math.pi)


def normalized(vectors: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(vectors, axis=1)
    if np.any(norm == 0.0):
        raise ZeroFieldError("Cannot normalise a vanishing vector")
    return vectors / norm[:, None]


def winding_number_analytic_oracle(p: ModelParams, n: int) -> float:
    """
    Winding number from the equilibrium field (h1, h2, h3)/|.| on the surface.

    Returns 0.0 when there is no band-inversion surface.
    """
    try:
        mesh = extract_bis_mesh(p, n)
    except EmptyBisError:
        logger.info(f"No band-inversion surface for m_z={p.m_z}; winding number is 0")
        return 0.0
    field = normalized(so_field_values(p, mesh.vertices))
    return winding_number(mesh.with_field(field))


__all__ = [
    "BisMesh",
    "BoundaryParamsError",
    "DegenerateGradientError",
    "DynamicalField",
    "EmptyBisError",
    "FieldGapError",
    "NoConvergenceError",
    "OpenMeshError",
    "ShellPair",
    "SliceContour",
    "TopologyError",
    "ZeroFieldError",
    "dynamical_field",
    "extract_bis_mesh",
    "field_from_textures",
    "find_bis_slice",
    "mesh_stats",
    "offset_shells",
    "shell_points",
    "solid_angles",
    "winding_number",
    "winding_number_analytic_oracle",
]
