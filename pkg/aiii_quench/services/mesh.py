"""
Iso-surface and iso-line extraction of h0 = 0 on the periodic Brillouin zone.

The zone is sampled on an n-point grid per axis, k_i = -pi + 2pi(i + 1/2)/n,
and treated as a torus: index n wraps to 0. Surfaces come from marching
tetrahedra over the Kuhn split of every cube (six tetrahedra sharing the
main diagonal), lines from marching squares. Crossing points are keyed by
the global grid edge they lie on, so neighbouring cells share vertices and
the output is closed by construction.
"""

import itertools
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from aiii_quench.constants import BIS_REFINE_TOL_REL, DEGENERATE_GRADIENT_REL
from aiii_quench.errors import QuenchError
from aiii_quench.schemas import ModelParams
from aiii_quench.services.model import grad_h0, h0_values, wrap_array

logger = logging.getLogger(__name__)


class TopologyError(QuenchError):
    """Base exception for band-inversion surface and winding failures"""
    pass


class EmptyBisError(TopologyError):
    """Raised when h0 has a constant sign and no band-inversion surface exists"""
    pass


class DegenerateGradientError(TopologyError):
    """Raised when |grad h0| vanishes at a surface vertex"""
    pass


class OpenMeshError(TopologyError):
    """Raised when a surface is not closed and consistently oriented"""
    pass


_REFINE_MAX_ITER = 50

_KUHN_PATHS = tuple(itertools.permutations(range(3)))


def _parity(seq) -> int:
    inversions = sum(1 for a, b in itertools.combinations(seq, 2) if a > b)
    return -1 if inversions % 2 else 1


def _build_triangle_table() -> dict[tuple[int, int], list[tuple[tuple[int, int], ...]]]:
    """
    Triangles per (Kuhn tetrahedron, sign pattern), as triples of local edges.

    Bit v of the pattern is set when corner v is positive. Triangles are
    wound so their normal points from the negative towards the positive
    corners; the handedness of each tetrahedron is the parity of its path.
    """
    table = {}
    for tet, path in enumerate(_KUHN_PATHS):
        handedness = _parity(path)
        for pattern in range(16):
            positive = [v for v in range(4) if pattern >> v & 1]
            negative = [v for v in range(4) if not pattern >> v & 1]
            triangles = []
            if len(positive) in (1, 3):
                lone = positive[0] if len(positive) == 1 else negative[0]
                others = [v for v in range(4) if v != lone]
                orient = handedness * _parity((lone, *others))
                edges = [(lone, q) for q in others]
                keep = orient < 0 if len(positive) == 1 else orient > 0
                if not keep:
                    edges = [edges[0], edges[2], edges[1]]
                triangles.append(tuple(edges))
            elif len(positive) == 2:
                a, b = positive
                c, d = negative
                ac, ad, bd, bc = (a, c), (a, d), (b, d), (b, c)
                if handedness * _parity((a, b, c, d)) > 0:
                    triangles += [(ac, bc, bd), (ac, bd, ad)]
                else:
                    triangles += [(ac, ad, bd), (ac, bd, bc)]
            table[tet, pattern] = triangles
    return table


_TRIANGLE_TABLE = _build_triangle_table()


def grid_axis(n: int) -> np.ndarray:
    """Cell-centred sample points along one axis."""
    return -math.pi + 2.0 * math.pi * (np.arange(n) + 0.5) / n


def h0_grid(p: ModelParams, n: int) -> np.ndarray:
    """h0 on the n^3 grid, indexed [i, j, l] for (kx, ky, kz)."""
    axis = grid_axis(n)
    kx, ky, kz = np.meshgrid(axis, axis, axis, indexing="ij")
    return h0_values(p, kx, ky, kz)


def _node_coordinates(ids: np.ndarray, n: int, dims: int) -> np.ndarray:
    axis = grid_axis(n)
    coords = []
    for power in reversed(range(dims)):
        coords.append(axis[(ids // n**power) % n])
    return np.stack(coords, axis=-1)


def _edge_points(keys: np.ndarray, values: np.ndarray, n: int, dims: int) -> np.ndarray:
    """
    Linear zero crossings on grid edges, computed from the lower node id.

    Args:
        keys: Edge keys low * n^dims + high
        values: Flattened field
    """
    size = n**dims
    low, high = keys // size, keys % size
    f_low, f_high = values[low], values[high]
    t = f_low / (f_low - f_high)
    start = _node_coordinates(low, n, dims)
    step = wrap_array(_node_coordinates(high, n, dims) - start)
    return wrap_array(start + t[:, None] * step)


@dataclass(frozen=True)
class BisMesh:
    """
    Triangulated band-inversion surface.

    Vertices are canonical momenta; triangles are wound so that their normal
    follows grad h0 (from h0 < 0 towards h0 > 0). `field` holds an optional
    unit vector per vertex and `flagged` marks vertices without a direction.
    """
    vertices: np.ndarray
    triangles: np.ndarray
    grid_n: int
    field: np.ndarray | None = None
    flagged: np.ndarray | None = None

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def with_field(self, field: np.ndarray, flagged: np.ndarray | None = None) -> "BisMesh":
        field = np.asarray(field, dtype=float)
        if field.shape != (self.n_vertices, 3):
            raise ValueError(f"Field must have shape ({self.n_vertices}, 3), got {field.shape}")
        if flagged is None:
            flagged = np.zeros(self.n_vertices, dtype=bool)
        return replace(self, field=field, flagged=np.asarray(flagged, dtype=bool))

    def reversed(self) -> "BisMesh":
        """Same surface with every triangle wound the other way."""
        return replace(self, triangles=self.triangles[:, [0, 2, 1]])


def marching_tetrahedra(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Zero iso-surface of a periodic scalar field.

    Args:
        values: Array of shape (n, n, n)

    Returns:
        (edge keys of the vertices in ascending order, triangles as vertex indices)
    """
    n = values.shape[0]
    size = n**3
    flat = values.ravel()
    axis = np.arange(n)
    j, l = np.meshgrid(axis, axis, indexing="ij")
    j, l = j.ravel(), l.ravel()
    unit = np.eye(3, dtype=np.int64)

    tri_keys = []
    tri_order = []
    for i in range(n):
        origins = np.stack([np.full_like(j, i), j, l], axis=1)
        cube_ids = (i * n * n + j * n + l).astype(np.int64)
        for tet, path in enumerate(_KUHN_PATHS):
            corners = [origins]
            for step in path:
                corners.append(corners[-1] + unit[step])
            ids = np.stack(
                [((c[:, 0] % n) * n + c[:, 1] % n) * n + c[:, 2] % n for c in corners],
                axis=1,
            ).astype(np.int64)
            positive = flat[ids] > 0
            pattern = (positive * (1 << np.arange(4))).sum(axis=1)
            for code in np.unique(pattern):
                triangles = _TRIANGLE_TABLE[tet, int(code)]
                if not triangles:
                    continue
                chosen = np.flatnonzero(pattern == code)
                for sub, triangle in enumerate(triangles):
                    keys = []
                    for a, b in triangle:
                        lo = np.minimum(ids[chosen, a], ids[chosen, b])
                        hi = np.maximum(ids[chosen, a], ids[chosen, b])
                        keys.append(lo * size + hi)
                    tri_keys.append(np.stack(keys, axis=1))
                    # cube, then tetrahedron, then triangle within the tetrahedron
                    tri_order.append((cube_ids[chosen] * 6 + tet) * 2 + sub)

    if not tri_keys:
        return np.empty(0, dtype=np.int64), np.empty((0, 3), dtype=np.int64)

    keys = np.concatenate(tri_keys)
    order = np.argsort(np.concatenate(tri_order), kind="stable")
    keys = keys[order]
    vertex_keys, inverse = np.unique(keys, return_inverse=True)
    return vertex_keys, inverse.reshape(-1, 3).astype(np.int64)


def refine_vertices(p: ModelParams, vertices: np.ndarray, tol_rel: float = BIS_REFINE_TOL_REL) -> np.ndarray:
    """
    Newton steps k <- k - h0·grad h0 / |grad h0|^2 until |h0| <= tol_rel·xi0.

    Raises:
        DegenerateGradientError: When |grad h0| < DEGENERATE_GRADIENT_REL·xi0
    """
    k = np.array(vertices, dtype=float)
    tol = tol_rel * p.xi0
    for _ in range(_REFINE_MAX_ITER):
        h0 = h0_values(p, k[:, 0], k[:, 1], k[:, 2])
        if np.all(np.abs(h0) <= tol):
            break
        grad = grad_h0(p, k)
        norm2 = np.einsum("ij,ij->i", grad, grad)
        if np.any(norm2 < (DEGENERATE_GRADIENT_REL * p.xi0) ** 2):
            worst = int(np.argmin(norm2))
            raise DegenerateGradientError(f"grad h0 vanishes near vertex {worst} at k={k[worst].tolist()}")
        k = k - (h0 / norm2)[:, None] * grad
    else:
        h0 = h0_values(p, k[:, 0], k[:, 1], k[:, 2])
        if np.any(np.abs(h0) > tol):
            logger.warning(f"Vertex refinement stopped with max |h0| = {np.max(np.abs(h0)):.3e}")
    return wrap_array(k)


def triangulate(values: np.ndarray) -> BisMesh:
    """Zero iso-surface of a periodic (n, n, n) field with linearly interpolated vertices."""
    n = values.shape[0]
    keys, triangles = marching_tetrahedra(values)
    return BisMesh(vertices=_edge_points(keys, values.ravel(), n, 3), triangles=triangles, grid_n=n)


def extract_isosurface(p: ModelParams, n: int) -> BisMesh:
    """
    Triangulate h0 = 0 and refine its vertices onto the exact surface.

    Raises:
        EmptyBisError: When h0 does not change sign on the grid
    """
    values = h0_grid(p, n)
    if np.all(values > 0) or np.all(values <= 0):
        raise EmptyBisError(f"h0 has constant sign for m_z={p.m_z}")
    raw = triangulate(values)
    vertices = refine_vertices(p, raw.vertices)
    triangles = raw.triangles
    logger.info(f"Surface at n={n}: {len(vertices)} vertices, {len(triangles)} triangles")
    return BisMesh(vertices=vertices, triangles=triangles, grid_n=n)


def triangle_normals(mesh: BisMesh) -> np.ndarray:
    """Unnormalised normals (b - a) x (c - a) using minimal-image differences."""
    a, b, c = (mesh.vertices[mesh.triangles[:, m]] for m in range(3))
    return np.cross(wrap_array(b - a), wrap_array(c - a))


def triangle_centroids(mesh: BisMesh) -> np.ndarray:
    a, b, c = (mesh.vertices[mesh.triangles[:, m]] for m in range(3))
    return wrap_array(a + (wrap_array(b - a) + wrap_array(c - a)) / 3.0)


def edge_report(triangles: np.ndarray, n_vertices: int) -> tuple[bool, bool]:
    """
    Closure and orientation consistency.

    Returns:
        (every undirected edge is used by exactly two triangles,
         no directed edge repeats, so neighbours are wound alike)
    """
    if len(triangles) == 0:
        return False, False
    tails = triangles.ravel()
    heads = triangles[:, [1, 2, 0]].ravel()
    directed = tails.astype(np.int64) * n_vertices + heads
    undirected = np.minimum(tails, heads).astype(np.int64) * n_vertices + np.maximum(tails, heads)
    _, counts = np.unique(undirected, return_counts=True)
    closed = bool(np.all(counts == 2))
    consistent = len(np.unique(directed)) == len(directed)
    return closed, consistent


def is_closed(mesh: BisMesh) -> bool:
    closed, consistent = edge_report(mesh.triangles, mesh.n_vertices)
    return closed and consistent


def count_components(mesh: BisMesh) -> int:
    """Connected components of the vertex graph."""
    if mesh.n_vertices == 0:
        return 0
    tails = mesh.triangles.ravel()
    heads = mesh.triangles[:, [1, 2, 0]].ravel()
    graph = coo_matrix((np.ones(len(tails)), (tails, heads)), shape=(mesh.n_vertices, mesh.n_vertices))
    n_components, _ = connected_components(graph, directed=False)
    return int(n_components)


@dataclass(frozen=True)
class SliceContour:
    """Closed h0 = 0 polyline in the (kx, ky) plane at fixed kz"""
    points: np.ndarray
    kz: float
    closed: bool = True

    def __len__(self) -> int:
        return len(self.points)


# Marching-squares edges: (corner, corner) with corners c0=(i,j), c1=(i+1,j), c2=(i+1,j+1), c3=(i,j+1)
_SQUARE_EDGES = ((0, 1), (1, 2), (2, 3), (3, 0))


def marching_squares(values: np.ndarray, kz: float = 0.0) -> list[SliceContour]:
    """
    Zero contours of a periodic (n, n) field, chained into closed polylines.

    Saddle cells are resolved by the sign of the cell-centre average.
    """
    n = values.shape[0]
    size = n * n
    flat = values.ravel()
    adjacency: dict[int, list[int]] = {}

    for i in range(n):
        for j in range(n):
            corners = (
                i * n + j,
                ((i + 1) % n) * n + j,
                ((i + 1) % n) * n + (j + 1) % n,
                i * n + (j + 1) % n,
            )
            signs = [flat[c] > 0 for c in corners]
            crossing = [e for e, (a, b) in enumerate(_SQUARE_EDGES) if signs[a] != signs[b]]
            if not crossing:
                continue
            if len(crossing) == 2:
                pairs = [tuple(crossing)]
            else:
                centre_positive = float(np.mean([flat[c] for c in corners])) > 0
                if centre_positive == signs[0]:
                    # corners 0 and 2 joined through the centre; cut off 1 and 3
                    pairs = [(0, 1), (2, 3)]
                else:
                    pairs = [(3, 0), (1, 2)]
            for e1, e2 in pairs:
                k1 = _square_edge_key(corners, e1, size)
                k2 = _square_edge_key(corners, e2, size)
                adjacency.setdefault(k1, []).append(k2)
                adjacency.setdefault(k2, []).append(k1)

    contours = []
    visited: set[int] = set()
    for start in sorted(adjacency):
        if start in visited:
            continue
        chain = [start]
        visited.add(start)
        previous, current = None, start
        closed = False
        while True:
            candidates = [k for k in adjacency[current] if k != previous]
            nxt = next((k for k in candidates if k not in visited), None)
            if nxt is None:
                closed = start in adjacency[current] and len(chain) > 2
                break
            chain.append(nxt)
            visited.add(nxt)
            previous, current = current, nxt
        points = _edge_points(np.array(chain, dtype=np.int64), flat, n, 2)
        contours.append(SliceContour(points=points, kz=kz, closed=closed))
    return contours


def _square_edge_key(corners: tuple[int, ...], edge: int, size: int) -> int:
    a, b = (corners[c] for c in _SQUARE_EDGES[edge])
    return min(a, b) * size + max(a, b)
