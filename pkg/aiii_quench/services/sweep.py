"""
Parallel momentum sweeps.

Points are split into fixed-size chunks that do not depend on the worker
count; every point is evaluated on its own with a noise stream keyed by its
sweep index, and chunks are reassembled in submission order. Results are
therefore identical for any number of workers.
"""

import logging

import numpy as np
from joblib import Parallel, cpu_count, delayed

from aiii_quench.evaluators import get_evaluator
from aiii_quench.schemas import QuenchSpec

logger = logging.getLogger(__name__)

CHUNK_SIZE = 64


def resolve_workers(workers: int) -> int:
    """0 means one worker per available core."""
    if workers < 0:
        raise ValueError("Worker count must be non-negative")
    return cpu_count() if workers == 0 else workers


def _evaluate_chunk(spec: QuenchSpec, points: np.ndarray, indices: np.ndarray) -> np.ndarray:
    evaluator = get_evaluator(spec)
    out = np.empty((len(points), 3))
    for i, (point, index) in enumerate(zip(points, indices)):
        out[i] = evaluator.averaged_textures(point[None, :], int(index))[0]
    return out


def averaged_textures(
    spec: QuenchSpec,
    points: np.ndarray,
    indices: np.ndarray | None = None,
    workers: int = 1,
) -> np.ndarray:
    """
    Time-averaged textures for many momenta.

    Args:
        spec: Quench protocol
        points: Momenta, shape (N, 3)
        indices: Stable per-point indices for noise streams (default 0..N-1)
        workers: Worker processes; 0 = all cores

    Returns:
        Array of shape (N, 3) in input order
    """
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if indices is None:
        indices = np.arange(len(points), dtype=np.int64)
    if len(indices) != len(points):
        raise ValueError("One index per point is required")
    if len(points) == 0:
        return np.empty((0, 3))

    bounds = [(start, min(start + CHUNK_SIZE, len(points))) for start in range(0, len(points), CHUNK_SIZE)]
    n_jobs = min(resolve_workers(workers), len(bounds))
    mode = get_evaluator(spec).get_mode_name()
    logger.debug(f"Sweeping {len(points)} points ({mode}) in {len(bounds)} chunks on {n_jobs} worker(s)")

    if n_jobs == 1:
        results = [_evaluate_chunk(spec, points[a:b], indices[a:b]) for a, b in bounds]
    else:
        results = Parallel(n_jobs=n_jobs)(
            delayed(_evaluate_chunk)(spec, points[a:b], indices[a:b]) for a, b in bounds
        )
    return np.concatenate(results)
