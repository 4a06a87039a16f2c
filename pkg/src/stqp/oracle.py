"""Brute-force reference solvers used only to validate the main path.

brute_force_stqp enumerates every support of the full index set with the
same candidate machinery the block solver uses, but without the defect
decomposition; agreement with the decomposed solver therefore tests the
decomposition logic.  grid_refine_check evaluates the objective on a
barycentric grid and involves no KKT arithmetic at all, guarding against
bugs shared by both enumeration paths.
"""

from __future__ import annotations

import itertools

import numpy as np

from .kkt import CapacityError, LocalSolution, Tolerances, DEFAULT_TOLERANCES, local_stqp

__all__ = ["brute_force_stqp", "grid_refine_check", "simplex_grid"]

_GRID_CHUNK = 1 << 14


def brute_force_stqp(
    q,
    cap: int = 16,
    tol: Tolerances = DEFAULT_TOLERANCES,
    collect_candidates: bool = False,
) -> LocalSolution:
    """Exact StQP value by full power-set enumeration (2^n - 1 supports)."""
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    n = q.shape[0]
    if n > cap:
        raise CapacityError(n, cap, what="instance")
    return local_stqp(q, support_cap=n, tol=tol, collect_candidates=collect_candidates)


def simplex_grid(n: int, resolution: int):
    """Yield barycentric grid points with denominator `resolution` in chunks.

    Each chunk is a (c, n) float array of points on the simplex.
    """
    total = resolution + n - 1
    combos = itertools.combinations(range(total), n - 1)
    while True:
        chunk = list(itertools.islice(combos, _GRID_CHUNK))
        if not chunk:
            return
        bars = np.asarray(chunk, dtype=np.int64).reshape(len(chunk), n - 1)
        left = np.concatenate([np.full((len(chunk), 1), -1, dtype=np.int64), bars], axis=1)
        right = np.concatenate([bars, np.full((len(chunk), 1), total, dtype=np.int64)], axis=1)
        counts = right - left - 1
        yield counts.astype(np.float64) / resolution


def grid_refine_check(q, sol: LocalSolution, grid: int) -> bool:
    """True when no barycentric grid point beats sol.value - 1e-6."""
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    n = q.shape[0]
    if n > 6:
        raise ValueError(f"grid check supports n <= 6, got {n}")
    lowest = np.inf
    for points in simplex_grid(n, grid):
        vals = np.einsum("ci,ij,cj->c", points, q, points, optimize=True)
        lowest = min(lowest, float(vals.min()))
    return lowest >= sol.value - 1e-6
