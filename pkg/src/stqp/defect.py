"""Diagonal minimum, entrywise shift, and defect-graph components.

The defect graph puts an edge on every pair {i, j} whose entry falls
strictly below the minimum diagonal entry m_n.  A single scan of the
upper triangle plus a disjoint-set union extracts the connected
components in O(n^2) time and O(n) auxiliary space.

Ties Q_ij == m_n produce no edge.  The entry laws used here are
continuous, so exact ties have probability zero; on handcrafted input
the strict inequality is the documented behavior.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "MatrixFormatError",
    "DefectDecomposition",
    "validate_matrix",
    "diag_min",
    "shifted_entry",
    "shifted_matrix",
    "build_defect_graph",
    "read_matrix",
    "write_matrix",
]


class MatrixFormatError(ValueError):
    """Raised when a matrix file violates the text format contract."""


def validate_matrix(q) -> np.ndarray:
    """Check that q is a finite, exactly symmetric square matrix."""
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 2 or q.shape[0] != q.shape[1] or q.shape[0] < 1:
        raise ValueError(f"expected a square matrix, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise ValueError("matrix entries must be finite")
    if not np.array_equal(q, q.T):
        raise ValueError("matrix must be symmetric (exact numeric equality)")
    return q


def diag_min(q: np.ndarray) -> tuple[float, int]:
    """Minimum diagonal entry and the smallest index attaining it (0-based)."""
    d = np.diagonal(q)
    idx = int(np.argmin(d))
    return float(d[idx]), idx


def shifted_entry(q: np.ndarray, m_n: float, i: int, j: int) -> float:
    """Entry of the shifted matrix M = Q - m_n * (all-ones)."""
    return float(q[i, j] - m_n)


def shifted_matrix(q: np.ndarray, m_n: float) -> np.ndarray:
    return q - m_n


@lru_cache(maxsize=64)
def _triu_pairs(n: int):
    iu, ju = np.triu_indices(n, 1)
    iu.setflags(write=False)
    ju.setflags(write=False)
    return iu, ju


class DisjointSet:
    """Union-find with path compression and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n
        self.max_size = 1 if n else 0

    def find(self, a: int) -> int:
        parent = self.parent
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        if self.size[ra] > self.max_size:
            self.max_size = self.size[ra]


@dataclass(frozen=True)
class DefectDecomposition:
    """Connected components of the defect graph of one instance.

    components partition {0, ..., n-1}; each is sorted ascending and the
    list is ordered by smallest member.  Vertices in different components
    have all cross entries >= m_n.
    """

    n: int
    m_n: float
    min_index: int
    components: tuple[tuple[int, ...], ...]
    edge_count: int

    def max_component_size(self) -> int:
        return max(len(c) for c in self.components)

    def component_ids(self) -> np.ndarray:
        """Vertex -> component index map."""
        ids = np.empty(self.n, dtype=np.intp)
        for a, comp in enumerate(self.components):
            ids[list(comp)] = a
        return ids


def build_defect_graph(q: np.ndarray) -> DefectDecomposition:
    """Scan the strict upper triangle once and union pairs with Q_ij < m_n."""
    n = q.shape[0]
    m_n, min_index = diag_min(q)
    if n == 1:
        return DefectDecomposition(1, m_n, min_index, ((0,),), 0)
    iu, ju = _triu_pairs(n)
    mask = q[iu, ju] < m_n
    edge_count = int(np.count_nonzero(mask))
    if edge_count == 0:
        comps = tuple((i,) for i in range(n))
        return DefectDecomposition(n, m_n, min_index, comps, 0)
    dsu = DisjointSet(n)
    for a, b in zip(iu[mask], ju[mask]):
        dsu.union(int(a), int(b))
    groups: dict[int, list[int]] = {}
    for v in range(n):
        groups.setdefault(dsu.find(v), []).append(v)
    # insertion order = ascending smallest member; members appended ascending
    comps = tuple(tuple(members) for members in groups.values())
    return DefectDecomposition(n, m_n, min_index, comps, edge_count)


def read_matrix(path) -> np.ndarray:
    """Read the matrix text format: first line n, then n rows of n decimals."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in (raw.strip() for raw in fh) if ln]
    if not lines:
        raise MatrixFormatError(f"{path}: empty matrix file")
    try:
        n = int(lines[0])
    except ValueError as exc:
        raise MatrixFormatError(f"{path}: first line must be the size n") from exc
    if n < 1:
        raise MatrixFormatError(f"{path}: size must be >= 1, got {n}")
    if len(lines) - 1 != n:
        raise MatrixFormatError(f"{path}: expected {n} rows, found {len(lines) - 1}")
    rows = []
    for k, ln in enumerate(lines[1:], start=1):
        parts = ln.split()
        if len(parts) != n:
            raise MatrixFormatError(f"{path}: row {k} has {len(parts)} entries, expected {n}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise MatrixFormatError(f"{path}: row {k} contains a non-numeric entry") from exc
    q = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(q)):
        raise MatrixFormatError(f"{path}: entries must be finite")
    if not np.array_equal(q, q.T):
        raise MatrixFormatError(f"{path}: matrix is not numerically symmetric")
    return q


def write_matrix(q: np.ndarray, path) -> None:
    """Write the matrix text format with round-trip-exact decimal literals."""
    q = validate_matrix(q)
    n = q.shape[0]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{n}\n")
        for row in q:
            fh.write(" ".join(f"{v:.17g}" for v in row))
            fh.write("\n")
