"""Face optimization on the probability simplex by support enumeration.

Each nonempty support T of a block gives a bordered linear system pairing
the principal submatrix A_T with the sum-to-one constraint:

    [ A_T  -1 ] [x]   [0]
    [ 1^T   0 ] [l] = [1]

A support is admissible when that system is nonsingular, the solved x is
strictly positive, and the quadratic form is positive definite on the
tangent space {u : sum(u) = 0}; the block optimum is the smallest
admissible candidate value l.  Singleton supports are admissible by
definition with l = A_ii, so the minimum always exists.

The linear algebra is a hand-rolled Gaussian elimination with partial
pivoting, vectorized over a stack of supports.  A library solver would
not expose the pivot magnitudes, and the singular / positive-definite
verdicts are defined here by explicit pivot thresholds so that degenerate
handcrafted inputs are classified deterministically.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "CapacityError",
    "RejectionReason",
    "Tolerances",
    "DEFAULT_TOLERANCES",
    "SINGULAR",
    "SupportCandidate",
    "LocalSolution",
    "tangent_basis",
    "kkt_solve",
    "is_admissible",
    "local_stqp",
    "dyadic_matrix",
]

# supports per vectorized batch; bounds memory in the large-block fallback
ENUM_CHUNK = 1 << 15


class CapacityError(RuntimeError):
    """Support enumeration was asked to exceed its configured cap."""

    def __init__(self, size: int, cap: int, what: str = "block"):
        super().__init__(
            f"{what} of size {size} exceeds the support cap {cap}; enumeration "
            f"would visit 2^{size} - 1 supports (re-run with a larger cap)"
        )
        self.size = size
        self.cap = cap


class RejectionReason(Enum):
    NONE = "none"
    SINGULAR_KKT = "singular_kkt"
    NONPOSITIVE_ENTRY = "nonpositive_entry"
    INDEFINITE_ON_TANGENT = "indefinite_on_tangent"


@dataclass(frozen=True)
class Tolerances:
    """Floating-point classification thresholds.

    positivity: absolute lower bound every solved weight must clear.
    pd: relative Cholesky pivot threshold for the projected Hessian.
    kkt_pivot: relative elimination pivot threshold for the bordered system.
    near_tie: relative gap under which two candidate values count as tied.

    Rejecting a borderline support never loses the optimum: the optimum is
    then attained on a sub-face whose candidate is enumerated as well.
    """

    positivity: float = 1e-10
    pd: float = 1e-12
    kkt_pivot: float = 1e-12
    near_tie: float = 1e-12


DEFAULT_TOLERANCES = Tolerances()


class _Singular:
    __slots__ = ()

    def __repr__(self):
        return "SINGULAR"


#: Sentinel returned by kkt_solve when an elimination pivot underflows the
#: threshold.  A value, not an error: singular supports are simply rejected.
SINGULAR = _Singular()


def tangent_basis(s: int) -> np.ndarray:
    """Helmert basis: orthonormal columns spanning {u in R^s : sum(u) = 0}.

    Column k has 1/sqrt(k(k+1)) on the first k coordinates and
    -k/sqrt(k(k+1)) on coordinate k+1.  Any orthonormal tangent basis gives
    the same definiteness verdict; this one is closed-form and fixed.
    """
    if s < 2:
        raise ValueError(f"tangent basis needs s >= 2, got {s}")
    basis = np.zeros((s, s - 1))
    for k in range(1, s):
        c = 1.0 / math.sqrt(k * (k + 1))
        basis[:k, k - 1] = c
        basis[k, k - 1] = -k * c
    return basis


_BASIS_CACHE: dict[int, np.ndarray] = {}


def _basis(s: int) -> np.ndarray:
    cached = _BASIS_CACHE.get(s)
    if cached is None:
        cached = tangent_basis(s)
        cached.setflags(write=False)
        _BASIS_CACHE[s] = cached
    return cached


def _eliminate_batch(mats: np.ndarray, rhs: np.ndarray, rel_tol: float):
    """Solve a stack of small dense systems by Gaussian elimination with
    partial pivoting.

    Returns (x, singular).  A system is flagged singular when some pivot
    magnitude falls below rel_tol * (1 + max|K|); its x slot is junk.
    """
    count, m, _ = mats.shape
    aug = np.concatenate([mats, rhs[:, :, None]], axis=2).astype(np.float64)
    tol = rel_tol * (1.0 + np.abs(mats).reshape(count, -1).max(axis=1))
    singular = np.zeros(count, dtype=bool)
    rows = np.arange(count)
    with np.errstate(over="ignore", invalid="ignore"):
        for col in range(m):
            rel = np.abs(aug[:, col:, col]).argmax(axis=1)
            piv_row = col + rel
            tmp = aug[rows, piv_row].copy()
            aug[rows, piv_row] = aug[rows, col]
            aug[rows, col] = tmp
            piv = aug[:, col, col]
            small = np.abs(piv) < tol
            singular |= small
            safe = np.where(small, 1.0, piv)
            if col + 1 < m:
                fac = aug[:, col + 1 :, col] / safe[:, None]
                aug[:, col + 1 :, col:] -= fac[:, :, None] * aug[:, col, col:][:, None, :]
        x = np.zeros((count, m))
        for col in range(m - 1, -1, -1):
            acc = aug[:, col, m].copy()
            if col + 1 < m:
                acc -= (aug[:, col, col + 1 : m] * x[:, col + 1 :]).sum(axis=1)
            d = aug[:, col, col]
            x[:, col] = acc / np.where(np.abs(d) < tol, 1.0, d)
    return x, singular


def _kkt_batch(blocks: np.ndarray, rel_tol: float):
    """Bordered-system solve for a stack of t x t blocks.

    Returns (x, lam, singular) with x of shape (count, t).
    """
    count, t, _ = blocks.shape
    m = t + 1
    kmat = np.zeros((count, m, m))
    kmat[:, :t, :t] = blocks
    kmat[:, :t, t] = -1.0
    kmat[:, t, :t] = 1.0
    rhs = np.zeros((count, m))
    rhs[:, t] = 1.0
    sol, singular = _eliminate_batch(kmat, rhs, rel_tol)
    return sol[:, :t], sol[:, t], singular


def _spd_pivots_batch(mats: np.ndarray, tol: np.ndarray) -> np.ndarray:
    """Cholesky pivot test for a stack of symmetric matrices.

    Returns a boolean mask: True where every pivot exceeds the per-system
    threshold tol, i.e. the matrix is positive definite at that tolerance.
    """
    count, p, _ = mats.shape
    work = mats.astype(np.float64, copy=True)
    ok = np.ones(count, dtype=bool)
    # systems already rejected keep eliminating on junk data; silence their
    # overflow noise, the ok mask is final for them
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(p):
            d = work[:, j, j]
            ok &= d > tol
            safe = np.where(d <= 0.0, 1.0, d)
            if j + 1 < p:
                col = work[:, j + 1 :, j]
                work[:, j + 1 :, j + 1 :] -= (col / safe[:, None])[:, :, None] * col[:, None, :]
    return ok


def kkt_solve(block, tol: Tolerances = DEFAULT_TOLERANCES):
    """Solve the bordered system on one block; SINGULAR when a pivot dies.

    For a 1 x 1 block the solution is x = (1), lam = A_11 by definition.
    """
    block = np.atleast_2d(np.asarray(block, dtype=np.float64))
    t = block.shape[0]
    if t == 1:
        return np.ones(1), float(block[0, 0])
    x, lam, singular = _kkt_batch(block[None, :, :], tol.kkt_pivot)
    if singular[0]:
        return SINGULAR
    return x[0], float(lam[0])


def is_admissible(block, solved, tol: Tolerances = DEFAULT_TOLERANCES):
    """Classify one solved support.

    Returns (admissible, reason) with reasons checked in the order
    singular system, nonpositive weight, indefinite on the tangent space.
    """
    if solved is SINGULAR:
        return False, RejectionReason.SINGULAR_KKT
    block = np.atleast_2d(np.asarray(block, dtype=np.float64))
    t = block.shape[0]
    if t == 1:
        return True, RejectionReason.NONE
    x, _ = solved
    if np.min(x) <= tol.positivity:
        return False, RejectionReason.NONPOSITIVE_ENTRY
    basis = _basis(t)
    hess = basis.T @ block @ basis
    hess = 0.5 * (hess + hess.T)
    threshold = np.array([tol.pd * (1.0 + np.abs(block).max())])
    if not _spd_pivots_batch(hess[None, :, :], threshold)[0]:
        return False, RejectionReason.INDEFINITE_ON_TANGENT
    return True, RejectionReason.NONE


@dataclass(frozen=True)
class SupportCandidate:
    """One enumerated support with its verdict (indices local to the block)."""

    support: tuple[int, ...]
    lam: float | None
    x: np.ndarray | None
    admissible: bool
    rejection_reason: RejectionReason


@dataclass(frozen=True)
class LocalSolution:
    """Block optimum: smallest admissible candidate value and its minimizer.

    x is embedded in the block dimension (zeros off the support); support
    holds the strictly positive coordinates.  near_tie marks another
    candidate within tolerance of the winner.
    """

    value: float
    x: np.ndarray
    support: tuple[int, ...]
    near_tie: bool = False
    all_candidates: tuple[SupportCandidate, ...] | None = None


def _reasons_from_masks(singular, positive, definite):
    if singular:
        return RejectionReason.SINGULAR_KKT
    if not positive:
        return RejectionReason.NONPOSITIVE_ENTRY
    if not definite:
        return RejectionReason.INDEFINITE_ON_TANGENT
    return RejectionReason.NONE


def local_stqp(
    block,
    support_cap: int = 25,
    tol: Tolerances = DEFAULT_TOLERANCES,
    collect_candidates: bool = False,
) -> LocalSolution:
    """Minimize x^T A x over the simplex of the block dimension.

    Enumerates all 2^r - 1 supports by increasing cardinality, lexicographic
    within each cardinality; the winner is the first candidate attaining the
    minimum admissible value.  Only pass collect_candidates for small blocks.
    """
    block = np.atleast_2d(np.asarray(block, dtype=np.float64))
    r = block.shape[0]
    if r > support_cap:
        raise CapacityError(r, support_cap)

    best_lam = math.inf
    second = math.inf
    best_support: tuple[int, ...] | None = None
    best_x: np.ndarray | None = None
    collected: list[SupportCandidate] | None = [] if collect_candidates else None

    def consider(vals, supports, xs):
        # vals: admissible candidate values, inadmissible set to +inf
        nonlocal best_lam, second, best_support, best_x
        i1 = int(np.argmin(vals))
        v1 = float(vals[i1])
        if not math.isfinite(v1):
            return
        v2 = float(np.partition(vals, 1)[1]) if vals.shape[0] > 1 else math.inf
        if v1 < best_lam:
            second = min(second, best_lam, v2)
            best_lam = v1
            best_support = tuple(int(i) for i in supports[i1])
            best_x = np.array(xs[i1], dtype=np.float64)
        else:
            second = min(second, v1)

    for t in range(1, r + 1):
        if t == 1:
            lam = np.diagonal(block).astype(np.float64)
            supports = np.arange(r, dtype=np.intp)[:, None]
            xs = np.ones((r, 1))
            if collected is not None:
                for i in range(r):
                    collected.append(
                        SupportCandidate((i,), float(lam[i]), np.ones(1), True, RejectionReason.NONE)
                    )
            consider(lam, supports, xs)
            continue
        combos = itertools.combinations(range(r), t)
        while True:
            chunk = list(itertools.islice(combos, ENUM_CHUNK))
            if not chunk:
                break
            supports = np.asarray(chunk, dtype=np.intp)
            sub = block[supports[:, :, None], supports[:, None, :]]
            x, lam, singular = _kkt_batch(sub, tol.kkt_pivot)
            positive = x.min(axis=1) > tol.positivity
            basis = _basis(t)
            hess = np.matmul(np.matmul(basis.T[None, :, :], sub), basis)
            hess = 0.5 * (hess + hess.transpose(0, 2, 1))
            scale = tol.pd * (1.0 + np.abs(sub).reshape(len(chunk), -1).max(axis=1))
            definite = _spd_pivots_batch(hess, scale)
            admissible = ~singular & positive & definite
            if collected is not None:
                for i in range(len(chunk)):
                    reason = _reasons_from_masks(singular[i], positive[i], definite[i])
                    collected.append(
                        SupportCandidate(
                            tuple(chunk[i]),
                            None if singular[i] else float(lam[i]),
                            x[i].copy() if admissible[i] else None,
                            bool(admissible[i]),
                            reason,
                        )
                    )
            vals = np.where(admissible, lam, math.inf)
            consider(vals, supports, x)

    assert best_support is not None and best_x is not None  # singletons always admissible
    x_full = np.zeros(r)
    x_full[list(best_support)] = best_x
    near = (second - best_lam) <= tol.near_tie * (1.0 + abs(best_lam))
    return LocalSolution(
        value=best_lam,
        x=x_full,
        support=best_support,
        near_tie=near,
        all_candidates=tuple(collected) if collected is not None else None,
    )


def dyadic_matrix(r: int) -> np.ndarray:
    """diag(2, 4, ..., 2^r): every support admissible with value
    1 / sum(2^-p), all 2^r - 1 values distinct.  Test fixture, r in 1..4."""
    if not 1 <= r <= 4:
        raise ValueError(f"dyadic matrix is defined for 1 <= r <= 4, got {r}")
    return np.diag([2.0**p for p in range(1, r + 1)])
