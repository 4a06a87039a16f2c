"""Global exact solver by decomposition over defect components.

After shifting every entry down by the diagonal minimum m_n, cross entries
between different defect components are nonnegative, so the shifted value
decomposes as the minimum of the shifted block values and the global
minimizer lives inside the winning component.  Each block is solved
exactly by support enumeration.

When every component has at most four vertices, the doubly nonnegative
relaxation of the instance is exact with a unique rank-one optimizer (the
positive-semidefinite-and-nonnegative cone coincides with the completely
positive cone up to dimension four); the solution then carries
certified_exact_dnn = True.  Larger components still yield the exact StQP
value through the same decomposition, but no relaxation certificate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .defect import DefectDecomposition, build_defect_graph, validate_matrix
from .kkt import (
    CapacityError,
    DEFAULT_TOLERANCES,
    LocalSolution,
    Tolerances,
    local_stqp,
)
from .rng import stream, uniform_open

__all__ = [
    "Solution",
    "BlockMassReport",
    "RankOneEmbedding",
    "EmbeddingCheckError",
    "ProbeResult",
    "solve",
    "embed_rank_one",
    "block_masses",
    "lower_bound_probe",
]

_PROBE_LANE = 0x70726F6265  # ascii "probe"; keeps probe draws off the trial lanes


@dataclass(frozen=True)
class Solution:
    """Global solver output.

    value          global StQP value x^T Q x
    shifted_value  value - m_n (always <= 0: the minimum-diagonal vertex
                   contributes a singleton candidate of shifted value 0)
    support        strictly positive coordinates, global 0-based indices
    weights        simplex weights on the support
    component_values  (component index, shifted block value) for every block
    near_tie_flag  another block value within tolerance of the winner, or a
                   within-block candidate tie; selection stays deterministic
    """

    n: int
    value: float
    m_n: float
    shifted_value: float
    support: tuple[int, ...]
    weights: np.ndarray
    winning_component: int
    certified_exact_dnn: bool
    component_values: tuple[tuple[int, float], ...]
    component_sizes: tuple[int, ...]
    near_tie_flag: bool

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "value": self.value,
            "m_n": self.m_n,
            "shifted_value": self.shifted_value,
            "support": [i + 1 for i in self.support],
            "weights": [float(w) for w in self.weights],
            "winning_component": self.winning_component,
            "certified_exact_dnn": self.certified_exact_dnn,
            "component_sizes": list(self.component_sizes),
            "near_tie": self.near_tie_flag,
        }


def solve(q, support_cap: int = 25, tol: Tolerances = DEFAULT_TOLERANCES) -> Solution:
    """Exact StQP solve of a symmetric instance.

    Builds the defect decomposition, solves each component block, and takes
    the minimum block value; ties within tolerance resolve toward the
    component with the smallest vertex and raise near_tie_flag.  Work is
    O(n^2) for the scan plus constant-size KKT systems per component when
    every component has at most four vertices.
    """
    q = validate_matrix(q)
    dec = build_defect_graph(q)
    comps = dec.components
    for a, comp in enumerate(comps):
        if len(comp) > support_cap:
            raise CapacityError(len(comp), support_cap, what=f"defect component #{a}")

    diag = np.diagonal(q)
    values = np.empty(len(comps))
    locals_: list[LocalSolution | None] = [None] * len(comps)
    for a, comp in enumerate(comps):
        if len(comp) == 1:
            values[a] = diag[comp[0]]
        else:
            ls = local_stqp(q[np.ix_(comp, comp)], support_cap=support_cap, tol=tol)
            locals_[a] = ls
            values[a] = ls.value

    vmin = float(values.min())
    tie = tol.near_tie * (1.0 + abs(vmin))
    contenders = np.flatnonzero(values <= vmin + tie)
    winner = int(contenders[0])  # components are ordered by smallest vertex
    near = len(contenders) > 1

    win = locals_[winner]
    if win is None:
        win = LocalSolution(value=float(values[winner]), x=np.ones(1), support=(0,))
    else:
        near = near or win.near_tie

    comp = comps[winner]
    support = tuple(comp[i] for i in win.support)
    weights = win.x[list(win.support)].copy()
    value = float(values[winner])
    return Solution(
        n=dec.n,
        value=value,
        m_n=dec.m_n,
        shifted_value=value - dec.m_n,
        support=support,
        weights=weights,
        winning_component=winner,
        certified_exact_dnn=dec.max_component_size() <= 4,
        component_values=tuple((a, float(values[a] - dec.m_n)) for a in range(len(comps))),
        component_sizes=tuple(len(c) for c in comps),
        near_tie_flag=near,
    )


class EmbeddingCheckError(RuntimeError):
    """The rank-one lift of a solution failed a feasibility identity."""


@dataclass(frozen=True)
class RankOneEmbedding:
    """Feasibility data for X = x x^T restricted to the support block."""

    support: tuple[int, ...]
    weights: np.ndarray
    block: np.ndarray
    total_mass: float
    objective: float


def embed_rank_one(sol: Solution, q) -> RankOneEmbedding:
    """Materialize X = x x^T on the support and verify its feasibility.

    Checks <E, X> = (sum of weights)^2 = 1, entrywise nonnegativity (hence
    positive semidefiniteness, the lift being a rank-one outer product of a
    nonnegative vector), and <Q, X> = sol.value.
    """
    q = np.asarray(q, dtype=np.float64)
    w = np.asarray(sol.weights, dtype=np.float64)
    block = np.outer(w, w)
    mass = float(w.sum()) ** 2
    idx = list(sol.support)
    objective = float(w @ q[np.ix_(idx, idx)] @ w)
    if abs(mass - 1.0) > 1e-12:
        raise EmbeddingCheckError(f"total mass <E, X> = {mass!r} is not 1 within 1e-12")
    if w.min() <= 0.0:
        raise EmbeddingCheckError("support weights must be strictly positive")
    if abs(objective - sol.value) > 1e-9 * (1.0 + abs(sol.value)):
        raise EmbeddingCheckError(
            f"<Q, X> = {objective!r} disagrees with solution value {sol.value!r}"
        )
    return RankOneEmbedding(
        support=sol.support,
        weights=w,
        block=block,
        total_mass=mass,
        objective=objective,
    )


@dataclass(frozen=True)
class BlockMassReport:
    """Mass split of a feasible lifted matrix across defect components.

    tau[a] is the mass inside component a, eta the total cross-component
    mass; tau.sum() + eta equals the total mass (1 for feasible input).
    """

    tau: np.ndarray
    eta: float
    total: float


def block_masses(x_mat, dec: DefectDecomposition) -> BlockMassReport:
    """Split the mass of an entrywise-nonnegative matrix with total sum 1."""
    x_mat = np.asarray(x_mat, dtype=np.float64)
    if x_mat.shape != (dec.n, dec.n):
        raise ValueError(f"matrix shape {x_mat.shape} does not match instance size {dec.n}")
    if x_mat.min() < 0.0:
        raise ValueError("lifted matrix must be entrywise nonnegative")
    total = float(x_mat.sum())
    if abs(total - 1.0) > 1e-8:
        raise ValueError(f"total mass {total!r} must be 1 within 1e-8")
    ids = dec.component_ids()
    same = ids[:, None] == ids[None, :]
    row_ids = np.broadcast_to(ids[:, None], x_mat.shape)
    tau = np.bincount(row_ids[same], weights=x_mat[same], minlength=len(dec.components))
    eta = float(x_mat[~same].sum())
    return BlockMassReport(tau=tau, eta=eta, total=float(tau.sum() + eta))


@dataclass(frozen=True)
class ProbeResult:
    """Outcome of the random completely-positive lower-bound probe."""

    passed: bool
    trials: int
    min_margin: float
    violating_trial: int | None = None

    def __bool__(self) -> bool:
        return self.passed


def lower_bound_probe(q, sol: Solution, trials: int, seed: int) -> ProbeResult:
    """Check sol.value lower-bounds the objective over random feasible lifts.

    Samples matrices Y = sum_s y_s y_s^T with up to five nonnegative terms,
    normalized to <E, Y> = 1.  Such Y are completely positive, hence feasible
    for the relaxation, so a certified solution must satisfy
    <Q, Y> >= sol.value for every sample (slack 1e-8).
    """
    if not sol.certified_exact_dnn:
        raise ValueError("lower-bound probe requires a certified solution")
    q = np.asarray(q, dtype=np.float64)
    n = q.shape[0]
    gen = stream(seed, _PROBE_LANE)
    worst = math.inf
    worst_trial = -1
    done = 0
    chunk_cap = 4096
    while done < trials:
        c = min(chunk_cap, trials - done)
        terms = gen.integers(1, 6, size=c)
        w = uniform_open(gen, (c, 5, n))
        w = w * (np.arange(5)[None, :, None] < terms[:, None, None])
        alphas = w.sum(axis=2)
        norm = (alphas**2).sum(axis=1)
        flat = w.reshape(c * 5, n)
        quad_forms = ((flat @ q) * flat).sum(axis=1).reshape(c, 5)
        vals = quad_forms.sum(axis=1) / norm
        margins = vals - sol.value
        i = int(np.argmin(margins))
        if float(margins[i]) < worst:
            worst = float(margins[i])
            worst_trial = done + i
        done += c
    passed = worst >= -1e-8
    return ProbeResult(
        passed=passed,
        trials=trials,
        min_margin=worst,
        violating_trial=None if passed else worst_trial,
    )
