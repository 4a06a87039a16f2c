import itertools
import math

import numpy as np
import pytest

from stqp import (
    CapacityError,
    GOE,
    RejectionReason,
    SINGULAR,
    dyadic_matrix,
    grid_refine_check,
    is_admissible,
    kkt_solve,
    local_stqp,
    sample_matrix,
    tangent_basis,
)
from stqp.rng import stream


def test_tangent_basis_two_dimensional():
    b = tangent_basis(2)
    assert b.shape == (2, 1)
    assert np.allclose(b[:, 0], [1.0 / math.sqrt(2.0), -1.0 / math.sqrt(2.0)], atol=1e-15)


@pytest.mark.parametrize("s", range(2, 9))
def test_tangent_basis_orthonormal_and_tangent(s):
    b = tangent_basis(s)
    assert np.max(np.abs(b.T @ b - np.eye(s - 1))) <= 1e-12
    assert np.max(np.abs(b.sum(axis=0))) <= 1e-12


def test_tangent_basis_domain_error():
    with pytest.raises(ValueError):
        tangent_basis(1)


def test_kkt_solve_identity():
    x, lam = kkt_solve(np.eye(2))
    assert np.allclose(x, [0.5, 0.5], atol=1e-14)
    assert lam == pytest.approx(0.5, abs=1e-14)


def test_kkt_solve_diagonal():
    x, lam = kkt_solve(np.diag([2.0, 4.0]))
    assert np.allclose(x, [2.0 / 3.0, 1.0 / 3.0], atol=1e-14)
    assert lam == pytest.approx(4.0 / 3.0, abs=1e-14)


def test_kkt_solve_zero_matrix_is_singular():
    # the bordered system for the all-zero block has two identical rows;
    # elimination hits a dead pivot and reports SINGULAR
    assert kkt_solve(np.zeros((2, 2))) is SINGULAR


def test_kkt_solve_singleton():
    x, lam = kkt_solve(np.array([[7.5]]))
    assert x.tolist() == [1.0]
    assert lam == 7.5


def test_admissibility_identity_block():
    a = np.eye(3)
    solved = kkt_solve(a)
    ok, reason = is_admissible(a, solved)
    assert ok and reason is RejectionReason.NONE
    assert np.allclose(solved[0], [1.0 / 3.0] * 3, atol=1e-14)


def test_admissibility_negative_coupling():
    a = np.array([[0.0, -1.0], [-1.0, 0.0]])
    solved = kkt_solve(a)
    x, lam = solved
    assert np.allclose(x, [0.5, 0.5]) and lam == pytest.approx(-0.5)
    ok, reason = is_admissible(a, solved)
    assert ok and reason is RejectionReason.NONE


def test_admissibility_rejects_indefinite():
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    ok, reason = is_admissible(a, kkt_solve(a))
    assert not ok and reason is RejectionReason.INDEFINITE_ON_TANGENT


def test_admissibility_rejects_nonpositive():
    a = np.array([[0.0, 1.0], [1.0, 4.0]])  # KKT solution is (3/2, -1/2)
    solved = kkt_solve(a)
    assert solved is not SINGULAR
    ok, reason = is_admissible(a, solved)
    assert not ok and reason is RejectionReason.NONPOSITIVE_ENTRY


def test_admissibility_singular_reason():
    ok, reason = is_admissible(np.zeros((2, 2)), kkt_solve(np.zeros((2, 2))))
    assert not ok and reason is RejectionReason.SINGULAR_KKT


def test_local_stqp_identity_four():
    sol = local_stqp(np.eye(4))
    assert sol.value == pytest.approx(0.25, abs=1e-14)
    assert sol.support == (0, 1, 2, 3)
    assert np.allclose(sol.x, 0.25, atol=1e-14)


def test_local_stqp_dyadic_full_support():
    sol = local_stqp(dyadic_matrix(4))
    assert sol.value == pytest.approx(16.0 / 15.0, abs=1e-12)
    assert sol.support == (0, 1, 2, 3)


def test_local_stqp_two_by_two():
    sol = local_stqp(np.array([[0.0, -1.0], [-1.0, 0.0]]))
    assert sol.value == pytest.approx(-0.5, abs=1e-14)
    assert np.allclose(sol.x, [0.5, 0.5])


def test_dyadic_candidates_closed_form():
    sol = local_stqp(dyadic_matrix(4), collect_candidates=True)
    cands = sol.all_candidates
    assert len(cands) == 15
    values = []
    for cand in cands:
        assert cand.admissible
        expected = 1.0 / sum(2.0 ** -(i + 1) for i in cand.support)
        assert cand.lam == pytest.approx(expected, abs=1e-12)
        values.append(cand.lam)
    assert len({round(v, 9) for v in values}) == 15


def test_dyadic_matrix_contract():
    assert np.array_equal(dyadic_matrix(1), [[2.0]])
    assert np.array_equal(dyadic_matrix(2), np.diag([2.0, 4.0]))
    assert np.array_equal(dyadic_matrix(4), np.diag([2.0, 4.0, 8.0, 16.0]))
    with pytest.raises(ValueError):
        dyadic_matrix(5)
    with pytest.raises(ValueError):
        dyadic_matrix(0)


def test_capacity_error():
    with pytest.raises(CapacityError) as err:
        local_stqp(np.eye(6), support_cap=5)
    assert err.value.size == 6 and err.value.cap == 5


def test_deterministic_tie_break_prefers_small_lex_support():
    sol = local_stqp(np.eye(2) * 3.0)
    # candidates {0}, {1} and {0,1} give 3, 3, 1.5; full support wins alone
    assert sol.support == (0, 1)
    sol = local_stqp(np.ones((2, 2)))
    # {0} and {1} tie at 1.0 exactly; {0,1} is singular: flag + lex winner
    assert sol.support == (0,)
    assert sol.near_tie


def _random_blocks(count, sizes, seed):
    gen = stream(seed, 0)
    for k in range(count):
        r = int(gen.choice(sizes))
        yield sample_matrix(GOE(), r, seed=k, lane=33)


def test_kkt_residuals_on_random_blocks():
    checked = 0
    for a in _random_blocks(1000, [2, 3, 4], seed=1):
        sol = local_stqp(a, collect_candidates=True)
        scale = 1.0 + np.abs(a).max()
        for cand in sol.all_candidates:
            if not cand.admissible or len(cand.support) < 2:
                continue
            sub = a[np.ix_(cand.support, cand.support)]
            residual = sub @ cand.x - cand.lam
            assert np.max(np.abs(residual)) <= 1e-9 * scale
            assert abs(cand.x.sum() - 1.0) <= 1e-12
            checked += 1
    assert checked > 1000


def test_face_local_optimality():
    gen = stream(2, 0)
    for a in itertools.islice(_random_blocks(100, [2, 3, 4], seed=3), 100):
        sol = local_stqp(a, collect_candidates=True)
        for cand in sol.all_candidates:
            if not cand.admissible or len(cand.support) < 2:
                continue
            t = len(cand.support)
            sub = a[np.ix_(cand.support, cand.support)]
            basis = tangent_basis(t)
            raw = gen.normal(size=(100, t - 1))
            dirs = raw @ basis.T
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            eps = 1e-4
            pts = cand.x[None, :] + eps * dirs
            keep = pts.min(axis=1) >= 0.0  # stay on the face
            vals = np.einsum("ci,ij,cj->c", pts[keep], sub, pts[keep])
            assert np.all(vals >= cand.lam - 1e-10 * (1.0 + abs(cand.lam)))


def test_shift_covariance():
    gen = stream(4, 0)
    for a in itertools.islice(_random_blocks(50, [2, 3, 4], seed=5), 50):
        c = float(gen.normal(scale=3.0))
        base = local_stqp(a)
        shifted = local_stqp(a + c)
        assert shifted.value == pytest.approx(base.value + c, abs=1e-9)
        assert shifted.support == base.support
        assert np.allclose(shifted.x, base.x, atol=1e-9)


def test_value_against_grid_on_random_blocks():
    for k in range(25):
        a = sample_matrix(GOE(), 3, seed=k, lane=44)
        sol = local_stqp(a)
        assert grid_refine_check(a, sol, grid=200)
