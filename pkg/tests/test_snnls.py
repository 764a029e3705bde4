import logging

import numpy as np
import pytest
import scipy.optimize
from scipy import sparse

from tightknot.snnls import (
    snnls_solve,
    minnorm_solve,
    SingularSubmatrix,
)


def random_instance(rng, rows, cols, maxnnz=12):
    """Sparse columns with small support, like a rigidity matrix.

    rows >= cols and at least two nonzeros per column keep every column
    subset independent, so no pivot state meets a singular free set.
    """
    assert rows >= cols + 2
    A = np.zeros((rows, cols))
    for j in range(cols):
        k = int(rng.integers(2, min(maxnnz, rows) + 1))
        idx = rng.choice(rows, size=k, replace=False)
        A[idx, j] = rng.standard_normal(k)
    if rng.random() < 0.3:
        # right-hand side near the cone, so large supports get exercised
        b = A @ np.abs(rng.standard_normal(cols)) + 0.1 * rng.standard_normal(rows)
    else:
        b = rng.standard_normal(rows)
    return sparse.csc_matrix(A), b


def objective_by_enumeration(A, b):
    """Best least-squares objective over supports with nonnegative solves."""
    A = A.toarray()
    n = A.shape[1]
    best = float(np.linalg.norm(b))
    for mask in range(1, 1 << n):
        cols = [j for j in range(n) if mask >> j & 1]
        x, *_ = np.linalg.lstsq(A[:, cols], b, rcond=None)
        if np.all(x >= -1e-12):
            best = min(best, float(np.linalg.norm(A[:, cols] @ x - b)))
    return best


def test_identity_clips_negative_component():
    A = sparse.eye(2, format="csc")
    lam, res = snnls_solve(A, np.array([1.0, -1.0]))
    assert np.array_equal(lam, [1.0, 0.0])
    assert np.array_equal(res, [0.0, -1.0])


def test_single_column():
    A = sparse.csc_matrix(np.array([[1.0], [0.0], [0.0]]))
    lam, res = snnls_solve(A, np.array([2.0, 0.0, 0.0]))
    assert lam == pytest.approx([2.0], abs=1e-14)
    assert np.linalg.norm(res) <= 1e-14


def test_objective_matches_enumeration(rng):
    for _ in range(25):
        A, b = random_instance(rng, rows=int(rng.integers(12, 25)), cols=8)
        lam, res = snnls_solve(A, b)
        assert np.all(lam >= 0.0)
        want = objective_by_enumeration(A, b)
        assert np.linalg.norm(res) <= want * (1.0 + 1e-8) + 1e-12


def test_exhausted_pivot_budget_rescued_by_dense_solve(rng):
    # max_pivots=0 forces the feasible-path rescue on every instance;
    # the rescued answer must still pass the same optimality bar
    for _ in range(10):
        A, b = random_instance(rng, rows=int(rng.integers(12, 25)), cols=8)
        lam, res = snnls_solve(A, b, max_pivots=0)
        assert np.all(lam >= 0.0)
        want = objective_by_enumeration(A, b)
        assert np.linalg.norm(res) <= want * (1.0 + 1e-8) + 1e-12


def test_exhausted_pivot_budget_without_fallback_raises(rng):
    A, b = random_instance(rng, rows=14, cols=6)
    with pytest.raises(RuntimeError, match="failed to terminate"):
        snnls_solve(A, b, max_pivots=0, fallback=False)


def test_objective_matches_dense_reference(rng):
    for _ in range(50):
        cols = int(rng.integers(5, 41))
        rows = int(rng.integers(cols + 2, 61))
        A, b = random_instance(rng, rows, cols)
        lam, res = snnls_solve(A, b)
        _, ref = scipy.optimize.nnls(A.toarray(), b)
        assert np.linalg.norm(res) <= ref * (1.0 + 1e-8) + 1e-12
        # cone projection leaves the residual orthogonal to the projection
        bb = float(b @ b)
        assert abs(float((A @ lam) @ res)) <= 1e-10 * bb
        # KKT: dual feasible everywhere, complementary on the support
        dual = A.T @ res
        scale = np.max(np.abs(A.T @ b))
        assert np.max(dual, initial=0.0) <= 1e-10 * scale
        if np.any(lam > 0):
            assert np.max(np.abs(dual[lam > 0])) <= 1e-10 * scale


def test_column_permutation_invariance(rng):
    for _ in range(10):
        A, b = random_instance(rng, rows=30, cols=16)
        perm = rng.permutation(16)
        lam, res = snnls_solve(A, b)
        lam_p, res_p = snnls_solve(A[:, perm], b)
        assert lam_p == pytest.approx(lam[perm], rel=1e-9, abs=1e-11)
        assert res_p == pytest.approx(res, rel=1e-9, abs=1e-11)


def test_scaling_is_exact_for_powers_of_two(rng):
    A, b = random_instance(rng, rows=24, cols=12)
    lam, res = snnls_solve(A, b)
    for s in (4.0, 0.5):
        lam_s, res_s = snnls_solve(A, s * b)
        assert np.array_equal(lam_s, s * lam)
        assert np.array_equal(res_s, s * res)


def test_duplicate_columns_strict_mode_raises():
    a = np.array([[1.0], [2.0], [0.0]])
    A = sparse.csc_matrix(np.hstack([a, a]))
    b = np.array([3.0, 6.0, 0.0])
    with pytest.raises(SingularSubmatrix, match="singular rigidity submatrix"):
        snnls_solve(A, b, fallback=False)
    # the default mode splits the weight and still certifies
    lam, res = snnls_solve(A, b)
    assert np.all(lam >= 0.0)
    assert np.linalg.norm(res) <= 1e-10
    assert float(lam.sum()) == pytest.approx(3.0, rel=1e-10)


def test_nonfinite_inputs_raise():
    A = sparse.eye(2, format="csc")
    with pytest.raises(ValueError):
        snnls_solve(A, np.array([np.nan, 0.0]))
    bad = sparse.csc_matrix(np.array([[np.inf, 0.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        snnls_solve(bad, np.array([1.0, 1.0]))


def test_interior_solution_recovers_coefficients(rng):
    # well-separated columns and a strictly positive combination
    A = np.zeros((30, 6))
    for j in range(6):
        A[5 * j:5 * j + 5, j] = 1.0 + rng.random(5)
    truth = 0.5 + rng.random(6)
    A = sparse.csc_matrix(A)
    lam, res = snnls_solve(A, A @ truth)
    assert lam == pytest.approx(truth, rel=1e-12)
    assert np.linalg.norm(res) <= 1e-12


def test_condition_diagnostic_logged(rng, caplog):
    # two nearly parallel columns produce a squared condition above 1e8;
    # logged at info level since degenerate free sets are routine here
    base = rng.standard_normal(20)
    A = np.stack([base, base + 1e-6 * rng.standard_normal(20)], axis=1)
    b = A @ np.array([1.0, 1.0])
    with caplog.at_level(logging.INFO, logger="tightknot.snnls"):
        snnls_solve(sparse.csc_matrix(A), b)
    assert any("ill-conditioned" in r.message for r in caplog.records)


def test_minnorm_picks_row_space():
    At = sparse.csc_matrix(np.array([[1.0, 0.0, 0.0]]))
    out = minnorm_solve(At, np.array([3.0]))
    assert out.converged
    assert out.w == pytest.approx([3.0, 0.0, 0.0], abs=1e-12)


def test_minnorm_orthonormal_rows_is_isometry(rng):
    At = sparse.csc_matrix(np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
    C = rng.standard_normal(2)
    out = minnorm_solve(At, C)
    assert out.w == pytest.approx([C[0], C[1], 0.0], abs=1e-12)
    assert float(out.w @ out.w) == pytest.approx(float(C @ C), rel=1e-12)


def test_minnorm_matches_dense_pseudoinverse(rng):
    for _ in range(8):
        At = np.zeros((30, 90))
        for i in range(30):
            idx = rng.choice(90, size=12, replace=False)
            At[i, idx] = rng.standard_normal(12)
        C = rng.standard_normal(30)
        out = minnorm_solve(sparse.csc_matrix(At), C)
        want = np.linalg.pinv(At) @ C
        assert out.converged
        assert np.linalg.norm(out.w - want) <= 1e-6 * max(1.0, np.linalg.norm(want))


def test_minnorm_orthogonal_to_null_space(rng):
    At = np.zeros((12, 40))
    for i in range(12):
        idx = rng.choice(40, size=8, replace=False)
        At[i, idx] = rng.standard_normal(8)
    C = rng.standard_normal(12)
    out = minnorm_solve(sparse.csc_matrix(At), C, tol=1e-8)
    _, _, vt = np.linalg.svd(At)
    null = vt[np.linalg.matrix_rank(At):]
    for v in null[rng.choice(len(null), size=5, replace=False)]:
        assert abs(float(out.w @ v)) <= 1e-8 * max(1.0, np.linalg.norm(out.w))


def test_minnorm_iteration_cap_sets_flag(rng):
    At = np.zeros((25, 60))
    for i in range(25):
        idx = rng.choice(60, size=10, replace=False)
        At[i, idx] = rng.standard_normal(10)
    out = minnorm_solve(sparse.csc_matrix(At), rng.standard_normal(25),
                        tol=1e-14, max_iters=2)
    assert not out.converged
    assert np.all(np.isfinite(out.w))
