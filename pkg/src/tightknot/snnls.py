"""Sparse non-negative least squares and minimum-norm underdetermined solves.

Matrices are scipy CSC with small per-column support (a contact constraint
touches at most four vertices, so at most 12 rows).  The NNLS solver runs
block principal pivoting with unconstrained solves of the free-set normal
equations; exchanges that stop reducing the infeasibility count degrade to
single largest-index swaps.  The pivoting termination argument assumes
full-rank free sets, and rank-deficient cones (routine here, since
constraint gradients are orthogonal to the rigid motions) can cycle it, so
an exhausted pivot budget hands the instance to a dense feasible-path
active-set solve instead.  Every result carries a KKT certificate; a
pivoting result that meets its own feasibility slack but misses the
certificate (inexact inner solves) is re-solved densely before failing.  The
minimum-norm solver is iterative bidiagonalization on the sparse operator
and never forms a normal-equations matrix.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import optimize, sparse
from scipy.sparse import linalg as spla

__all__ = [
    "snnls_solve",
    "minnorm_solve",
    "MinNormResult",
    "SingularSubmatrix",
]

log = logging.getLogger(__name__)

KKT_TOL = 1e-10        # relative to the largest entry of A^T b
KKT_FLOOR = 1e-13      # absolute dual floor, in units of max colnorm * |b|
MINNORM_TOL = 1e-8
COND_WARN = 1e8        # warn when the free-set normal equations exceed this
MAX_STALLED_BLOCKS = 3  # full exchanges without progress before single swaps
FEAS_TOL = 1e-13       # relative slack when classifying primal/dual signs


class SingularSubmatrix(RuntimeError):
    """The free-column normal equations cannot be factored."""


def _as_csc(A):
    if not sparse.issparse(A):
        A = sparse.csc_matrix(np.asarray(A, dtype=float))
    A = A.tocsc().astype(float)
    if not np.all(np.isfinite(A.data)):
        raise ValueError("non-finite matrix entries")
    return A


def _cond_estimate(gram, lu, seed: int = 0, iters: int = 8) -> float:
    """Power-iteration estimate of the normal-equations condition number."""
    n = gram.shape[0]
    rng = np.random.default_rng(seed + n)
    hi = lo = 1.0
    v = rng.standard_normal(n)
    for _ in range(iters):
        v /= np.linalg.norm(v)
        v = gram @ v
        hi = np.linalg.norm(v)
        if hi == 0.0:
            return np.inf
    w = rng.standard_normal(n)
    for _ in range(iters):
        w /= np.linalg.norm(w)
        w = lu.solve(w)
        lo = np.linalg.norm(w)
        if not np.isfinite(lo):
            return np.inf
    return hi * lo


def _lsq_fallback(AF, b):
    """Minimum-norm least-squares inner solve for rank-deficient free sets.

    Constraint gradients are orthogonal to the rigid motions, so real
    contact networks routinely carry more columns than their span; pivot
    states that overshoot the rank are legitimate and must not abort.
    """
    rows, cols = AF.shape
    x = spla.lsqr(AF, b, atol=1e-14, btol=1e-14,
                  iter_lim=8 * (rows + cols))[0]
    if not np.all(np.isfinite(x)):
        raise SingularSubmatrix("singular rigidity submatrix")
    return x


def _free_solve(A, free_idx, b, Atb, fallback: bool):
    """x on the free columns via the normal equations, with refinement.

    A couple of residual-correction passes keep the dual certificate tight
    even when squaring the condition number costs digits.  Singular or
    numerically hopeless systems go to the least-squares fallback unless
    the caller disabled it.
    """
    AF = A[:, free_idx]
    gram = (AF.T @ AF).tocsc()
    try:
        lu = spla.splu(gram)
    except RuntimeError as exc:
        if not fallback:
            raise SingularSubmatrix("singular rigidity submatrix") from exc
        log.debug("singular free-set Gram (%d cols), least-squares fallback",
                  len(free_idx))
        return _lsq_fallback(AF, b)
    rhs = Atb[free_idx]
    rscale = max(1.0, np.max(np.abs(rhs), initial=0.0))
    x = lu.solve(rhs)
    resid = rhs
    for _ in range(3):
        if not np.all(np.isfinite(x)):
            break
        resid = rhs - AF.T @ (AF @ x)
        if np.max(np.abs(resid), initial=0.0) <= 1e-15 * rscale:
            break
        x = x + lu.solve(resid)
    bad = not np.all(np.isfinite(x)) or \
        np.max(np.abs(resid), initial=0.0) > 1e-8 * rscale
    if bad:
        if not fallback:
            raise SingularSubmatrix("singular rigidity submatrix")
        log.debug("free-set refinement stalled, least-squares fallback")
        return _lsq_fallback(AF, b)
    cond = _cond_estimate(gram, lu)
    # rigid-motion invariance makes rank-deficient free sets routine, so bad
    # conditioning is not worth a warning; the KKT certificate is the arbiter
    if cond > COND_WARN:
        log.info("free-set normal equations ill-conditioned: cond ~ %.3e", cond)
    else:
        log.debug("free-set normal equations cond ~ %.3e", cond)
    return x


def snnls_solve(A, b, tol: float = KKT_TOL, fallback: bool = True,
                max_pivots: int | None = None):
    """Minimize ||A lam - b|| over lam >= 0; returns (lam, b - A lam).

    Block principal pivoting: the free set F is solved unconstrained through
    its normal equations, sign violations of the primal on F and the dual on
    the complement are exchanged wholesale, and after MAX_STALLED_BLOCKS
    exchanges without infeasibility decrease only the largest-index violator
    moves.  A pivot budget (default 10 n + 100) that runs out hands the
    instance to the dense feasible-path solver, whose monotone residual
    cannot cycle.  The returned pair is KKT-certified either way.

    fallback=False demands factorable normal equations throughout and turns
    rank-deficient free sets into the singular-submatrix error and an
    exhausted pivot budget into a plain failure.
    """
    A = _as_csc(A)
    b = np.asarray(b, dtype=float).ravel()
    if A.shape[0] != len(b):
        raise ValueError("matrix rows and vector length differ")
    if not np.all(np.isfinite(b)):
        raise ValueError("non-finite right-hand side")
    if A.nnz == 0:
        raise ValueError("matrix has no nonzero entries")
    m, n = A.shape
    Atb = A.T @ b
    scale = np.max(np.abs(Atb), initial=0.0)

    free = np.zeros(n, dtype=bool)
    x = np.zeros(n)
    y = -Atb.copy()
    best_inf = n + 1
    stalled = 0
    if max_pivots is None:
        max_pivots = 10 * n + 100
    for _ in range(max_pivots):
        slack = FEAS_TOL * max(1.0, scale, np.max(np.abs(x), initial=0.0))
        bad_x = free & (x < -slack)
        bad_y = ~free & (y < -slack)
        ninf = int(np.count_nonzero(bad_x)) + int(np.count_nonzero(bad_y))
        if ninf == 0:
            break
        if ninf < best_inf:
            best_inf = ninf
            stalled = 0
        else:
            stalled += 1
        if stalled >= MAX_STALLED_BLOCKS and ninf > 1:
            # single exchange of the largest violating index
            r = max(np.flatnonzero(bad_x | bad_y))
            swap = np.zeros(n, dtype=bool)
            swap[r] = True
        else:
            swap = bad_x | bad_y
        free ^= swap
        x = np.zeros(n)
        y = np.zeros(n)
        idx = np.flatnonzero(free)
        if len(idx):
            x[idx] = _free_solve(A, idx, b, Atb, fallback)
        y = A.T @ (A @ x - b)
        y[idx] = 0.0
    else:
        if not fallback:
            raise RuntimeError("block pivoting failed to terminate")
        log.info("block pivoting cycled; dense active-set rescue")
        x = optimize.nnls(A.toarray(), b)[0]
        free = x > 0.0
        fallback = False  # already dense; no second rescue

    # the certificate floor covers directions nearly orthogonal to every
    # column, where tol * |A^T b| would demand accuracy beyond what any
    # solver can deliver in doubles (dual entries are differences of
    # O(colnorm * |b|) quantities)
    colmax = np.sqrt(A.multiply(A).sum(axis=0).max())
    bound = max(tol * scale, KKT_FLOOR * colmax * np.linalg.norm(b), 1e-300)

    while True:
        lam = np.where(free, np.maximum(x, 0.0), 0.0)
        residual = b - A @ lam
        dual = A.T @ residual
        if np.max(dual, initial=0.0) <= bound and \
                np.max(np.abs(dual[lam > 0.0]), initial=0.0) <= bound:
            return lam, residual
        if not fallback:
            raise RuntimeError("KKT certification failed")
        # pivoting met its own feasibility slack but the inexact inner
        # solves left duals above the certificate; re-solve densely
        log.info("pivoting result failed certification; dense rescue")
        x = optimize.nnls(A.toarray(), b)[0]
        free = x > 0.0
        fallback = False


@dataclass(frozen=True)
class MinNormResult:
    """Minimum-norm solve outcome; w is valid either way, converged says
    whether the normal-equation residual met the tolerance."""

    w: np.ndarray
    converged: bool
    iters: int
    relres: float


def minnorm_solve(At, C, tol: float = MINNORM_TOL,
                  max_iters: int | None = None) -> MinNormResult:
    """Least-squares solve of At w = C picking the minimum-norm solution.

    Golub-Kahan bidiagonalization on the sparse operator; iterates stay in
    the row space, so the result is orthogonal to the null space of At.
    """
    At = _as_csc(At)
    C = np.asarray(C, dtype=float).ravel()
    if At.shape[0] != len(C):
        raise ValueError("operator rows and vector length differ")
    if not np.all(np.isfinite(C)):
        raise ValueError("non-finite right-hand side")
    rows, cols = At.shape
    if max_iters is None:
        max_iters = 4 * (rows + cols)
    w, istop, itn, r1norm, _, anorm, _, arnorm = spla.lsqr(
        At, C, atol=tol, btol=tol, iter_lim=max_iters)[:8]
    converged = istop in (0, 1, 2)
    denom = anorm * r1norm
    relres = arnorm / denom if denom > 0.0 else 0.0
    if not converged:
        log.warning("minimum-norm solve hit the iteration cap "
                    "(%d iters, relres %.3e)", itn, relres)
    return MinNormResult(w=w, converged=converged, iters=int(itn),
                         relres=float(relres))
