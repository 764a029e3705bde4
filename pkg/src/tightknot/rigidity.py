"""Rigidity matrix assembly and resolution against the constraint cone.

The matrix has one column per active constraint: the negated gradient of
half the contact distance for a strut, the negated gradient of the discrete
curvature radius for a kink, each scattered into R^{3V}.  Resolving a
descent direction splits it into a nonnegative combination of columns (the
part the contacts can absorb) plus a remainder that does not decrease any
constraint to first order; the remainder's relative size is the criticality
residual.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .geometry import Polygon, grad_chord, grad_minrad
from .snnls import snnls_solve
from .thickness import ActiveSets

__all__ = [
    "build_rigidity_matrix",
    "resolve",
    "criticality_report",
    "Resolution",
    "CriticalityReport",
    "RESIDUAL_GOAL",
    "RESIDUAL_GOAL_HQ",
]

RESIDUAL_GOAL = 0.01      # normal runs
RESIDUAL_GOAL_HQ = 0.001  # high-quality runs


def build_rigidity_matrix(poly: Polygon, active: ActiveSets):
    """Sparse 3V x (#struts + #kinks) matrix of negated constraint gradients.

    Column order is struts in canonical order, then kinks in canonical
    order.  No explicit zeros are stored, so each column's row support is
    exactly the constraint's vertex footprint (at most 4 vertices for a
    strut, 3 for a kink).
    """
    V = poly.num_vertices
    rows, cols, vals = [], [], []
    col = 0
    for s in sorted(active.struts, key=lambda s: s.sort_key()):
        idx, vec = grad_chord(poly, s.p_edge, s.p_alpha, s.q_edge, s.q_alpha)
        _scatter_column(rows, cols, vals, col, idx, -vec)
        col += 1
    for k in sorted(active.kinks, key=lambda k: k.sort_key()):
        idx, vec = grad_minrad(poly, k.vertex, "+" if k.sign > 0 else "-")
        _scatter_column(rows, cols, vals, col, idx, -vec)
        col += 1
    A = sparse.coo_matrix((vals, (rows, cols)), shape=(3 * V, col))
    A = A.tocsc()
    A.sum_duplicates()
    A.eliminate_zeros()
    return A


def _scatter_column(rows, cols, vals, col, idx, vectors):
    for i, vec in zip(idx, vectors):
        for axis in range(3):
            if vec[axis] != 0.0:
                rows.append(3 * int(i) + axis)
                cols.append(col)
                vals.append(float(vec[axis]))


@dataclass(frozen=True)
class Resolution:
    """Split of a direction into cone part and admissible remainder.

    constrained_gradient + resolved_part reproduces the input direction;
    the two are orthogonal and the multipliers are the nonnegative contact
    forces realizing resolved_part.
    """

    constrained_gradient: np.ndarray
    resolved_part: np.ndarray
    multipliers: np.ndarray
    residual_ratio: float


def resolve(direction: np.ndarray, A) -> Resolution:
    """Project a (V, 3) direction field onto the active-constraint cone.

    Columns are equilibrated to unit norm for the solve (kink gradients can
    dwarf strut gradients by 1/ell^2) and the multipliers are rescaled
    back, which leaves the cone and therefore the split unchanged.
    """
    direction = np.asarray(direction, dtype=float)
    shape = direction.shape
    b = direction.ravel()
    dnorm = float(np.linalg.norm(b))
    if A.shape[1] == 0:
        return Resolution(constrained_gradient=direction.copy(),
                          resolved_part=np.zeros(shape),
                          multipliers=np.zeros(0),
                          residual_ratio=1.0 if dnorm > 0.0 else 0.0)
    if A.shape[0] != b.size:
        raise ValueError("direction length does not match matrix rows")
    sq = A.copy()
    sq.data **= 2
    norms = np.sqrt(np.asarray(sq.sum(axis=0)).ravel())
    norms[norms == 0.0] = 1.0
    scaled = A @ sparse.diags(1.0 / norms)
    mu, residual = snnls_solve(scaled, b)
    lam = mu / norms
    resolved = b - residual
    ratio = float(np.linalg.norm(residual)) / dnorm if dnorm > 0.0 else 0.0
    return Resolution(constrained_gradient=residual.reshape(shape),
                      resolved_part=resolved.reshape(shape),
                      multipliers=lam,
                      residual_ratio=ratio)


@dataclass(frozen=True)
class CriticalityReport:
    """Force-balance diagnostics; truthy iff the residual meets the goal."""

    critical: bool
    residual_ratio: float
    threshold: float
    force_imbalance: float
    multipliers: np.ndarray

    def __bool__(self) -> bool:
        return self.critical


def criticality_report(resolution: Resolution,
                       threshold: float = RESIDUAL_GOAL) -> CriticalityReport:
    """First-order criticality: the direction lies in the cone up to threshold."""
    gap = float(np.linalg.norm(resolution.constrained_gradient))
    return CriticalityReport(critical=resolution.residual_ratio <= threshold,
                             residual_ratio=resolution.residual_ratio,
                             threshold=threshold,
                             force_imbalance=gap,
                             multipliers=resolution.multipliers)
