"""Thickness of polygonal links.

Two functionals: pthi (curvature radii and locally minimal self-distances)
and cthi (curvature radii over tau, and self-distance over the pairs whose
arc vertex count clears pi/theta). The active sets of a configuration near
unit thickness are its struts (near-touching distance minima) and kinks
(vertices near the curvature bound).
"""

from __future__ import annotations

from dataclasses import dataclass
import numpy as np

from .geometry import Polygon, minrads

__all__ = [
    "Strut",
    "Kink",
    "ActiveSets",
    "SelfIntersection",
    "theta_of",
    "vb_count",
    "find_active_sets",
    "cthi",
    "pthi",
    "prop_len",
    "check_cor_hypotheses",
    "CorReport",
]

PARAM_SNAP = 1e-9      # edge parameters this close to 0/1 sit at the vertex
PARALLEL_TOL = 1e-10   # |e1 x e2| < tol*|e1||e2| means parallel edges
SLOPE_TOL = 1e-9       # one-sided slopes below -tol reject a local minimum


class SelfIntersection(ValueError):
    """Distinct curve points coincide; thickness is zero."""


def theta_of(tau: float, ell: float) -> float:
    """Turning angle of an equilateral corner with edge ell at curvature bound tau."""
    return 2.0 * np.arctan(ell / (2.0 * tau))


@dataclass(frozen=True)
class Strut:
    """Contact pair: each point is alpha*start + (1-alpha)*end of its edge.

    Vertex endpoints are canonical: (outgoing edge of the vertex, alpha = 1).
    kind is 'vv', 've' or 'ee' by how many endpoints sit at vertices; family
    marks endpoint pairs of overlapping parallel edges.
    """

    p_edge: int
    p_alpha: float
    q_edge: int
    q_alpha: float
    dist: float
    vb: float
    kind: str
    family: bool = False

    def sort_key(self):
        return (self.p_edge, 1.0 - self.p_alpha, self.q_edge, 1.0 - self.q_alpha)


@dataclass(frozen=True)
class Kink:
    """Vertex at the curvature bound; sign -1/+1 picks the incoming/outgoing form."""

    vertex: int
    sign: int
    minrad: float

    def sort_key(self):
        return (self.vertex, self.sign)


@dataclass
class ActiveSets:
    struts: list
    kinks: list
    pthi: float
    cthi: float
    tau: float
    ell: float
    target: float
    strut_tol: float
    kink_tol: float


# -- arc vertex count ---------------------------------------------------------


def _canonical(poly: Polygon, edge, frac):
    """Snap fractions-from-start to vertices; a vertex point becomes (its edge, 0)."""
    edge = np.array(edge, dtype=np.intp, copy=True)
    frac = np.array(frac, dtype=float, copy=True)
    lo = frac <= PARAM_SNAP
    hi = frac >= 1.0 - PARAM_SNAP
    frac[lo] = 0.0
    edge[hi] = poly.nxt[edge[hi]]
    frac[hi] = 0.0
    return edge, frac


def _vb_batch(poly: Polygon, e1, f1, e2, f2):
    """Arc vertex count for point pairs given by canonical (edge, fraction).

    The smaller number of vertices weakly between the points along the two
    arcs joining them (an endpoint at a vertex counts itself). Fractions must
    be canonical: in [0, 1) with 0 meaning "at the start vertex of the edge".
    Pairs on different components score +inf.
    """
    e1 = np.asarray(e1, dtype=np.intp)
    e2 = np.asarray(e2, dtype=np.intp)
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    out = np.full(e1.shape, np.inf)
    same = poly.comp_of[e1] == poly.comp_of[e2]
    if not np.any(same):
        return out
    c = poly.comp_of[e1[same]]
    n = poly.component_sizes()[c]
    k1 = e1[same] - poly.offsets[c]
    k2 = e2[same] - poly.offsets[c]
    g1 = f1[same]
    g2 = f2[same]
    b = (k2 - k1) % n + g2
    b = np.where(b <= g1, b + n, b)  # forward gap of zero wraps a full turn
    isv2 = g2 == 0.0
    fwd_open = np.where(isv2, np.rint(b).astype(np.intp) - 1, np.floor(b).astype(np.intp))
    fwd = fwd_open + (g1 == 0.0) + isv2
    out[same] = np.minimum(fwd, n - fwd_open)
    return out


def vb_count(poly: Polygon, p_edge: int, p_alpha: float, q_edge: int, q_alpha: float) -> float:
    """Arc vertex count between two curve points given in (edge, alpha) form."""
    e, f = _canonical(poly, [p_edge, q_edge], [1.0 - p_alpha, 1.0 - q_alpha])
    if e[0] == e[1] and f[0] == f[1]:
        raise ValueError("arc vertex count needs two distinct points")
    return float(_vb_batch(poly, e[:1], f[:1], e[1:], f[1:])[0])


# -- closest points -----------------------------------------------------------


def _segseg_batch(P0, P1, Q0, Q1):
    """Closest points of segment pairs: fractions s, t in [0,1], distance, parallel mask."""
    d1 = P1 - P0
    d2 = Q1 - Q0
    r = P0 - Q0
    a = np.einsum("ij,ij->i", d1, d1)
    e = np.einsum("ij,ij->i", d2, d2)
    b = np.einsum("ij,ij->i", d1, d2)
    c = np.einsum("ij,ij->i", d1, r)
    f = np.einsum("ij,ij->i", d2, r)
    denom = a * e - b * b  # equals |d1 x d2|^2
    par = denom <= (PARALLEL_TOL * PARALLEL_TOL) * a * e
    s = np.where(par, 0.0, np.clip((b * f - c * e) / np.where(par, 1.0, denom), 0.0, 1.0))
    t = (b * s + f) / e
    tlow = t < 0.0
    thigh = t > 1.0
    t = np.clip(t, 0.0, 1.0)
    s = np.where(tlow, np.clip(-c / a, 0.0, 1.0), s)
    s = np.where(thigh, np.clip((b - c) / a, 0.0, 1.0), s)
    diff = (P0 + s[:, None] * d1) - (Q0 + t[:, None] * d2)
    return s, t, np.linalg.norm(diff, axis=1), par


def _point_seg_batch(P, Q0, Q1):
    d = Q1 - Q0
    t = np.clip(np.einsum("ij,ij->i", P - Q0, d) / np.einsum("ij,ij->i", d, d), 0.0, 1.0)
    return t, np.linalg.norm(P - (Q0 + t[:, None] * d), axis=1)


# -- candidate generation -------------------------------------------------------

_NEIGHBOR_SHIFTS = [
    (0, 0, 1), (0, 1, -1), (0, 1, 0), (0, 1, 1),
    (1, -1, -1), (1, -1, 0), (1, -1, 1), (1, 0, -1), (1, 0, 0), (1, 0, 1),
    (1, 1, -1), (1, 1, 0), (1, 1, 1),
]


def _drop_neighbors(poly: Polygon, i, j):
    # same-edge and vertex-sharing pairs carry no distance constraint
    keep = ~((poly.nxt[i] == j) | (poly.nxt[j] == i) | (i == j))
    return i[keep], j[keep]


def _all_pairs(poly: Polygon):
    i, j = np.triu_indices(poly.num_vertices, k=1)
    return _drop_neighbors(poly, i.astype(np.intp), j.astype(np.intp))


def _grid_pairs(poly: Polygon, cutoff: float):
    """Edge pairs possibly within cutoff, via uniform grid hashing of edge boxes.

    Cell size matches the cutoff, so two points within cutoff land in cells at
    Chebyshev distance <= 1; within-cell pairs plus the 13 forward neighbor
    shifts cover every such pair exactly once. A tiny cutoff (near-cusp
    configurations) would flood the grid, so the cell size is clamped from
    below by a fraction of the diameter; larger cells only add candidates.
    """
    E = poly.num_vertices
    P1 = poly.verts[poly.nxt]
    cell = max(cutoff, float(np.ptp(poly.verts)) / 8.0)
    lo = np.floor(np.minimum(poly.verts, P1) / cell).astype(np.int64)
    hi = np.floor(np.maximum(poly.verts, P1) / cell).astype(np.int64)
    buckets: dict = {}
    for e in range(E):
        for cx in range(lo[e, 0], hi[e, 0] + 1):
            for cy in range(lo[e, 1], hi[e, 1] + 1):
                for cz in range(lo[e, 2], hi[e, 2] + 1):
                    buckets.setdefault((cx, cy, cz), []).append(e)
    arrs = {key: np.array(lst, dtype=np.int64) for key, lst in buckets.items()}
    chunks = []
    for key, mine in arrs.items():
        if len(mine) > 1:
            ii, jj = np.triu_indices(len(mine), k=1)
            chunks.append(mine[ii] * E + mine[jj])
        kx, ky, kz = key
        for dx, dy, dz in _NEIGHBOR_SHIFTS:
            other = arrs.get((kx + dx, ky + dy, kz + dz))
            if other is not None:
                a = np.repeat(mine, len(other))
                b = np.tile(other, len(mine))
                chunks.append(np.minimum(a, b) * E + np.maximum(a, b))
    if not chunks:
        return np.empty(0, dtype=np.intp), np.empty(0, dtype=np.intp)
    packed = np.unique(np.concatenate(chunks))
    return _drop_neighbors(poly, (packed // E).astype(np.intp), (packed % E).astype(np.intp))


def _candidate_pairs(poly: Polygon, cutoff: float, method: str):
    if method == "exhaustive":
        return _all_pairs(poly)
    if method == "grid":
        return _grid_pairs(poly, cutoff)
    raise ValueError(f"unknown search method {method!r}")


def _intersection_guard(poly: Polygon, d):
    scale = max(1.0, float(np.ptp(poly.verts)))
    if d.size and np.min(d) <= 1e-12 * scale:
        raise SelfIntersection("distinct points of the link coincide")


# -- contact candidates as flat arrays -----------------------------------------


def _empty_cands():
    z = np.empty(0)
    zi = np.empty(0, dtype=np.intp)
    return zi, z, zi, z, z, np.empty(0, dtype=bool)


def _cat(parts):
    live = [p for p in parts if len(p[0])]
    if not live:
        return _empty_cands()
    return tuple(np.concatenate(cols) for cols in zip(*live))


def _families(poly: Polygon, i, j):
    """Distance and endpoint fractions of each overlapping parallel edge pair.

    Entries are (dist, [(s, t), (s, t)]) or None when the projections touch in
    at most a point (the pair then behaves like any isolated contact).
    """
    v = poly.verts
    out = []
    for a, b in zip(i, j):
        p0 = v[a]
        u = v[poly.nxt[a]] - p0
        L1 = float(np.linalg.norm(u))
        u = u / L1
        x0 = float(np.dot(v[b] - p0, u))
        x1 = float(np.dot(v[poly.nxt[b]] - p0, u))
        lo, hi = max(0.0, min(x0, x1)), min(L1, max(x0, x1))
        if hi - lo <= PARAM_SNAP * L1:
            out.append(None)
            continue
        dist = float(np.linalg.norm((v[b] - p0) - x0 * u))
        ends = [(x / L1, min(max((x - x0) / (x1 - x0), 0.0), 1.0)) for x in (lo, hi)]
        out.append((dist, ends))
    return out


def _square_minima(poly: Polygon, i, j, family_mode: str):
    """Per-pair minimizers of distance over full edge-pair squares.

    family_mode 'ends' expands overlapping parallel pairs into their two
    endpoint configurations; 'mid' keeps one mid-overlap representative.
    Returns canonical candidate arrays (ep, fp, eq, fq, d, fam).
    """
    if len(i) == 0:
        return _empty_cands()
    v = poly.verts
    s, t, d, par = _segseg_batch(v[i], v[poly.nxt[i]], v[j], v[poly.nxt[j]])
    _intersection_guard(poly, d)
    parts = []
    plain = ~par
    if np.any(plain):
        ep, fp = _canonical(poly, i[plain], s[plain])
        eq, fq = _canonical(poly, j[plain], t[plain])
        parts.append((ep, fp, eq, fq, d[plain], np.zeros(len(ep), dtype=bool)))
    if np.any(par):
        pi, pj = i[par], j[par]
        fams = _families(poly, pi, pj)
        rows = {False: [], True: []}
        for k, fam in enumerate(fams):
            if fam is None:
                rows[False].append((pi[k], s[par][k], pj[k], t[par][k], d[par][k]))
            elif family_mode == "ends":
                dist, ends = fam
                for ss, tt in ends:
                    rows[True].append((pi[k], ss, pj[k], tt, dist))
            else:
                dist, ends = fam
                rows[True].append((pi[k], 0.5 * (ends[0][0] + ends[1][0]),
                                   pj[k], 0.5 * (ends[0][1] + ends[1][1]), dist))
        for fam_flag, lst in rows.items():
            if lst:
                aa = np.array(lst, dtype=float)
                _intersection_guard(poly, aa[:, 4])
                ep, fp = _canonical(poly, aa[:, 0].astype(np.intp), aa[:, 1])
                eq, fq = _canonical(poly, aa[:, 2].astype(np.intp), aa[:, 3])
                parts.append((ep, fp, eq, fq, aa[:, 4], np.full(len(ep), fam_flag)))
    return _cat(parts)


def _boundary_minima(poly: Polygon, i, j, T):
    """Admissible side and corner minimizers for pairs whose edge interiors
    fail the vb test. Returns candidate arrays plus the least distance found."""
    if len(i) == 0:
        return _empty_cands(), np.inf
    v = poly.verts
    half = np.full(len(i), 0.5)
    zero = np.zeros(len(i))
    parts = []
    dmin = np.inf
    # sides: one endpoint pinned at a vertex, the other free on the far edge
    for pe, free in ((i, j), (poly.nxt[i], j), (j, i), (poly.nxt[j], i)):
        ok = _vb_batch(poly, pe, zero, free, half) >= T
        if not np.any(ok):
            continue
        t, dd = _point_seg_batch(v[pe[ok]], v[free[ok]], v[poly.nxt[free[ok]]])
        fe, ff = _canonical(poly, free[ok], t)
        n1 = int(np.sum(ok))
        parts.append((pe[ok].astype(np.intp), np.zeros(n1), fe, ff, dd,
                      np.zeros(n1, dtype=bool)))
        dmin = min(dmin, float(np.min(dd)))
    # corners: both endpoints at vertices
    for pe in (i, poly.nxt[i]):
        for qe in (j, poly.nxt[j]):
            ok = _vb_batch(poly, pe, zero, qe, zero) >= T
            if not np.any(ok):
                continue
            dd = np.linalg.norm(v[pe[ok]] - v[qe[ok]], axis=1)
            n1 = int(np.sum(ok))
            parts.append((pe[ok].astype(np.intp), np.zeros(n1),
                          qe[ok].astype(np.intp), np.zeros(n1), dd,
                          np.zeros(n1, dtype=bool)))
            dmin = min(dmin, float(np.min(dd)))
    return _cat(parts), dmin


def _verify_mask(poly: Polygon, cands, T):
    """Keep candidates where no admissible one-sided move decreases distance.

    For an endpoint at a vertex, distance must not decrease along either
    incident edge; with T set, a decreasing move only disqualifies the pair
    when its arc vertex count stays at or above T (moves that exit the
    admissible family do not count). Family endpoints pass by construction.
    """
    ep, fp, eq, fq, d, fam = cands
    n = len(ep)
    if n == 0:
        return np.zeros(0, dtype=bool)
    v = poly.verts
    P = np.where((fp == 0.0)[:, None], v[ep],
                 (1 - fp)[:, None] * v[ep] + fp[:, None] * v[poly.nxt[ep]])
    Q = np.where((fq == 0.0)[:, None], v[eq],
                 (1 - fq)[:, None] * v[eq] + fq[:, None] * v[poly.nxt[eq]])
    keep = np.ones(n, dtype=bool)
    for E, F, W, OTH, oe, of in ((ep, fp, P, Q, eq, fq), (eq, fq, Q, P, ep, fp)):
        idx = np.nonzero((F == 0.0) & ~fam)[0]
        if not len(idx):
            continue
        w = W[idx]
        oth = OTH[idx]
        for incoming in (False, True):
            edge = poly.prv[E[idx]] if incoming else E[idx]
            far = v[edge] if incoming else v[poly.nxt[edge]]
            dirs = far - w
            slope = np.einsum("ij,ij->i", w - oth, dirs) / np.linalg.norm(dirs, axis=1)
            bad = np.nonzero(slope < -SLOPE_TOL * np.maximum(1.0, d[idx]))[0]
            if len(bad) and T is not None:
                vbs = _vb_batch(poly, edge[bad], np.full(len(bad), 0.5),
                                oe[idx[bad]], of[idx[bad]])
                bad = bad[vbs >= T]  # moves that exit the family do not count
            keep[idx[bad]] = False
    return keep


def _order_dedup(cands):
    """Canonically order each pair, merge duplicates, sort lexicographically."""
    ep, fp, eq, fq, d, fam = cands
    if len(ep) == 0:
        return cands
    swap = (eq < ep) | ((eq == ep) & (fq < fp))
    ep2 = np.where(swap, eq, ep)
    fp2 = np.where(swap, fq, fp)
    eq2 = np.where(swap, ep, eq)
    fq2 = np.where(swap, fp, fq)
    key = np.stack([ep2, np.rint(fp2 / PARAM_SNAP).astype(np.int64),
                    eq2, np.rint(fq2 / PARAM_SNAP).astype(np.int64)], axis=1)
    _, first, inv = np.unique(key, axis=0, return_index=True, return_inverse=True)
    fam_any = np.zeros(len(first), dtype=bool)
    np.maximum.at(fam_any, inv.ravel(), fam)
    return ep2[first], fp2[first], eq2[first], fq2[first], d[first], fam_any


# -- public functionals ----------------------------------------------------------


def _min_minrad(poly: Polygon) -> float:
    return float(np.min(minrads(poly)))


def _mean_edge(poly: Polygon) -> float:
    return float(np.mean(poly.edge_lengths()))


def _dist_cutoff(poly: Polygon, mn: float) -> float:
    # pairs farther than 2*mn cannot lower a thickness already capped by mn
    if np.isfinite(mn):
        return 2.0 * mn * 1.05
    return 2.1 * float(np.ptp(poly.verts))


def pthi(poly: Polygon, method: str = "grid", candidates=None) -> float:
    """Polygonal thickness: the least curvature radius against half the least
    locally minimal self-distance.

    The local-minimum test matters: on a convex polygon the closest approach
    between non-neighbor edges shrinks toward the shared corner and is not a
    minimum, so the distance term is vacuous and curvature alone controls.
    """
    mn = _min_minrad(poly)
    if candidates is None:
        i, j = _candidate_pairs(poly, _dist_cutoff(poly, mn), method)
    else:
        i, j = candidates
    cands = _square_minima(poly, i, j, family_mode="mid")
    keep = _verify_mask(poly, cands, None)
    d = cands[4][keep]
    dmin = float(np.min(d)) if d.size else np.inf
    return float(min(mn, dmin / 2.0))


def prop_len(poly: Polygon, method: str = "grid", candidates=None) -> float:
    """Length over polygonal thickness (scale invariant)."""
    return float(np.sum(poly.edge_lengths())) / pthi(poly, method=method, candidates=candidates)


def _vb_dmin(poly: Polygon, i, j, T):
    """Least self-distance over the vb-admissible point pairs of the candidates."""
    if len(i) == 0:
        return np.inf
    v = poly.verts
    mvb = _vb_batch(poly, i, np.full(len(i), 0.5), j, np.full(len(j), 0.5))
    full = mvb >= T
    dmin = np.inf
    if np.any(full):
        _, _, d, _ = _segseg_batch(v[i[full]], v[poly.nxt[i[full]]],
                                   v[j[full]], v[poly.nxt[j[full]]])
        _intersection_guard(poly, d)
        dmin = float(np.min(d))
    # a vertex endpoint raises vb by at most one per side, so only pairs in
    # the band [T-2, T) can still reach the admissible family on a boundary
    near = ~full & (mvb >= T - 2.0)
    if np.any(near):
        _, bd = _boundary_minima(poly, i[near], j[near], T)
        dmin = min(dmin, bd)
    return dmin


def cthi(poly: Polygon, tau: float = 1.0, ell: float | None = None,
         method: str = "grid", candidates=None) -> float:
    """Constraint thickness: min of MinRad/tau and half the least self-distance
    over point pairs whose arc vertex count clears pi/theta(tau, ell)."""
    if ell is None:
        ell = _mean_edge(poly)
    mn = _min_minrad(poly) / tau
    T = np.pi / theta_of(tau, ell)
    if candidates is None:
        i, j = _candidate_pairs(poly, _dist_cutoff(poly, mn), method)
    else:
        i, j = candidates
    return float(min(mn, _vb_dmin(poly, i, j, T) / 2.0))


def find_active_sets(poly: Polygon, tau: float = 1.0, ell: float | None = None,
                     target: float = 1.0, strut_tol: float = 1e-4,
                     kink_tol: float = 1e-4, method: str = "grid") -> ActiveSets:
    """Struts and kinks of a configuration near constraint thickness = target.

    Struts are local minima of self-distance restricted to the vb-admissible
    family, kept when dist/2 <= target*(1+strut_tol); overlapping parallel
    edges report their family endpoint pairs instead of the non-isolated
    interior minima. Kinks are (vertex, sign) pairs with MinRad(sign)/tau <=
    target*(1+kink_tol). Both lists arrive canonically sorted.
    """
    if ell is None:
        ell = _mean_edge(poly)
    T = np.pi / theta_of(tau, ell)
    cutoff = 2.0 * target * (1.0 + strut_tol)
    i, j = _candidate_pairs(poly, cutoff, method)
    mvb = _vb_batch(poly, i, np.full(len(i), 0.5), j, np.full(len(j), 0.5))
    full = mvb >= T
    near = ~full & (mvb >= T - 2.0)
    bcands, _ = _boundary_minima(poly, i[near], j[near], T)
    cands = _cat([_square_minima(poly, i[full], j[full], family_mode="ends"), bcands])
    keep = _verify_mask(poly, cands, T)
    cands = tuple(col[keep] for col in cands)
    ep, fp, eq, fq, d, fam = _order_dedup(cands)
    thr = 2.0 * target * (1.0 + strut_tol)
    struts = []
    for k in range(len(ep)):
        if d[k] > thr:
            continue
        vbv = float(_vb_batch(poly, ep[k:k + 1], fp[k:k + 1], eq[k:k + 1], fq[k:k + 1])[0])
        if vbv < T:
            continue
        nv = int(fp[k] == 0.0) + int(fq[k] == 0.0)
        kind = {2: "vv", 1: "ve", 0: "ee"}[nv]
        struts.append(Strut(int(ep[k]), 1.0 - float(fp[k]), int(eq[k]), 1.0 - float(fq[k]),
                            float(d[k]), vbv, kind, bool(fam[k])))
    struts.sort(key=Strut.sort_key)
    mr = minrads(poly)
    bound = tau * target * (1.0 + kink_tol)
    kinks = [Kink(vtx, sign, float(mr[vtx, col]))
             for vtx in range(poly.num_vertices)
             for col, sign in ((0, -1), (1, +1))
             if mr[vtx, col] <= bound]
    kinks.sort(key=Kink.sort_key)
    return ActiveSets(
        struts=struts,
        kinks=kinks,
        pthi=pthi(poly, method=method),
        cthi=cthi(poly, tau=tau, ell=ell, method=method),
        tau=tau, ell=ell, target=target, strut_tol=strut_tol, kink_tol=kink_tol,
    )


@dataclass(frozen=True)
class CorReport:
    """Outcome of the thickness-equality certificate; truthy iff both parts hold.

    dcsd_in_vb: every unrestricted local minimum of self-distance clears the
    arc admissibility threshold.  boundary_clear: every configuration on the
    boundary of the admissible set keeps distance at least twice the polygonal
    thickness.  min_boundary_dist is inf when no boundary configuration exists.
    """

    dcsd_in_vb: bool
    boundary_clear: bool
    min_boundary_dist: float
    pthi: float

    def __bool__(self) -> bool:
        return self.dcsd_in_vb and self.boundary_clear


def _boundary_config_dists(poly: Polygon, Tc: float):
    """Distances of admissibility-boundary configurations.

    A vertex-vertex or vertex-edge configuration sits on the boundary when its
    own arc count clears Tc but some neighbouring open edge-pair region does
    not.  Regions without a vertex endpoint are open, so this covers the whole
    topological boundary; side counts dominate their adjacent interiors, hence
    probing the interiors alone decides adjacency.
    """
    V = poly.num_vertices
    prv = poly.prv
    dists = []

    a, b = np.triu_indices(V, k=1)
    a = a.astype(np.intp)
    b = b.astype(np.intp)
    z = np.zeros(len(a))
    on = _vb_batch(poly, a, z, b, z) >= Tc
    a, b = a[on], b[on]
    if len(a):
        half = np.full(len(a), 0.5)
        worst = np.full(len(a), np.inf)
        for pa in (a, prv[a]):
            for qb in (b, prv[b]):
                worst = np.minimum(worst, _vb_batch(poly, pa, half, qb, half))
        bnd = worst < Tc
        if np.any(bnd):
            dists.append(np.linalg.norm(poly.verts[a[bnd]] - poly.verts[b[bnd]],
                                        axis=1))

    v = np.repeat(np.arange(V, dtype=np.intp), V)
    e = np.tile(np.arange(V, dtype=np.intp), V)
    z = np.zeros(len(v))
    half = np.full(len(v), 0.5)
    on = _vb_batch(poly, v, z, e, half) >= Tc
    v, e, half = v[on], e[on], half[on]
    if len(v):
        worst = np.minimum(_vb_batch(poly, v, half, e, half),
                           _vb_batch(poly, prv[v], half, e, half))
        bnd = worst < Tc
        if np.any(bnd):
            _, d = _point_seg_batch(poly.verts[v[bnd]], poly.verts[e[bnd]],
                                    poly.verts[poly.nxt[e[bnd]]])
            dists.append(d)

    if not dists:
        return np.empty(0)
    return np.concatenate(dists)


def check_cor_hypotheses(poly: Polygon, tau: float = 1.0, ell: float | None = None,
                         method: str = "exhaustive") -> CorReport:
    """Certificate that the arc-restricted thickness equals the polygonal one.

    Two conditions: every unrestricted local minimum of self-distance must
    clear the arc admissibility threshold, and every configuration on the
    boundary of the admissible set must keep distance at least twice the
    polygonal thickness (non-strict: flat contacts such as the square's
    vertex-to-opposite-edge drop sit exactly at twice the thickness).
    """
    if ell is None:
        ell = _mean_edge(poly)
    T = np.pi / theta_of(tau, ell)
    Tc = np.ceil(T - 1e-9)
    mn = _min_minrad(poly)
    i, j = _candidate_pairs(poly, _dist_cutoff(poly, mn), method)
    cands = _square_minima(poly, i, j, family_mode="mid")
    keep = _verify_mask(poly, cands, None)
    ep, fp, eq, fq, _, _ = tuple(col[keep] for col in cands)
    dcsd_in_vb = not (len(ep) and np.min(_vb_batch(poly, ep, fp, eq, fq)) < Tc)
    p = pthi(poly, method=method)
    d = _boundary_config_dists(poly, Tc)
    dmin = float(np.min(d)) if len(d) else np.inf
    clear = dmin >= 2.0 * p * (1.0 - 1e-12)
    return CorReport(dcsd_in_vb=dcsd_in_vb, boundary_clear=clear,
                     min_boundary_dist=dmin, pthi=p)
