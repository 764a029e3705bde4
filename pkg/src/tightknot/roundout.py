"""Rounded arc-and-segment curves and certified smooth ropelength bounds.

Splicing a tangent circular arc of radius MinRad(v) into every corner turns
a polygon into a C1 curve whose worst radius of curvature equals the
polygon's worst MinRad. Sampling that curve on a pruned grid yields a lower
bound on its candidate self-contact distance that is sharp up to
(1 + K) * step^2, so the length over thickness quotient computed from it is
a certified upper bound on the smooth ropelength of the shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Polygon, minrads, turning_angles

__all__ = [
    "SmoothComponent",
    "SmoothCurve",
    "DistanceCertificate",
    "RopBreakdown",
    "splice",
    "certified_min_distance",
    "rop_upper_bound",
    "sample_even",
    "GAP_TARGET",
]

# default certification gap for the contact lower bound, in thickness units
GAP_TARGET = 1e-6

# vertices turning less than this contribute no arc; below it the arc center
# recedes far enough that evaluating the arc would cost more precision than
# the flat corner it replaces
_COLINEAR_ANGLE = 1e-8

_SEG = 0
_ARC = 1


class SmoothComponent:
    """One run of straight segments and circular arcs, usually closed.

    Pieces are stored columnwise. A segment piece evaluates as
    origin + u * basis1 for u in [0, length); an arc piece of radius r
    evaluates as origin + cos(u / r) * basis1 + sin(u / r) * basis2 where
    origin is the arc center and |basis1| = |basis2| = r. Both forms are
    unit speed in u, so piece lengths concatenate into a global arclength
    parameter.
    """

    def __init__(self, kinds, origins, basis1, basis2, radii, lengths,
                 closed: bool = True):
        self.kinds = np.asarray(kinds, dtype=np.int8)
        self.origins = np.asarray(origins, dtype=float).reshape(-1, 3)
        self.basis1 = np.asarray(basis1, dtype=float).reshape(-1, 3)
        self.basis2 = np.asarray(basis2, dtype=float).reshape(-1, 3)
        self.radii = np.asarray(radii, dtype=float)
        self.lengths = np.asarray(lengths, dtype=float)
        if not (len(self.kinds) == len(self.origins) == len(self.basis1)
                == len(self.basis2) == len(self.radii) == len(self.lengths)):
            raise ValueError("piece arrays disagree on length")
        if len(self.kinds) == 0:
            raise ValueError("component needs at least one piece")
        self.closed = bool(closed)
        self.cum = np.concatenate(([0.0], np.cumsum(self.lengths)))
        arc = self.kinds == _ARC
        self.curv_rates = np.where(arc, 1.0 / np.where(arc, self.radii, 1.0), 0.0)
        self.cumk = np.concatenate(([0.0], np.cumsum(self.curv_rates * self.lengths)))

    @property
    def num_pieces(self) -> int:
        return len(self.kinds)

    @property
    def length(self) -> float:
        return float(self.cum[-1])

    @property
    def total_curvature(self) -> float:
        return float(self.cumk[-1])

    @property
    def max_curvature(self) -> float:
        return float(self.curv_rates.max(initial=0.0))

    def _locate(self, s):
        s = np.asarray(s, dtype=float)
        if self.closed:
            s = np.mod(s, self.length)
        else:
            s = np.clip(s, 0.0, self.length)
        idx = np.searchsorted(self.cum, s, side="right") - 1
        idx = np.clip(idx, 0, self.num_pieces - 1)
        return idx, s - self.cum[idx]

    def points_at(self, s) -> np.ndarray:
        idx, u = self._locate(s)
        arc = self.kinds[idx] == _ARC
        r = np.where(arc, self.radii[idx], 1.0)
        phase = np.where(arc, u / r, 0.0)
        co, si = np.cos(phase)[:, None], np.sin(phase)[:, None]
        b1, b2 = self.basis1[idx], self.basis2[idx]
        straight = self.origins[idx] + u[:, None] * b1
        bent = self.origins[idx] + co * b1 + si * b2
        return np.where(arc[:, None], bent, straight)

    def tangents_at(self, s) -> np.ndarray:
        idx, u = self._locate(s)
        arc = self.kinds[idx] == _ARC
        r = np.where(arc, self.radii[idx], 1.0)
        phase = np.where(arc, u / r, 0.0)
        co, si = np.cos(phase)[:, None], np.sin(phase)[:, None]
        b1, b2 = self.basis1[idx], self.basis2[idx]
        bent = (-si * b1 + co * b2) / r[:, None]
        return np.where(arc[:, None], bent, b1)

    def curvature_to(self, s) -> np.ndarray:
        """Total curvature accumulated from the component start to s."""
        idx, u = self._locate(s)
        return self.cumk[idx] + u * self.curv_rates[idx]

    # piece endpoint views, used to check junction continuity
    def piece_starts(self):
        zero = np.zeros(self.num_pieces)
        return self._eval_piecewise(zero)

    def piece_ends(self):
        return self._eval_piecewise(self.lengths)

    def piece_start_tangents(self):
        zero = np.zeros(self.num_pieces)
        return self._eval_piecewise(zero, tangent=True)

    def piece_end_tangents(self):
        return self._eval_piecewise(self.lengths, tangent=True)

    def _eval_piecewise(self, u, tangent: bool = False):
        arc = self.kinds == _ARC
        r = np.where(arc, self.radii, 1.0)
        phase = np.where(arc, u / r, 0.0)
        co, si = np.cos(phase)[:, None], np.sin(phase)[:, None]
        if tangent:
            bent = (-si * self.basis1 + co * self.basis2) / r[:, None]
            return np.where(arc[:, None], bent, self.basis1)
        bent = self.origins + co * self.basis1 + si * self.basis2
        return np.where(arc[:, None], bent, self.origins + u[:, None] * self.basis1)


@dataclass
class SmoothCurve:
    components: list

    @property
    def length(self) -> float:
        return float(sum(c.length for c in self.components))

    @property
    def curvature_bound(self) -> float:
        return float(max(c.max_curvature for c in self.components))

    def points_at(self, comp: int, s) -> np.ndarray:
        return self.components[comp].points_at(s)


def splice(poly: Polygon) -> SmoothCurve:
    """Replace every corner with a tangent circular arc of radius MinRad.

    The arc at vertex v has radius min(MinRad-, MinRad+) and consumes
    tangent length min(|e-|, |e+|) / 2 from each incident edge, so it always
    touches the midpoint of the shorter edge and arcs from adjacent vertices
    meet at worst exactly (equilateral polygons round out to piecewise
    circles). Colinear vertices contribute no arc. The result is C1 with
    radius of curvature at least min MinRad everywhere.
    """
    mrs = np.min(minrads(poly), axis=1)
    thetas = turning_angles(poly)
    comps = []
    for c in range(poly.num_components):
        lo, hi = poly.offsets[c], poly.offsets[c + 1]
        verts = poly.verts[lo:hi]
        n = hi - lo
        evecs = np.roll(verts, -1, axis=0) - verts
        elens = np.linalg.norm(evecs, axis=1)
        if np.any(elens <= 0.0):
            raise ValueError("zero length edge")
        dirs = evecs / elens[:, None]
        theta = thetas[lo:hi]
        r = mrs[lo:hi]
        if np.any(theta >= np.pi - 1e-12):
            raise ValueError("corners too tight to splice")
        live = (theta > _COLINEAR_ANGLE) & np.isfinite(r)
        tlen = np.zeros(n)
        tlen[live] = r[live] * np.tan(theta[live] / 2.0)
        # vertex k sits between edge k-1 and edge k; edge k loses tlen[k]
        # at its start and tlen[k+1] at its end
        remnant = elens - tlen - np.roll(tlen, -1)
        if np.any(remnant < -1e-9 * elens):
            raise ValueError("corners too tight to splice")

        kinds, origins, b1s, b2s, radii, lengths = [], [], [], [], [], []
        for k in range(n):
            if live[k]:
                u_in = dirs[k - 1]
                w_out = dirs[k]
                p_in = verts[k] - tlen[k] * u_in
                bis = w_out - u_in
                bis /= np.linalg.norm(bis)
                center = verts[k] + (r[k] / np.cos(theta[k] / 2.0)) * bis
                kinds.append(_ARC)
                origins.append(center)
                b1s.append(p_in - center)
                b2s.append(r[k] * u_in)
                radii.append(r[k])
                lengths.append(r[k] * theta[k])
            if remnant[k] > 1e-12 * elens[k]:
                kinds.append(_SEG)
                origins.append(verts[k] + tlen[k] * dirs[k])
                b1s.append(dirs[k])
                b2s.append(np.zeros(3))
                radii.append(np.inf)
                lengths.append(remnant[k])
        comps.append(SmoothComponent(kinds, origins, b1s, b2s, radii, lengths))
    return SmoothCurve(comps)


@dataclass(frozen=True)
class DistanceCertificate:
    """Lower bound on the candidate self-contact distance of a curve.

    lower_bound = sampled_min - gap where gap = (1 + K) * step^2 and step is
    the final sample spacing; location is the sample pair attaining
    sampled_min as ((comp_a, arclength_a), (comp_b, arclength_b)), or None
    when the curve admits no contact candidates at all.
    """

    lower_bound: float
    sampled_min: float
    gap: float
    step: float
    location: tuple | None


def _block_eval(curve, ca, cb, ia, ib, ha, hb, thr_a):
    """Distances and admissibility for cell center pairs of one block."""
    A, B = curve.components[ca], curve.components[cb]
    sa = (ia + 0.5) * ha
    sb = (ib + 0.5) * hb
    d = np.linalg.norm(A.points_at(sa) - B.points_at(sb), axis=1)
    if ca != cb:
        return sa, sb, d, np.ones(len(d), dtype=bool), None
    fwd = np.abs(A.curvature_to(sb) - A.curvature_to(sa))
    kmin = np.minimum(fwd, A.total_curvature - fwd) if A.closed else fwd
    return sa, sb, d, kmin >= thr_a, kmin


def certified_min_distance(curve: SmoothCurve, eps: float,
                           max_pairs: int = 30_000_000) -> DistanceCertificate:
    """Certified lower bound on the distance of the closest contact pair.

    Contact candidates are pairs on different components, or pairs on the
    same component both of whose connecting arcs carry total curvature at
    least pi; closer same-component pairs always admit a first order
    shortening move and so cannot pinch the tube. The domain of candidate
    pairs is searched on a dyadic grid: a cell is dropped once its center
    distance exceeds the running best by the cell's Lipschitz radius, and
    survivors are split until the spacing falls below eps. The returned
    bound subtracts (1 + K) * step^2 from the best sample, which is valid
    whenever the true contact distance exceeds 1/2; a curve failing that
    scale test raises with instructions to rescale.
    """
    comps = curve.components
    K = curve.curvature_bound
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    lens = np.array([c.length for c in comps])
    start = max(eps, float(lens.sum()) / 256.0)
    levels = max(0, math.ceil(math.log2(start / eps)))
    base = eps * 2.0 ** levels
    n0 = np.maximum(2, np.ceil(lens / base).astype(int))

    blocks = []
    for ca in range(len(comps)):
        for cb in range(ca, len(comps)):
            if ca == cb:
                ia, ib = np.triu_indices(n0[ca], k=1)
            else:
                ia = np.repeat(np.arange(n0[ca]), n0[cb])
                ib = np.tile(np.arange(n0[cb]), n0[ca])
            blocks.append([ca, cb, ia.astype(np.int64), ib.astype(np.int64)])

    best = np.inf
    where = None
    for level in range(levels + 1):
        nloc = n0 * 2 ** level
        h = lens / nloc
        h_global = float(h.max())
        evaluated = []
        for ca, cb, ia, ib in blocks:
            if len(ia) == 0:
                evaluated.append(None)
                continue
            # admissibility threshold at the final spacing of this component
            thr = np.pi - 2.0 * K * lens[ca] / (n0[ca] * 2 ** levels)
            sa, sb, d, ok, kmin = _block_eval(
                curve, ca, cb, ia, ib, h[ca], h[cb], thr)
            if ok.any():
                j = int(np.argmin(np.where(ok, d, np.inf)))
                if d[j] < best:
                    best = float(d[j])
                    where = ((ca, float(sa[j])), (cb, float(sb[j])))
            evaluated.append((d, kmin, thr))
        if level == levels:
            break
        total = 0
        for blk, ev in zip(blocks, evaluated):
            ca, cb, ia, ib = blk
            if ev is None:
                continue
            d, kmin, thr = ev
            rad = (h[ca] + h[cb]) / 2.0
            keep = d - rad <= best + 1e-12 * (1.0 + best)
            if ca == cb:
                # drop cells that sit entirely below the curvature threshold
                keep &= kmin + K * h[ca] >= thr
            ia, ib = ia[keep], ib[keep]
            ia = np.concatenate((2 * ia, 2 * ia + 1, 2 * ia, 2 * ia + 1))
            ib = np.concatenate((2 * ib, 2 * ib, 2 * ib + 1, 2 * ib + 1))
            if ca == cb:
                tri = ib > ia
                ia, ib = ia[tri], ib[tri]
            blk[2], blk[3] = ia, ib
            total += len(ia)
        if total > max_pairs:
            raise RuntimeError(
                "contact search exceeded %d candidate pairs; raise max_pairs "
                "or loosen eps" % max_pairs)

    gap = (1.0 + K) * h_global ** 2
    if not np.isfinite(best):
        return DistanceCertificate(np.inf, np.inf, gap, h_global, None)
    if best - h_global <= 0.5:
        raise ValueError(
            "sampled contact distance %.6g is too close to 1/2 for the "
            "quadratic error bound; rescale the curve up and retry" % best)
    return DistanceCertificate(best - gap, best, gap, h_global, where)


@dataclass(frozen=True)
class RopBreakdown:
    rop_bound: float
    smooth_length: float
    min_minrad: float
    contact_lower: float
    thickness_lower: float
    controlling: str
    embedded_at_unit_scale: bool
    certification_gap: float
    step: float
    location: tuple | None


def rop_upper_bound(poly: Polygon, eps: float | None = None):
    """Certified upper bound on the smooth ropelength of the rounded curve.

    Rounds the polygon out, lower-bounds the smooth thickness by
    min(min MinRad, contact lower bound / 2), and divides the smooth length
    by it. Underestimating thickness overestimates ropelength, so the
    quotient is a true bound. The breakdown records whether curvature or
    contact controls and whether the curve still embeds as a unit tube at
    this scale.
    """
    curve = splice(poly)
    mrs = np.min(minrads(poly), axis=1)
    finite = mrs[np.isfinite(mrs)]
    min_mr = float(finite.min()) if len(finite) else np.inf
    K = curve.curvature_bound
    if eps is None:
        eps = math.sqrt(GAP_TARGET / (1.0 + K))
    cert = certified_min_distance(curve, eps)
    thi = min(min_mr, cert.lower_bound / 2.0)
    bound = curve.length / thi
    curvature_controls = min_mr <= cert.lower_bound / 2.0 + cert.gap
    breakdown = RopBreakdown(
        rop_bound=bound,
        smooth_length=curve.length,
        min_minrad=min_mr,
        contact_lower=cert.lower_bound,
        thickness_lower=thi,
        controlling="curvature" if curvature_controls else "contact",
        embedded_at_unit_scale=bool(thi >= 1.0),
        certification_gap=cert.gap,
        step=cert.step,
        location=cert.location,
    )
    return bound, breakdown


def sample_even(curve: SmoothCurve, counts, inflate: bool = True) -> Polygon:
    """Resample the curve at equal arclength into a new polygon.

    Samples landing on an arc of radius r are pushed radially out to
    r / cos(h / 2r), which makes the chords of a fully sampled arc touch the
    original circle at MinRad exactly r instead of the inscribed r * cos.
    That keeps resampling from eating the curvature budget of an already
    tight shape.
    """
    out = []
    for comp, n in zip(curve.components, counts):
        n = int(n)
        if n < 3:
            raise ValueError("components need at least 3 samples")
        h = comp.length / n
        s = (np.arange(n) + 0.5) * h
        pts = comp.points_at(s)
        if inflate:
            idx, _ = comp._locate(s)
            # an arc spanning less than a few samples cannot be rebuilt at
            # its own radius, so under-resolved arcs stay inscribed
            arc = (comp.kinds[idx] == _ARC) & (h < np.pi / 2.0 * comp.radii[idx])
            if arc.any():
                r = comp.radii[idx[arc]]
                centers = comp.origins[idx[arc]]
                factor = 1.0 / np.cos(h / (2.0 * r))
                pts[arc] = centers + factor[:, None] * (pts[arc] - centers)
        out.append(pts)
    return Polygon(out)
