"""Polygonal curve primitives.

Lengths, turning angles, minimum radius of curvature, and the analytic
gradients of the quantities the constrained descent pushes around. A
"variation" throughout is a plain (V, 3) float array: one 3-vector per global
vertex.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Polygon",
    "turning_angle",
    "turning_angles",
    "minrad_pm",
    "minrads",
    "polygon_length",
    "grad_length",
    "grad_chord",
    "grad_minrad",
    "eq_penalty",
    "grad_eq_penalty",
    "scatter_sparse_gradient",
]


class Polygon:
    """A union of closed space polygons under one global vertex index.

    Vertices live in a single (V, 3) array; components are contiguous index
    ranges. Edge k runs from vertex k to vertex nxt[k], so a closed component
    with n vertices owns n edges and every global vertex index doubles as a
    global edge index.
    """

    __slots__ = ("verts", "offsets", "nxt", "prv", "comp_of")

    def __init__(self, components):
        comps = [np.asarray(c, dtype=float) for c in components]
        if not comps:
            raise ValueError("polygon needs at least one component")
        for c in comps:
            if c.ndim != 2 or c.shape[1] != 3:
                raise ValueError("each component must be an (n, 3) array")
            if len(c) < 3:
                raise ValueError("closed components need at least 3 vertices")
            if not np.all(np.isfinite(c)):
                raise ValueError("non-finite vertex coordinates")
        self.verts = np.ascontiguousarray(np.vstack(comps))
        sizes = np.array([len(c) for c in comps], dtype=np.intp)
        self.offsets = np.concatenate(([0], np.cumsum(sizes)))
        idx = np.arange(self.offsets[-1], dtype=np.intp)
        self.nxt = idx + 1
        self.prv = idx - 1
        for a, b in zip(self.offsets[:-1], self.offsets[1:]):
            self.nxt[b - 1] = a
            self.prv[a] = b - 1
        self.comp_of = np.repeat(np.arange(len(sizes), dtype=np.intp), sizes)
        if np.min(self.edge_lengths()) <= 0.0:
            raise ValueError("coincident consecutive vertices")

    # -- structure ---------------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return len(self.verts)

    @property
    def num_components(self) -> int:
        return len(self.offsets) - 1

    def component_sizes(self):
        return np.diff(self.offsets)

    def component(self, c: int) -> np.ndarray:
        return self.verts[self.offsets[c]:self.offsets[c + 1]]

    def components(self):
        return [self.component(c) for c in range(self.num_components)]

    def with_verts(self, verts: np.ndarray) -> "Polygon":
        """Same component structure, new coordinates."""
        verts = np.asarray(verts, dtype=float)
        if verts.shape != self.verts.shape:
            raise ValueError("vertex array shape mismatch")
        out = object.__new__(Polygon)
        out.verts = np.ascontiguousarray(verts)
        out.offsets = self.offsets
        out.nxt = self.nxt
        out.prv = self.prv
        out.comp_of = self.comp_of
        if np.min(out.edge_lengths()) <= 0.0:
            raise ValueError("coincident consecutive vertices")
        return out

    def scaled(self, s: float) -> "Polygon":
        return self.with_verts(self.verts * float(s))

    # -- metric quantities --------------------------------------------------

    def edge_vectors(self) -> np.ndarray:
        return self.verts[self.nxt] - self.verts

    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.verts[self.nxt] - self.verts, axis=1)

    def point_on_edge(self, edge, alpha):
        """Point alpha*start + (1-alpha)*end of the given edge(s)."""
        edge = np.asarray(edge, dtype=np.intp)
        alpha = np.asarray(alpha, dtype=float)
        a = alpha[..., None] if alpha.ndim else alpha
        return a * self.verts[edge] + (1.0 - a) * self.verts[self.nxt[edge]]

    def arclength_of(self, edge, alpha):
        """Arclength position measured from the start of the component."""
        el = self.edge_lengths()
        starts = np.concatenate(([0.0], np.cumsum(el)))
        base = starts[edge] - starts[self.offsets[self.comp_of[edge]]]
        return base + (1.0 - np.asarray(alpha, dtype=float)) * el[edge]


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


# -- angles and curvature radii ----------------------------------------------


def turning_angles(poly: Polygon) -> np.ndarray:
    """Exterior angle at every vertex, in [0, pi], via atan2 (stable near 0)."""
    v = poly.verts
    a = v - v[poly.prv]
    b = v[poly.nxt] - v
    s = np.linalg.norm(np.cross(a, b), axis=1)
    c = np.einsum("ij,ij->i", a, b)
    return np.arctan2(s, c)


def turning_angle(poly: Polygon, i: int) -> float:
    v = poly.verts
    a = v[i] - v[poly.prv[i]]
    b = v[poly.nxt[i]] - v[i]
    return float(np.arctan2(np.linalg.norm(np.cross(a, b)), np.dot(a, b)))


def minrads(poly: Polygon) -> np.ndarray:
    """(V, 2) array of [MinRad-, MinRad+] per vertex; +inf where colinear.

    MinRad+(v) = |outgoing edge| / (2 tan(theta/2)) and MinRad- uses the
    incoming edge; both are the radius of the largest circle tangent to both
    edges whose tangent points stay on the named edge.
    """
    th = turning_angles(poly)
    el = poly.edge_lengths()
    t = np.tan(0.5 * th)
    with np.errstate(divide="ignore"):
        inv = np.where(t > 0.0, 0.5 / np.where(t > 0.0, t, 1.0), np.inf)
    return np.stack([el[poly.prv] * inv, el * inv], axis=1)


def minrad_pm(poly: Polygon, i: int):
    """(MinRad-, MinRad+) at vertex i."""
    m = minrads(poly)
    return float(m[i, 0]), float(m[i, 1])


def polygon_length(poly: Polygon) -> float:
    return float(np.sum(poly.edge_lengths()))


# -- gradients ----------------------------------------------------------------


def grad_length(poly: Polygon) -> np.ndarray:
    """Steepest-descent direction of total length, one 3-vector per vertex.

    At vertex v this is unit(prev - v) + unit(next - v): the negative of the
    calculus gradient of Len, so stepping along the returned field shortens
    the polygon. Zero at colinear vertices.
    """
    v = poly.verts
    return _unit(v[poly.prv] - v) + _unit(v[poly.nxt] - v)


def scatter_sparse_gradient(indices, vectors, num_vertices: int) -> np.ndarray:
    """Accumulate a sparse per-vertex gradient into a dense (V, 3) field."""
    out = np.zeros((num_vertices, 3))
    np.add.at(out, np.asarray(indices, dtype=np.intp), np.asarray(vectors, dtype=float))
    return out


def grad_chord(poly: Polygon, p_edge: int, p_alpha: float, q_edge: int, q_alpha: float):
    """Gradient of d(p, q)/2 for points frozen at fixed edge parameters.

    p = p_alpha * start(p_edge) + (1 - p_alpha) * end(p_edge), same for q.
    Returns (indices, vectors): up to four vertex indices with their
    3-vector contributions (duplicates possible when the edges share a
    vertex; callers accumulate).
    """
    v = poly.verts
    i0, i1 = p_edge, int(poly.nxt[p_edge])
    j0, j1 = q_edge, int(poly.nxt[q_edge])
    p = p_alpha * v[i0] + (1.0 - p_alpha) * v[i1]
    q = q_alpha * v[j0] + (1.0 - q_alpha) * v[j1]
    diff = p - q
    d = float(np.linalg.norm(diff))
    if d <= 0.0:
        raise ValueError("zero-length chord has no gradient")
    u = diff / (2.0 * d)
    indices = np.array([i0, i1, j0, j1], dtype=np.intp)
    vectors = np.stack([p_alpha * u, (1.0 - p_alpha) * u, -q_alpha * u, -(1.0 - q_alpha) * u])
    return indices, vectors


def _grad_minrad_triple(a, v, b):
    """Gradient blocks of |b - v| / (2 tan(theta/2)) at (a, v, b).

    a is the far end of the reference edge NOT entering the numerator; the
    turning angle theta at v is shared by both orientations.
    """
    A = a - v
    B = b - v
    na = np.linalg.norm(A)
    nb = np.linalg.norm(B)
    cross = np.cross(B, A)
    nc = np.linalg.norm(cross)
    dot = float(np.dot(A, B))
    # theta is the exterior angle: angle between (v - a) and (b - v)
    theta = np.arctan2(nc, -dot)
    if nc <= 0.0:
        raise ValueError("gradient undefined at colinear or cusped vertex")
    n = cross / nc
    cos_th = np.cos(theta)
    K = nb / (2.0 * cos_th - 2.0)
    V = B / (2.0 * np.tan(0.5 * theta) * nb)
    W = K * np.cross(A, n) / (na * na)
    X = K * np.cross(n, B) / (nb * nb)
    return W, -W - X - V, X + V


def grad_minrad(poly: Polygon, i: int, sign: str):
    """Sparse gradient of MinRad+/- at vertex i.

    sign "+" differentiates MinRad+ (outgoing-edge form); "-" differentiates
    MinRad-, computed by reversing orientation. Returns (indices, vectors)
    over (prev, i, next). Only defined where MinRad is finite and the vertex
    is not a cusp.
    """
    v = poly.verts
    ip, inx = int(poly.prv[i]), int(poly.nxt[i])
    if sign == "+":
        W, M, X = _grad_minrad_triple(v[ip], v[i], v[inx])
        indices = np.array([ip, i, inx], dtype=np.intp)
    elif sign == "-":
        W, M, X = _grad_minrad_triple(v[inx], v[i], v[ip])
        indices = np.array([inx, i, ip], dtype=np.intp)
    else:
        raise ValueError("sign must be '+' or '-'")
    return indices, np.stack([W, M, X])


# -- edge-length equalization penalty ----------------------------------------


def _per_component_mean(poly: Polygon, el: np.ndarray) -> np.ndarray:
    sums = np.add.reduceat(el, poly.offsets[:-1])
    return (sums / poly.component_sizes())[poly.comp_of]


def eq_penalty(poly: Polygon, stiffness: float = 1.0) -> float:
    """Penalty sum (|e| - mean)^2 / mean, mean per component, times stiffness.

    Zero exactly on per-component equilateral polygons; its weight relative
    to total length is scale-invariant.
    """
    el = poly.edge_lengths()
    m = _per_component_mean(poly, el)
    return float(stiffness * np.sum((el - m) ** 2 / m))


def grad_eq_penalty(poly: Polygon, stiffness: float = 1.0) -> np.ndarray:
    """Calculus gradient of eq_penalty, including the mean's dependence on V."""
    el = poly.edge_lengths()
    m = _per_component_mean(poly, el)
    dev = el - m
    raw = dev * dev / m
    comp_raw = np.add.reduceat(raw, poly.offsets[:-1])
    n_c = poly.component_sizes()
    # d penalty / d edge-length, with the per-component mean varying too
    g = 2.0 * dev / m - (comp_raw / n_c)[poly.comp_of] / m
    u = _unit(poly.verts[poly.nxt] - poly.verts)
    gu = g[:, None] * u
    return stiffness * (gu[poly.prv] - gu)
