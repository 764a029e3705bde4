import numpy as np
import pytest

from tightknot.geometry import (
    Polygon,
    eq_penalty,
    grad_chord,
    grad_eq_penalty,
    grad_length,
    grad_minrad,
    minrad_pm,
    minrads,
    polygon_length,
    scatter_sparse_gradient,
    turning_angle,
    turning_angles,
)
from conftest import fd_gradient, random_polygon


def square(edge=2.0):
    return Polygon([np.array([[0, 0, 0], [edge, 0, 0], [edge, edge, 0], [0, edge, 0]], float)])


def regular_ngon(n, edge):
    circum = edge / (2.0 * np.sin(np.pi / n))
    t = 2.0 * np.pi * np.arange(n) / n
    return Polygon([np.stack([circum * np.cos(t), circum * np.sin(t), np.zeros(n)], axis=1)])


# -- construction --------------------------------------------------------------


def test_polygon_indexing_wraps_per_component():
    p = Polygon([np.eye(3), np.eye(3) * 2 + 5])
    assert p.num_vertices == 6
    assert p.nxt[2] == 0 and p.prv[0] == 2
    assert p.nxt[5] == 3 and p.prv[3] == 5
    assert list(p.comp_of) == [0, 0, 0, 1, 1, 1]


def test_polygon_rejects_degenerate_input():
    with pytest.raises(ValueError):
        Polygon([np.array([[0, 0, 0], [1, 0, 0], [1, 0, 0], [0, 1, 0]], float)])
    with pytest.raises(ValueError):
        Polygon([np.zeros((2, 3))])
    with pytest.raises(ValueError):
        Polygon([])


# -- angles, radii, length ------------------------------------------------------


def test_turning_angle_square_and_colinear():
    sq = square()
    assert np.allclose(turning_angles(sq), np.pi / 2)
    flat = Polygon([np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [1, 1, 0]], float)])
    assert turning_angle(flat, 1) == 0.0


def test_turning_angle_scale_invariant(rng):
    p = random_polygon(rng)
    assert np.allclose(turning_angles(p), turning_angles(p.scaled(17.0)), atol=1e-12)


def test_minrad_regular_polygons():
    # hexagon edge 1: theta = pi/3, MinRad = 1/(2 tan(pi/6)) = sqrt(3)/2
    hexa = regular_ngon(6, 1.0)
    m_minus, m_plus = minrad_pm(hexa, 2)
    assert m_minus == pytest.approx(np.sqrt(3) / 2, rel=1e-12)
    assert m_plus == pytest.approx(np.sqrt(3) / 2, rel=1e-12)
    # 12-gon edge 0.2: 0.1 / tan(pi/12)
    twelve = regular_ngon(12, 0.2)
    expected = 0.1 / np.tan(np.pi / 12)
    assert expected == pytest.approx(0.37320508, abs=5e-9)
    assert minrad_pm(twelve, 0)[1] == pytest.approx(expected, rel=1e-12)


def test_minrad_infinite_at_colinear_vertex():
    flat = Polygon([np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [1, 1, 0]], float)])
    assert minrads(flat)[1, 0] == np.inf
    assert minrads(flat)[1, 1] == np.inf


def test_minrad_scales_linearly(rng):
    p = random_polygon(rng)
    assert np.allclose(minrads(p.scaled(3.5)), 3.5 * minrads(p), rtol=1e-12)


def test_length_two_unit_squares():
    p = Polygon([square(1.0).verts, square(1.0).verts + np.array([0, 0, 5.0])])
    assert polygon_length(p) == pytest.approx(8.0, abs=1e-14)


# -- gradient of length ----------------------------------------------------------


def test_grad_length_right_angle_bisects():
    sq = square()
    g = grad_length(sq)[0]
    assert np.linalg.norm(g) == pytest.approx(np.sqrt(2), rel=1e-12)
    # bisector of the corner at the origin points along (1, 1, 0)
    assert np.allclose(g / np.linalg.norm(g), np.array([1, 1, 0]) / np.sqrt(2))


def test_grad_length_zero_at_colinear_vertex():
    flat = Polygon([np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [1, 1, 0]], float)])
    assert np.allclose(grad_length(flat)[1], 0.0, atol=1e-15)


def test_grad_length_matches_finite_differences(rng):
    p = random_polygon(rng, n=20)
    fd = fd_gradient(lambda v: polygon_length(p.with_verts(v)), p.verts)
    # returned field is the descent direction: negative of the calculus gradient
    assert np.max(np.abs(fd + grad_length(p))) < 1e-6


def test_grad_length_translation_invariance_and_rotation_equivariance(rng):
    p = random_polygon(rng, n=17)
    g = grad_length(p)
    assert np.allclose(g.sum(axis=0), 0.0, atol=1e-12)
    # random rotation via QR
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    assert np.allclose(grad_length(p.with_verts(p.verts @ q.T)), g @ q.T, atol=1e-12)


# -- gradient of half chord length ------------------------------------------------


def test_grad_chord_vertex_vertex_pair():
    p = Polygon([np.array([[0, 0, 0], [2, 0, 0], [2, 2, 0], [0, 2, 0],
                           [0, 0, 1], [2, 0, 1], [2, 2, 1], [0, 2, 1]], float).reshape(8, 3)[:4],
                 np.array([[1, 0, 0], [3, 0, 0], [3, 2, 0], [1, 2, 0]], float) + np.array([0, 0, 1.0])])
    # p at vertex 0 (alpha=1 on edge 0), q at vertex 4 = first vertex of comp 2
    idx, vec = grad_chord(p, 0, 1.0, 4, 1.0)
    dense = scatter_sparse_gradient(idx, vec, p.num_vertices)
    pq = p.verts[0] - p.verts[4]
    d = np.linalg.norm(pq)
    assert np.allclose(dense[0], pq / (2 * d), atol=1e-14)
    assert np.allclose(dense[4], -pq / (2 * d), atol=1e-14)
    assert np.allclose(dense.sum(axis=0), 0.0, atol=1e-14)


def test_grad_chord_matches_finite_differences(rng):
    p = random_polygon(rng, n=14)
    cases = [(0, 0.31, 7, 0.83), (2, 1.0, 9, 0.5), (3, 0.0, 8, 1.0), (5, 0.2, 6, 0.9)]
    for pe, pa, qe, qa in cases:
        idx, vec = grad_chord(p, pe, pa, qe, qa)
        dense = scatter_sparse_gradient(idx, vec, p.num_vertices)

        def half_dist(v):
            pl = p.with_verts(v)
            a = pa * v[pe] + (1 - pa) * v[pl.nxt[pe]]
            b = qa * v[qe] + (1 - qa) * v[pl.nxt[qe]]
            return 0.5 * np.linalg.norm(a - b)

        fd = fd_gradient(half_dist, p.verts)
        assert np.max(np.abs(fd - dense)) < 1e-6


# -- gradient of minrad -----------------------------------------------------------


def test_grad_minrad_matches_finite_differences(rng):
    p = random_polygon(rng, n=16)
    for i in (0, 3, 9, 15):
        for sign in ("+", "-"):
            idx, vec = grad_minrad(p, i, sign)
            dense = scatter_sparse_gradient(idx, vec, p.num_vertices)
            col = 1 if sign == "+" else 0

            def mr(v):
                return minrads(p.with_verts(v))[i, col]

            fd = fd_gradient(mr, p.verts)
            scale = max(1.0, np.max(np.abs(fd)))
            assert np.max(np.abs(fd - dense)) / scale < 1e-5


def test_grad_minrad_translation_invariant(rng):
    p = random_polygon(rng, n=12)
    for sign in ("+", "-"):
        _, vec = grad_minrad(p, 4, sign)
        assert np.allclose(vec.sum(axis=0), 0.0, atol=1e-12)


def test_grad_minrad_rejects_colinear():
    flat = Polygon([np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [1, 1, 0]], float)])
    with pytest.raises(ValueError):
        grad_minrad(flat, 1, "+")


def test_grad_minrad_norm_bound_at_unit_minrad_corners(rng):
    # equilateral corner with MinRad = 1 forces l = 2 tan(theta/2); the full
    # gradient norm must be at least 2 / l^2
    for _ in range(50):
        theta = rng.uniform(0.05, np.pi - 0.05)
        ell = 2.0 * np.tan(theta / 2.0)
        pts = _equilateral_corner(rng, theta, ell)
        p = Polygon([pts])
        for sign in ("+", "-"):
            _, vec = grad_minrad(p, 1, sign)
            assert np.linalg.norm(vec) >= 2.0 / ell**2 * (1 - 1e-12)


def _equilateral_corner(rng, theta, ell):
    """Closed loop whose vertex 1 is an equilateral corner of turning angle theta."""
    a = np.array([-ell, 0.0, 0.0])
    v = np.zeros(3)
    b = ell * np.array([np.cos(theta), np.sin(theta), 0.0])
    far = np.array([b[0] - ell * np.sin(theta), b[1] + ell, 7.0])
    pts = np.stack([a, v, b, far])
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    shift = rng.uniform(-3, 3, size=3)
    return pts @ q.T + shift


# -- edge-length equalization ------------------------------------------------------


def test_eq_penalty_zero_iff_equilateral():
    sq = square(1.0)
    assert eq_penalty(sq) == 0.0
    assert np.allclose(grad_eq_penalty(sq), 0.0, atol=1e-15)
    stretched = Polygon([np.array([[0, 0, 0], [3, 0, 0], [3, 1, 0], [0, 1, 0]], float)])
    assert eq_penalty(stretched) > 0.0


def test_eq_penalty_gradient_matches_finite_differences(rng):
    p = random_polygon(rng, n=13, components=2)
    fd = fd_gradient(lambda v: eq_penalty(p.with_verts(v), stiffness=1.7), p.verts)
    g = grad_eq_penalty(p, stiffness=1.7)
    assert np.max(np.abs(fd - g)) < 1e-6


def test_eq_penalty_relative_weight_scale_invariant(rng):
    p = random_polygon(rng)
    r1 = eq_penalty(p) / polygon_length(p)
    s = p.scaled(11.0)
    assert eq_penalty(s) / polygon_length(s) == pytest.approx(r1, rel=1e-12)
