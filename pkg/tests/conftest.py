"""Shared test helpers: independent oracles and random-shape generators.

The oracles here deliberately avoid the library's own code paths: finite
differences for gradients, dense numpy algebra for solver checks.
"""

import numpy as np
import pytest

from tightknot.geometry import Polygon


def fd_gradient(f, verts, h=1e-6):
    """Central-difference gradient of a scalar function of a (V, 3) array."""
    verts = np.asarray(verts, dtype=float)
    g = np.zeros_like(verts)
    for i in range(verts.shape[0]):
        for k in range(3):
            vp = verts.copy()
            vm = verts.copy()
            vp[i, k] += h
            vm[i, k] -= h
            g[i, k] = (f(vp) - f(vm)) / (2.0 * h)
    return g


def random_polygon(rng, n=20, components=1, spread=1.0):
    """Random closed polygon(s); loops are random walks closed by construction."""
    comps = []
    for c in range(components):
        t = np.sort(rng.uniform(0, 2 * np.pi, size=n))
        r = 1.0 + 0.3 * rng.standard_normal(n)
        pts = np.stack([r * np.cos(t), r * np.sin(t), 0.3 * rng.standard_normal(n)], axis=1)
        pts *= spread
        pts += rng.uniform(-2, 2, size=3) * c * 2.0
        comps.append(pts)
    return Polygon(comps)


def random_equilateral_polygon(rng, n=40, scale=1.0):
    """Closed equilateral loop: alternate closing and edge renormalization."""
    d = rng.standard_normal((n, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    for _ in range(400):
        d -= d.mean(axis=0)
        norms = np.linalg.norm(d, axis=1, keepdims=True)
        if np.min(norms) < 1e-9:
            d += 0.1 * rng.standard_normal((n, 3))
            continue
        d /= norms
    assert np.linalg.norm(d.sum(axis=0)) < 1e-9
    verts = np.cumsum(d, axis=0) * scale
    return Polygon([verts])


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
