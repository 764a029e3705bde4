"""Start configurations for the shipped knot and link types.

These are deliberately loose and coarse.  The run driver rescales to unit
thickness immediately and refines along its schedule, so only the topology
and the rough proportions of the components matter here.
"""

import numpy as np

from .geometry import Polygon

__all__ = [
    "round_unknot",
    "hopf_start",
    "chain_start",
    "trefoil_start",
    "borromean_start",
]

_EX = np.array([1.0, 0.0, 0.0])
_EY = np.array([0.0, 1.0, 0.0])
_EZ = np.array([0.0, 0.0, 1.0])


def _ring(n, radius, center, plane):
    u, v = plane
    t = 2.0 * np.pi * np.arange(n) / n
    return np.asarray(center, dtype=float) + \
        radius * (np.outer(np.cos(t), u) + np.outer(np.sin(t), v))


def round_unknot(n: int = 64, radius: float = 1.0) -> Polygon:
    """Regular n-gon in the xy plane."""
    return Polygon([_ring(n, radius, np.zeros(3), (_EX, _EY))])


def hopf_start(n: int = 25, radius: float = 2.5) -> Polygon:
    """Two equal rings at right angles, each through the other's center."""
    a = _ring(n, radius, np.zeros(3), (_EX, _EY))
    b = _ring(n, radius, radius * _EX, (_EX, _EZ))
    return Polygon([a, b])


def chain_start(n: int = 25, radius: float = 2.5) -> Polygon:
    """Three rings in a row with alternating planes; ends unlinked.

    The middle ring carries proportionally more vertices because it
    tightens into the longer stadium-shaped component.
    """
    mid = int(round(n * (4.0 * np.pi + 4.0) / (4.0 * np.pi)))
    gap = 1.6 * radius  # close enough to link, far enough to keep the ends apart
    a = _ring(n, radius, np.zeros(3), (_EX, _EY))
    b = _ring(mid, radius, gap * _EX, (_EX, _EZ))
    c = _ring(n, radius, 2.0 * gap * _EX, (_EX, _EY))
    return Polygon([a, b, c])


def trefoil_start(n: int = 66, radius: float = 2.0) -> Polygon:
    """Torus-knot trefoil winding twice around and three times through."""
    t = 2.0 * np.pi * np.arange(n) / n
    r = radius + np.cos(3.0 * t)
    pts = np.stack([r * np.cos(2.0 * t), r * np.sin(2.0 * t), np.sin(3.0 * t)],
                   axis=1)
    return Polygon([pts])


def borromean_start(n: int = 64, radius: float = 2.0) -> Polygon:
    """Three coordinate-plane ellipses, pairwise unlinked, jointly locked."""
    t = 2.0 * np.pi * np.arange(n) / n
    a, b = radius, 0.5 * radius
    one = np.stack([a * np.cos(t), b * np.sin(t), np.zeros(n)], axis=1)
    two = np.stack([np.zeros(n), a * np.cos(t), b * np.sin(t)], axis=1)
    three = np.stack([b * np.sin(t), np.zeros(n), a * np.cos(t)], axis=1)
    return Polygon([one, two, three])
