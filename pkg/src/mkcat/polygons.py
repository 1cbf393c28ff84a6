"""Polygon fixtures in the Klein disk: notches, spirals, combs and random pocketed shapes."""
from __future__ import annotations

import math

import numpy as np
from shapely.geometry import LineString, Polygon, box
from shapely.geometry.polygon import orient

from .crescent2d import HPolygon


def _from_shape(shape: Polygon, scale: float = 0.6) -> HPolygon:
    shape = orient(shape.simplify(0.0), 1.0)
    pts = np.array(shape.exterior.coords)[:-1]
    # start at the lowest-left vertex so generated files are stable
    i = min(range(len(pts)), key=lambda j: (pts[j, 1], pts[j, 0]))
    return HPolygon(np.roll(pts, -i, axis=0) * scale)


def square(half: float = 0.5) -> HPolygon:
    h = half
    return HPolygon(np.array([[-h, -h], [h, -h], [h, h], [-h, h]]))


def notched_square(depth: float = 0.4, half: float = 0.5) -> HPolygon:
    """Square whose top edge has one vertex pushed inward by ``depth``."""
    h = half
    return HPolygon(np.array([[-h, -h], [h, -h], [h, h], [0.0, h - depth], [-h, h]]))


def spiral_polygon(turns: int = 1, width: float = 0.12) -> HPolygon:
    """Square with a rectilinear channel cut in from the right edge, winding inward.

    Each quarter turn of the channel beyond the first adds a boundary passage
    inside the outer pocket; ``turns`` counts the passages.
    """
    step = 2.2 * width
    r = 1.0 - step
    path = [(1.2, r - step), (-r, r - step)]
    k = 0
    # rectangular spiral: down, right, up, left ... shrinking by one step each side
    dirs = [(0, -1), (1, 0), (0, 1), (-1, 0)]
    x, y = path[-1]
    span = 2 * r - 2 * step
    for _ in range(2 + 2 * (turns - 1) + 1):
        dx, dy = dirs[k % 4]
        x, y = x + dx * span, y + dy * span
        path.append((x, y))
        k += 1
        if k % 2 == 0:
            span -= step
    channel = LineString(path).buffer(width / 2, cap_style=2, join_style=2)
    shape = box(-1.0, -1.0, 1.0, 1.0).difference(channel)
    if shape.geom_type != "Polygon":
        shape = max(shape.geoms, key=lambda g: g.area)
    return _from_shape(shape)


def comb_polygon(teeth: int = 3, depth: float = 0.5) -> HPolygon:
    """Bowl-shaped bottom with vertical teeth; tooth tips sit on a concave curve."""
    pts = [(-1.0, -1.0), (1.0, -1.0)]
    xs = np.linspace(1.0, -1.0, 2 * teeth + 1)
    for i, x in enumerate(xs):
        tip = 1.0 - depth * (1.0 - x * x)
        pts.append((x, tip if i % 2 == 0 else tip - depth))
    return HPolygon(np.array(pts) * 0.6)


def random_pocketed(rng: np.random.Generator, n: int = 12, inner: float = 0.25, outer: float = 0.85) -> HPolygon:
    """Star-shaped polygon with random radii, so pockets appear at random places."""
    if n < 4:
        raise ValueError("need at least 4 vertices")
    # one vertex per equal sector keeps every angular gap below pi, so the star is simple
    t = (np.arange(n) + rng.uniform(0.1, 0.9, n)) * (2.0 * math.pi / n)
    r = rng.uniform(inner, outer, n)
    return HPolygon(np.c_[r * np.cos(t), r * np.sin(t)])


def hooked_polygon(side_channel: bool = True, width: float = 0.2) -> HPolygon:
    """Square with an L-shaped channel from the top edge and, optionally, a
    straight channel from the right edge whose tip lies in the hull of the
    first channel's boundary."""
    hook = LineString([(-0.8, 1.2), (-0.8, -0.7), (0.8, -0.7)]).buffer(width / 2, cap_style=2, join_style=2)
    shape = box(-1.0, -1.0, 1.0, 1.0).difference(hook)
    if side_channel:
        shape = shape.difference(LineString([(1.2, 0.3), (-0.3, 0.3)]).buffer(width / 2, cap_style=2, join_style=2))
    return _from_shape(shape)
