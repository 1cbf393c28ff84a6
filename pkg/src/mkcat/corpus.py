"""Generators for the fixture corpus: cones, flat grids, tori, random disks and surfaces."""
from __future__ import annotations

import itertools
import math

import numpy as np

from .complexcore import Gluing, MetricSimplex, build_complex, complex_from_mesh, vertex_link
from .hypgeom import third_side


def _fp(a, b):
    return frozenset((str(a), str(b)))


def cone(k: int, side: float = 1.0, kappa: int = -1, apex_angle: float | None = None,
         spokes=None, closed: bool = True):
    """k triangles around a center vertex ``c`` with rim vertices ``r0..r{k-1}``.

    By default the triangles are equilateral with the given side.  ``apex_angle``
    prescribes the total angle at the center instead (isosceles triangles), and
    ``spokes`` sets individual center-to-rim lengths.
    """
    if k < 3 and closed:
        raise ValueError("a closed cone needs at least 3 triangles")
    spokes = [side] * k if spokes is None else [float(x) for x in spokes]
    n_tri = k if closed else k - 1
    tris, lengths = [], {}
    for i in range(k):
        lengths[_fp("c", f"r{i}")] = spokes[i]
    for i in range(n_tri):
        j = (i + 1) % k
        if apex_angle is None and spokes[i] == side and spokes[j] == side:
            rim = side
        else:
            ang = apex_angle / n_tri if apex_angle is not None else None
            if ang is None:
                ang = _equilateral_angle(kappa, side)
            rim = third_side(kappa, spokes[i], spokes[j], ang)
        lengths[_fp(f"r{i}", f"r{j}")] = rim
        tris.append(("c", f"r{i}", f"r{j}"))
    return complex_from_mesh(kappa, tris, lengths)


def _equilateral_angle(kappa, s):
    from .hypgeom import angles_allow_degenerate
    return angles_allow_degenerate(kappa, s, s, s)[0]


def square_grid(nx: int, ny: int, size: float = 1.0, periodic_x: bool = False, periodic_y: bool = False):
    """Flat grid of nx-by-ny squares, each split along a diagonal; optionally periodic."""
    def name(i, j):
        return f"v{i % nx if periodic_x else i}_{j % ny if periodic_y else j}"

    tris, lengths = [], {}
    diag = size * math.sqrt(2.0)
    for i in range(nx):
        for j in range(ny):
            a, b, c, d = name(i, j), name(i + 1, j), name(i + 1, j + 1), name(i, j + 1)
            tris += [(a, b, c), (a, c, d)]
            for u, w, l in ((a, b, size), (b, c, size), (c, d, size), (d, a, size), (a, c, diag)):
                lengths[_fp(u, w)] = l
    return complex_from_mesh(0, tris, lengths)


def flat_cylinder(columns: int = 4, rows: int = 2, size: float = 1.0):
    """Flat annulus with circumference columns*size and height rows*size."""
    if columns < 3:
        raise ValueError("a cylinder needs at least 3 columns")
    return square_grid(columns, rows, size, periodic_x=True)


def flat_torus7(side: float = 1.0):
    """The 7-vertex torus with equilateral flat triangles (every vertex has 6 corners)."""
    tris = []
    for i in range(7):
        tris.append((f"v{i}", f"v{(i + 1) % 7}", f"v{(i + 3) % 7}"))
        tris.append((f"v{i}", f"v{(i + 2) % 7}", f"v{(i + 3) % 7}"))
    lengths = {_fp(f"v{a}", f"v{b}"): side for a, b in itertools.combinations(range(7), 2)}
    return complex_from_mesh(0, tris, lengths)


def tetrahedron_boundary(side: float = 1.0, kappa: int = 1):
    tris = [("a", "b", "c"), ("a", "b", "d"), ("a", "c", "d"), ("b", "c", "d")]
    lengths = {_fp(u, w): side for u, w in itertools.combinations("abcd", 2)}
    return complex_from_mesh(kappa, tris, lengths)


def single_triangle(a: float = 1.0, b: float = 1.0, c: float = 1.0, kappa: int = -1):
    """One triangle with labels A, B, C; side a is opposite A."""
    s = MetricSimplex("t0", 2, ("A", "B", "C"), {("B", "C"): a, ("A", "C"): b, ("A", "B"): c})
    return build_complex(kappa, [s], [])


def doubled_triangle(a: float = 1.0, b: float = 1.0, c: float = 1.0, kappa: int = -1):
    """Two copies of a triangle glued along all three edges (a sphere with three cone points)."""
    el = {("B", "C"): a, ("A", "C"): b, ("A", "B"): c}
    s0 = MetricSimplex("t0", 2, ("A", "B", "C"), el)
    s1 = MetricSimplex("t1", 2, ("A", "B", "C"), el)
    glu = [Gluing(("t0", i), ("t1", i), {x: x for x in s0.face(i)}) for i in range(3)]
    return build_complex(kappa, [s0, s1], glu)


def tripod(lengths=(1.0, 1.0, 1.0), kappa: int = 0):
    """Metric tree with three legs meeting at a center."""
    simp = [MetricSimplex(f"e{i}", 1, ("o", f"x{i}"), {("o", f"x{i}"): l}) for i, l in enumerate(lengths)]
    # a 1-simplex face opposite label x_i is the vertex o, i.e. face index 1
    glu = [Gluing(("e0", 1), (f"e{i}", 1), {"o": "o"}) for i in range(1, len(lengths))]
    return build_complex(kappa, simp, glu)


def heptagonal_disk(rng, rings: int = 2, degree: int = 7, lo: float = 0.55, hi: float = 0.95, kappa: int = -1):
    """Random hyperbolic disk grown in rings so that interior vertices have the given degree.

    Edge lengths are drawn uniformly from [lo, hi]; small edges keep the angle sums of
    degree-7 vertices above 2*pi.
    """
    tris = []
    ring = [f"a{i}" for i in range(degree)]
    deg = {v: 3 for v in ring}
    for i in range(degree):
        tris.append(("o", ring[i], ring[(i + 1) % degree]))
    counter = itertools.count()
    for _ in range(rings - 1):
        n = len(ring)
        shared = [f"n{next(counter)}" for _ in range(n)]  # shared[i] sits on edge (ring[i], ring[i+1])
        new_ring = []
        for i, v in enumerate(ring):
            left = shared[i - 1]
            right = shared[i]
            extras = [f"n{next(counter)}" for _ in range(max(degree - deg[v] - 2, 0))]
            fan = [left] + extras + [right]
            for x, y in zip(fan[:-1], fan[1:]):
                tris.append((v, x, y))
            tris.append((v, ring[(i + 1) % n], right))
            new_ring += extras + [right]
        deg = {v: 3 for v in new_ring}
        deg.update({v: 4 for v in shared})
        ring = new_ring
    edges = set()
    for t in tris:
        for u, w in itertools.combinations(t, 2):
            edges.add(_fp(u, w))
    for _ in range(200):
        lengths = {e: float(rng.uniform(lo, hi)) for e in sorted(edges, key=sorted)}
        if all(_strict_triangle(lengths, t) for t in tris):
            return complex_from_mesh(kappa, tris, lengths)
    raise RuntimeError("could not draw valid edge lengths")


def _strict_triangle(lengths, t):
    a, b, c = (lengths[_fp(*p)] for p in itertools.combinations(t, 2))
    return a < b + c and b < a + c and c < a + b


def random_closed_surface(rng, kind: str = "octahedron", lo: float = 0.8, hi: float = 1.5, kappa: int = -1):
    """Random hyperbolic metric on a fixed triangulated surface."""
    if kind == "octahedron":
        tris = [("n", a, b) for a, b in (("e0", "e1"), ("e1", "e2"), ("e2", "e3"), ("e3", "e0"))]
        tris += [("s", b, a) for a, b in (("e0", "e1"), ("e1", "e2"), ("e2", "e3"), ("e3", "e0"))]
    elif kind == "torus":
        tris = []
        for i in range(7):
            tris.append((f"v{i}", f"v{(i + 1) % 7}", f"v{(i + 3) % 7}"))
            tris.append((f"v{i}", f"v{(i + 2) % 7}", f"v{(i + 3) % 7}"))
    elif kind == "disk":
        k = int(rng.integers(4, 9))
        tris = [("c", f"r{i}", f"r{(i + 1) % k}") for i in range(k)]
    elif kind == "strip":
        k = int(rng.integers(2, 6))
        tris = []
        for i in range(k):
            tris += [(f"a{i}", f"a{i + 1}", f"b{i}"), (f"a{i + 1}", f"b{i + 1}", f"b{i}")]
    elif kind == "annulus":
        k = int(rng.integers(3, 7))
        tris = []
        for i in range(k):
            j = (i + 1) % k
            tris += [(f"a{i}", f"a{j}", f"b{i}"), (f"a{j}", f"b{j}", f"b{i}")]
    else:
        raise ValueError(f"unknown surface kind {kind!r}")
    edges = sorted({_fp(u, w) for t in tris for u, w in itertools.combinations(t, 2)}, key=sorted)
    lengths = {e: float(rng.uniform(lo, hi)) for e in edges}
    return complex_from_mesh(kappa, tris, lengths)


def link_ok(complex) -> bool:
    from .catcheck import link_condition
    return link_condition(complex) is None
