"""Geodesically ruled strips (alpha-nets) and h-maps assembled from them.

A net between arcs alpha and beta consists of rails, the geodesics from
alpha(t_i) to beta(t_i), each seeded from its neighbour so that consecutive
rails are homotopic.  Net vertices sit on rails (ends, bends, and evenly
spaced points between bends).  Each strip between two rails is triangulated by
a zig-zag whose diagonals are straightened geodesics.  Every triangle is then realized in the
model plane from its three side lengths.  Points that coincide in the target
(for instance several rails through one cone point) become a single vertex.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..complexcore import MkComplex, complex_from_mesh
from .paths import ComplexPath, GeodesyError, PathPoint, support_face, transfer
from .straighten import hausdorff, shortest_geodesic, straighten_path
from .surfaces import HMapSurface, SingularSurface

MAX_RAILS = 1024
GAP_TARGET = 1e-3


def point_key(complex: MkComplex, p: PathPoint):
    """Canonical hashable key of a point of the complex (independent of the simplex used)."""
    kind, cid = support_face(complex, p)
    s = complex.simplex(p.sid)
    if kind == "vertex":
        return ("v", cid)
    if kind == "edge":
        a, b = complex.edge_endpoints(cid)
        w = {complex.vertex_of(s.id, s.vertex_labels[i]): p.bary[i] for i in p.support()}
        if a == b:
            return ("e", cid, p.sid, tuple(round(x, 10) for x in p.bary))
        return ("e", cid, round(w[b] / (w[a] + w[b]), 10))
    return ("f", complex.triangle_of(s.id, frozenset(s.vertex_labels)), tuple(round(x, 10) for x in p.bary))


def _as_path(complex, x) -> ComplexPath:
    if isinstance(x, ComplexPath):
        return x
    if isinstance(x, PathPoint):
        return ComplexPath(complex, (x,))
    raise TypeError("expected a ComplexPath or PathPoint")


def _breaks(path: ComplexPath):
    """Arclength fractions of the path's bends (virtual waypoints)."""
    L = path.length
    if L == 0.0:
        return []
    out, acc = [], 0.0
    lens = path.piece_lengths()
    pieces = path.pieces()
    # accumulate arclength at every waypoint
    pos = [0.0]
    it = iter(lens)
    for a, b in zip(path.waypoints[:-1], path.waypoints[1:]):
        pos.append(pos[-1] + (next(it) if a.sid == b.sid else 0.0))
    del pieces, acc
    for w, v, s in zip(path.waypoints, path.virtual, pos):
        if v and 0.0 < s < L:
            out.append(s / L)
    return out


def _join(complex, parts) -> ComplexPath:
    wps = []
    for pc in parts:
        for w in pc.waypoints:
            if wps and wps[-1] == w:
                continue
            if wps and wps[-1].sid != w.sid:
                t = transfer(complex, wps[-1], w.sid)
                if t is not None and t != w:
                    wps.append(t)
            wps.append(w)
    return ComplexPath(complex, tuple(wps))


def _rail_vertices(rail: ComplexPath, spacing: float):
    """(arclength, point) of the net vertices on a rail.

    Every straight piece between bends is cut into equal parts no longer than
    ``spacing``, so rails sharing a piece (say up to a cone point) get identical
    vertices there.
    """
    L = rail.length
    cuts = [0.0] + [f * L for f in _breaks(rail)] + [L]
    out = [(0.0, rail.start)]
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b - a <= 0.0:
            continue
        k = max(1, math.ceil((b - a) / spacing - 1e-9)) if spacing > 0.0 else 1
        for i in range(1, k + 1):
            s = b if i == k else a + (b - a) * i / k
            out.append((s, rail.end if s == L else rail.point_at(s)))
    return out


@dataclass
class AlphaNet:
    complex: MkComplex = field(repr=False)
    alpha: ComplexPath = field(repr=False)
    beta: ComplexPath = field(repr=False)
    params: list
    rails: list = field(repr=False)
    points: dict = field(repr=False)  # vertex name -> PathPoint
    triangles: list = field(repr=False)  # vertex-name triples
    lengths: dict = field(repr=False)  # frozenset pair -> length
    surface: HMapSurface = field(repr=False)

    @property
    def n_rails(self) -> int:
        return len(self.rails)

    def angle_sums(self) -> dict:
        s = self.surface.surface
        return {v: s.angle_sum(v) for v in s.complex.vertices()}

    def interior_vertices(self) -> list:
        return self.surface.surface.interior_vertices()

    def max_rail_gap(self) -> float:
        return max((hausdorff(a, b, samples=20) for a, b in zip(self.rails[:-1], self.rails[1:])), default=0.0)


class _Mesh:
    """Accumulates realized triangles keyed by canonical point keys."""

    def __init__(self, complex):
        self.c = complex
        self.names = {}
        self.points = {}
        self.tris = []
        self.lengths = {}
        self.seen = set()

    def name(self, p: PathPoint) -> str:
        k = point_key(self.c, p)
        if k not in self.names:
            n = f"n{len(self.names)}"
            self.names[k] = n
            self.points[n] = p
        return self.names[k]

    def edge(self, a, b, length):
        if a != b:
            self.lengths.setdefault(frozenset((a, b)), float(length))

    def tri(self, a, b, c):
        if len({a, b, c}) < 3:
            return
        key = frozenset((a, b, c))
        if key in self.seen:
            return
        self.seen.add(key)
        self.tris.append((a, b, c))

    def build(self, distinguished):
        if not self.tris:
            raise GeodesyError("net has no non-degenerate triangles")
        comp = complex_from_mesh(self.c.kappa, self.tris, self.lengths, allow_degenerate=True)
        return HMapSurface(SingularSurface(comp), tuple(sorted(set(distinguished))))


def _sub(path: ComplexPath, s0, s1) -> ComplexPath:
    if s1 >= s0:
        return path.subpath(s0, s1)
    return path.subpath(s1, s0).reversed()


def _strip(mesh: _Mesh, A, B, railA, railB, first: ComplexPath):
    """Zig-zag triangulation between the vertex lists of two rails.

    ``first`` is the geodesic from A[0] to B[0] along the net's alpha side.
    """
    c = mesh.c
    na = [mesh.name(p) for _, p in A]
    nb = [mesh.name(p) for _, p in B]
    for (s0, _), (s1, _), u, w in zip(A[:-1], A[1:], na[:-1], na[1:]):
        mesh.edge(u, w, s1 - s0)
    for (s0, _), (s1, _), u, w in zip(B[:-1], B[1:], nb[:-1], nb[1:]):
        mesh.edge(u, w, s1 - s0)
    # sync points: vertices shared by both rails split the strip
    shared = []
    j0 = 0
    for i, x in enumerate(na):
        for j in range(j0, len(nb)):
            if nb[j] == x:
                shared.append((i, j))
                j0 = j + 1
                break
    p = q = 0
    diag = first
    mesh.edge(na[0], nb[0], first.length)
    targets = shared + [(len(na) - 1, len(nb) - 1)]
    for (pe, qe) in targets:
        while p < pe or q < qe:
            opts = []
            if p < pe:
                seed = _join(c, [_sub(railA, A[p + 1][0], A[p][0]), diag])
                g = straighten_path(seed) if len(seed.waypoints) > 1 else seed
                opts.append((g.length, "a", g))
            if q < qe:
                seed = _join(c, [diag, _sub(railB, B[q][0], B[q + 1][0])])
                g = straighten_path(seed) if len(seed.waypoints) > 1 else seed
                opts.append((g.length, "b", g))
            L, side, g = min(opts, key=lambda o: o[0])
            if side == "a":
                mesh.tri(na[p], na[p + 1], nb[q])
                p += 1
            else:
                mesh.tri(na[p], nb[q], nb[q + 1])
                q += 1
            mesh.edge(na[p], nb[q], L)
            diag = g
        if (pe, qe) != targets[-1]:
            diag = ComplexPath(c, (A[p][1],))


def _net_parts(complex, alpha: ComplexPath, beta: ComplexPath, n_rails: int, rail0: ComplexPath | None,
               mesh: _Mesh, max_iters: int = 200):
    La, Lb = alpha.length, beta.length
    params = set(np.linspace(0.0, 1.0, n_rails).tolist())
    params |= set(_breaks(alpha)) | set(_breaks(beta))
    params = sorted(params)
    a_pts = [alpha.start if t == 0.0 else alpha.end if t == 1.0 else alpha.point_at(t * La) for t in params]
    b_pts = [beta.start if t == 0.0 else beta.end if t == 1.0 else beta.point_at(t * Lb) for t in params]
    if rail0 is None:
        r = shortest_geodesic(complex, a_pts[0], b_pts[0])
    else:
        r = straighten_path(rail0, max_iters=max_iters)
    rails = [r]
    for i in range(1, len(params)):
        seed = _join(complex, [_sub(alpha, params[i] * La, params[i - 1] * La), rails[-1],
                               _sub(beta, params[i - 1] * Lb, params[i] * Lb)])
        rails.append(straighten_path(seed, max_iters=max_iters) if len(seed.waypoints) > 1 else seed)
    spacing = max(r.length for r in rails) / max(n_rails - 1, 1)
    verts = [_rail_vertices(r, spacing) for r in rails]
    for i in range(len(rails) - 1):
        first = _sub(alpha, params[i] * La, params[i + 1] * La)
        _strip(mesh, verts[i], verts[i + 1], rails[i], rails[i + 1], first)
    ends = [mesh.name(p) for p in a_pts + b_pts]
    return params, rails, ends


def build_alpha_net(complex: MkComplex, alpha, beta, n_rails: int = 5, rail0: ComplexPath | None = None,
                    refine: bool = False, max_iters: int = 200) -> AlphaNet:
    """Geodesically ruled net between alpha (an arc or a point) and beta.

    The vertices of alpha and beta are the distinguished vertices of the
    resulting h-map surface.  With ``refine`` the rail count doubles until
    adjacent rails are within 1e-3 of each other or 1024 rails are used.
    """
    alpha, beta = _as_path(complex, alpha), _as_path(complex, beta)
    n = max(int(n_rails), 2)
    while True:
        mesh = _Mesh(complex)
        params, rails, ends = _net_parts(complex, alpha, beta, n, rail0, mesh, max_iters)
        surf = mesh.build(ends)
        net = AlphaNet(complex, alpha, beta, params, rails, dict(mesh.points), list(mesh.tris),
                       dict(mesh.lengths), surf)
        if not refine or n >= MAX_RAILS or net.max_rail_gap() < GAP_TARGET:
            return net
        n = min(2 * n - 1, MAX_RAILS)


def realize_h_map(triangles, points: dict, target: MkComplex, edge_paths: dict | None = None,
                  distinguished=(), n_rails: int = 5) -> "HMapRealization":
    """Fill a triangulated surface whose edges map to geodesics by fans of alpha-nets.

    ``triangles`` are triples of domain vertex names, ``points`` maps names to
    points of the target, and ``edge_paths`` optionally fixes the image of an
    edge (u, v) as a path (its homotopy class); other edges use shortest geodesics.
    The returned surface carries the image point of each vertex in ``images``.
    """
    edge_paths = dict(edge_paths or {})
    cache = {}

    def edge(u, v):
        if (u, v) not in cache:
            if (u, v) in edge_paths:
                g = straighten_path(edge_paths[(u, v)])
            elif (v, u) in edge_paths:
                g = straighten_path(edge_paths[(v, u)]).reversed()
            else:
                g = shortest_geodesic(target, points[u], points[v])
            cache[(u, v)] = g
            cache[(v, u)] = g.reversed()
        return cache[(u, v)]

    mesh = _Mesh(target)
    for a, b, c in triangles:
        _net_parts(target, ComplexPath(target, (points[a],)), edge(b, c), n_rails, edge(a, b), mesh)
    dist = [mesh.name(points[v]) for v in distinguished]
    surf = mesh.build(dist)
    images = {v: mesh.name(points[v]) for v in points}
    return HMapRealization(surf, images, dict(mesh.points))


@dataclass(frozen=True)
class HMapRealization:
    """An h-map surface with the net vertex of each domain vertex and the image of every net vertex."""
    hmap: HMapSurface
    vertex_names: dict
    images: dict
