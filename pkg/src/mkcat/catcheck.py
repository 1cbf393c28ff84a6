"""Curvature checks: link condition, sampled CAT(k) comparison, convexity, slimness, quasi-geodesics.

Every failing check can produce a :class:`ViolationReport` whose witness is
plain data; :func:`recheck` re-runs the single-case evaluator on it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .complexcore import ComplexError, MkComplex, vertex_link
from .geodesy import ComplexPath, GeodesyError, PathPoint, same_point, straighten_path
from .geodesy.graphs import graph_distance, graph_distance_to_path
from .geodesy.straighten import geodesic_candidates
from .hypgeom import raw_comparison_triangle, raw_dist, raw_geodesic_point

LINK_TOL = 1e-9
NOISE = 1e-12
KINDS = ("LinkSystole", "CatComparison", "Convexity", "Slimness", "QuasiGeodesic")


class UnsupportedComplexError(ComplexError):
    pass


@dataclass(frozen=True)
class ViolationReport:
    kind: str
    witness: dict
    magnitude: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown violation kind {self.kind!r}")
        if not self.magnitude > 0.0:
            raise ValueError("violation magnitude must be positive")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "magnitude": self.magnitude, "witness": self.witness}


@dataclass(frozen=True)
class QuasiParams:
    lam: float = 1.0
    eps: float = 0.0

    def __post_init__(self):
        if not self.lam >= 1.0:
            raise ValueError("lambda must be at least 1")
        if not self.eps >= 0.0:
            raise ValueError("eps must be non-negative")


# ---------------------------------------------------------------- link condition

def _loop_corners(link, edge_ids):
    return [list(link.edges[i].corner) for i in edge_ids]


def shortest_link_loops(complex: MkComplex):
    """Shortest injective loop of every vertex link: {vertex: (length, edge ids)}; absent when acyclic."""
    if complex.dim > 2:
        raise UnsupportedComplexError("link condition checks are restricted to 2-complexes")
    if not complex.is_pure(2):
        raise UnsupportedComplexError("link condition needs a pure 2-complex")
    out = {}
    for v in complex.vertices():
        link = vertex_link(complex, v)
        best = None
        for i, e in enumerate(link.edges):
            if e.ends[0] == e.ends[1]:
                ids = [i]
            else:
                d, path = link.shortest_path(e.ends[1], e.ends[0], banned=i)
                if not path:
                    continue
                ids = [i] + path
            L = math.fsum(link.edges[j].length for j in ids)
            key = (L, sorted(ids))
            if best is None or key < best[0]:
                best = (key, ids)
        if best is not None:
            out[v] = (best[0][0], best[1], link)
    return out


def link_condition(complex: MkComplex):
    """None when every injective link loop has length >= 2*pi - 1e-9, else the shortest offending loop."""
    worst = None
    for v, (L, ids, link) in sorted(shortest_link_loops(complex).items()):
        if L < 2.0 * math.pi - LINK_TOL and (worst is None or L < worst[0]):
            worst = (L, v, ids, link)
    if worst is None:
        return None
    L, v, ids, link = worst
    witness = {"vertex": v, "corners": _loop_corners(link, ids), "length": L}
    return ViolationReport("LinkSystole", witness, 2.0 * math.pi - L)


def _link_magnitude(complex, witness):
    L = math.fsum(complex.corner_angle(sid, lab) if complex.simplex(sid).dim == 2
                  else complex.face_corner_angle(sid, tuple(labels), lab)
                  for sid, labels, lab in witness["corners"])
    return 2.0 * math.pi - L


# ---------------------------------------------------------------- distances

def point_distance(complex: MkComplex, p: PathPoint, q: PathPoint) -> float:
    """Distance between two points: metric-graph distance or shortest straightened corridor."""
    if complex.is_pure(1):
        return graph_distance(complex, p, q)
    return geodesic_candidates(complex, p, q).length


def _homotopic_distance(complex, pieces):
    """Length of the straightened concatenation of path pieces (exact in CAT(0) 2-complexes)."""
    wps, virt = [], []
    for pc in pieces:
        for w in pc.waypoints:
            if wps and wps[-1] == w:
                continue
            wps.append(w)
    if len(wps) == 1:
        return 0.0
    path = ComplexPath(complex, tuple(wps))
    return straighten_path(path).length


def _fraction_point(path: ComplexPath, s: float) -> PathPoint:
    return path.point_at(s * path.length)


# ---------------------------------------------------------------- CAT comparison

def _check_triangle(complex, sides):
    if len(sides) != 3:
        raise ValueError("a geodesic triangle needs three sides")
    for a, b in zip(sides, sides[1:] + sides[:1]):
        if not same_point(complex, a.end, b.start, 1e-9):
            raise GeodesyError("triangle sides do not close up within 1e-9")


@dataclass
class _Triangle:
    complex: MkComplex
    sides: tuple
    lengths: tuple
    comparison: tuple
    kappa: int
    cache: dict = field(default_factory=dict)


def _prepare_triangle(complex, sides, kappa=None):
    sides = tuple(sides)
    _check_triangle(complex, sides)
    k = complex.kappa if kappa is None else int(kappa)
    lengths = tuple(s.length for s in sides)
    if k == 1 and sum(lengths) >= 2.0 * math.pi:
        raise GeodesyError("spherical comparison needs perimeter below 2*pi")
    cmp = raw_comparison_triangle(k, *lengths)
    return _Triangle(complex, sides, lengths, tuple(np.asarray(x, dtype=float) for x in cmp), k)


def cat_pair_violation(tri: _Triangle, i: int, s: float, j: int, t: float):
    """(d, d_bar) for the point at fraction s of side i and fraction t of side j."""
    k = tri.kappa
    P = tri.comparison
    xb = raw_geodesic_point(k, P[i], P[(i + 1) % 3], s)
    yb = raw_geodesic_point(k, P[j], P[(j + 1) % 3], t)
    dbar = raw_dist(k, xb, yb)
    if i == j:
        return abs(s - t) * tri.lengths[i], dbar
    c = tri.complex
    if (i + 1) % 3 != j:
        i, s, j, t = j, t, i, s
    side_i, side_j = tri.sides[i], tri.sides[j]
    if c.is_pure(1):
        x = _fraction_point(side_i, s)
        y = _fraction_point(side_j, t)
        return graph_distance(c, x, y), dbar
    Li, Lj = tri.lengths[i], tri.lengths[j]
    d = _homotopic_distance(c, [side_i.subpath(s * Li, Li), side_j.subpath(0.0, t * Lj)])
    if d > dbar + NOISE:
        # the homotopic corridor only bounds the distance from above; search other corridors too
        x = _fraction_point(side_i, s)
        y = _fraction_point(side_j, t)
        d = min(d, point_distance(c, x, y))
    return d, dbar


def _cat_samples(n_samples, seed):
    rng = np.random.default_rng(seed)
    ii = rng.integers(0, 3, n_samples)
    jj = rng.integers(0, 3, n_samples)
    ss = rng.random(n_samples)
    tt = rng.random(n_samples)
    return [(int(a), float(b), int(c), float(d)) for a, b, c, d in zip(ii, ss, jj, tt)]


def cat_inequality_report(complex: MkComplex, sides, n_samples: int = 10_000, seed: int = 0,
                          kappa=None):
    """Worst sampled CAT(k) comparison violation as a report, or None."""
    tri = _prepare_triangle(complex, sides, kappa)
    worst = None
    for i, s, j, t in _cat_samples(n_samples, seed):
        d, dbar = cat_pair_violation(tri, i, s, j, t)
        v = d - dbar
        if v > NOISE and (worst is None or v > worst[0]):
            worst = (v, i, s, j, t)
    if worst is None:
        return None
    v, i, s, j, t = worst
    witness = {"kappa": tri.kappa, "sides": [_path_data(p) for p in tri.sides],
               "pair": [i, s, j, t]}
    return ViolationReport("CatComparison", witness, v)


def cat_inequality_sample(complex: MkComplex, sides, n_samples: int = 10_000, seed: int = 0,
                          kappa=None) -> float:
    """max(0, d(x, y) - d(x_bar, y_bar)) over seeded sample pairs on the triangle's sides."""
    r = cat_inequality_report(complex, sides, n_samples, seed, kappa)
    return 0.0 if r is None else r.magnitude


def _path_data(path: ComplexPath):
    return [[w.sid, list(w.bary)] for w in path.waypoints]


def _path_from(complex, data):
    return ComplexPath(complex, tuple(PathPoint(sid, tuple(b)) for sid, b in data))


def triangle_sides(complex: MkComplex, p: PathPoint, q: PathPoint, r: PathPoint):
    """Geodesic sides pq, qr, rp of a triangle (shortest geodesics)."""
    if complex.is_pure(1):
        from .geodesy.graphs import graph_geodesic
        return tuple(graph_geodesic(complex, a, b) for a, b in ((p, q), (q, r), (r, p)))
    out = []
    for a, b in ((p, q), (q, r), (r, p)):
        out.append(geodesic_candidates(complex, a, b).path)
    return tuple(out)


def violating_triangle_near(complex: MkComplex, vertex, n_triangles: int = 20, n_samples: int = 2000,
                            seed: int = 0, threshold: float = 1e-4):
    """Search triangles with corners in the star of a vertex for a CAT violation above threshold.

    Returns (report, corners) for the first triangle found, else (best report or None, None).
    """
    v = complex.resolve_vertex(vertex)
    star = sorted({sid for sid, _ in complex.vertex_members(v) if complex.simplex(sid).dim == 2})
    rng = np.random.default_rng(seed)
    best = None
    for n in range(n_triangles):
        picks = rng.choice(len(star), size=3, replace=len(star) < 3)
        corners = []
        for idx in picks:
            s = complex.simplex(star[idx])
            lab = [x for x in s.vertex_labels if complex.vertex_of(s.id, x) == v][0]
            b = rng.dirichlet([1.0, 1.0, 1.0])
            # keep the corner away from v so the triangle can surround it
            b[s.vertex_labels.index(lab)] *= 0.2
            corners.append(PathPoint(s.id, tuple(b / b.sum())))
        try:
            sides = triangle_sides(complex, *corners)
            rep = cat_inequality_report(complex, sides, n_samples, seed + n)
        except GeodesyError:
            continue
        if rep is not None and (best is None or rep.magnitude > best[0].magnitude):
            best = (rep, corners)
        if best is not None and best[0].magnitude > threshold:
            return best
    return (best[0], None) if best else (None, None)


# ---------------------------------------------------------------- convexity

def convexity_pair(complex: MkComplex, c1: ComplexPath, c2: ComplexPath, t: float, ends=None) -> float:
    """d(c1(t), c2(t)) - [(1-t) d(c1(0), c2(0)) + t d(c1(1), c2(1))]."""
    if ends is None:
        ends = (point_distance(complex, c1.start, c2.start), point_distance(complex, c1.end, c2.end))
    d0, d1 = ends
    x = _fraction_point(c1, t)
    y = _fraction_point(c2, t)
    if complex.is_pure(1):
        d = graph_distance(complex, x, y)
    else:
        bridge = geodesic_candidates(complex, c1.start, c2.start).path
        d = _homotopic_distance(complex, [c1.subpath(0.0, t * c1.length).reversed(), bridge,
                                          c2.subpath(0.0, t * c2.length)])
        bound = (1.0 - t) * d0 + t * d1
        if d > bound + NOISE:
            d = min(d, point_distance(complex, x, y))
    return d - ((1.0 - t) * d0 + t * d1)


def convexity_report(complex: MkComplex, c1: ComplexPath, c2: ComplexPath, n_samples: int = 100):
    ends = (point_distance(complex, c1.start, c2.start), point_distance(complex, c1.end, c2.end))
    worst = None
    for t in np.linspace(0.0, 1.0, n_samples):
        v = convexity_pair(complex, c1, c2, float(t), ends)
        if v > NOISE and (worst is None or v > worst[0]):
            worst = (v, float(t))
    if worst is None:
        return None
    witness = {"paths": [_path_data(c1), _path_data(c2)], "t": worst[1]}
    return ViolationReport("Convexity", witness, worst[0])


def convexity_check(complex: MkComplex, c1: ComplexPath, c2: ComplexPath, n_samples: int = 100) -> float:
    """Largest sampled excess of d(c1(t), c2(t)) over the linear interpolation of end distances."""
    if same_point(complex, c1.start, c2.start, 0.0) and same_point(complex, c1.end, c2.end, 0.0) \
            and c1.waypoints == c2.waypoints:
        return 0.0
    r = convexity_report(complex, c1, c2, n_samples)
    return 0.0 if r is None else r.magnitude


# ---------------------------------------------------------------- slimness

def _distance_to_side(complex, x: PathPoint, via: ComplexPath, side: ComplexPath) -> float:
    """Distance from x to a geodesic side; ``via`` runs from x to the side's start.

    The distance to a geodesic is convex along it in CAT(0) spaces, so a bounded
    scalar minimization over the side parameter finds it.
    """
    if complex.is_pure(1):
        return graph_distance_to_path(complex, x, side)
    L = side.length

    def f(u):
        return _homotopic_distance(complex, [via, side.subpath(0.0, u * L)])
    r = minimize_scalar(f, bounds=(0.0, 1.0), method="bounded", options={"xatol": 1e-6})
    return min(float(r.fun), f(0.0), f(1.0))


def slimness_pair(complex: MkComplex, sides, s: float) -> float:
    """Distance from the point at fraction s of side pq to the union of sides qr and rp."""
    pq, qr, rp = sides
    L = pq.length
    x = _fraction_point(pq, s)
    to_q = pq.subpath(s * L, L)
    to_p = pq.subpath(0.0, s * L).reversed()
    d_qr = _distance_to_side(complex, x, to_q, qr)
    # rp reversed starts at p
    d_rp = _distance_to_side(complex, x, to_p, rp.reversed())
    return min(d_qr, d_rp)


def _random_point(complex, rng):
    sids = sorted(s.id for s in complex.simplices)
    sid = sids[int(rng.integers(len(sids)))]
    dim = complex.simplex(sid).dim
    return PathPoint(sid, tuple(rng.dirichlet(np.ones(dim + 1))))


@dataclass(frozen=True)
class SlimnessEstimate:
    delta: float
    n_triples: int
    n_points: int
    witness: dict | None


def slimness_report(complex: MkComplex, n_triples: int = 10, seed: int = 0, n_points: int = 9,
                    triples=None) -> SlimnessEstimate:
    """Sampled lower bound on the slimness constant.

    Triple i uses its own generator seeded by (seed, i), so triples can be evaluated
    independently and in any order.
    """
    best, wit = 0.0, None
    for i in range(n_triples if triples is None else len(triples)):
        if triples is None:
            rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
            p, q, r = (_random_point(complex, rng) for _ in range(3))
        else:
            p, q, r = triples[i]
        sides = triangle_sides(complex, p, q, r)
        for s in np.linspace(0.0, 1.0, n_points + 2)[1:-1]:
            g = slimness_pair(complex, sides, float(s))
            if g > best:
                best = g
                wit = {"sides": [_path_data(x) for x in sides], "s": float(s)}
    return SlimnessEstimate(best, n_triples if triples is None else len(triples), n_points, wit)


def slimness_estimate(complex: MkComplex, n_triples: int = 10, seed: int = 0, n_points: int = 9) -> float:
    return slimness_report(complex, n_triples, seed, n_points).delta


# ---------------------------------------------------------------- quasi-geodesics

def quasi_pair(path: ComplexPath, qp: QuasiParams, t1: float, t2: float) -> float:
    """Excess of the worse quasi-geodesic inequality at arclength parameters t1, t2 (<= 0 when both hold)."""
    c = path.complex
    lo, hi = sorted((t1, t2))
    gap = hi - lo
    if gap == 0.0:
        return -qp.eps
    if c.is_pure(1):
        d = graph_distance(c, path.point_at(lo), path.point_at(hi))
    else:
        d = straighten_path(path.subpath(lo, hi)).length
    lower = gap / qp.lam - qp.eps
    upper = qp.lam * gap + qp.eps
    return max(lower - d, d - upper)


def is_quasi_geodesic(path: ComplexPath, qp: QuasiParams, n_samples: int = 200, seed: int = 0):
    """None when both inequalities hold at every sampled parameter pair, else a report."""
    L = path.length
    rng = np.random.default_rng(seed)
    pairs = rng.random((n_samples, 2)) * L
    # always include the endpoints, the most distant pair
    pairs = np.vstack([[0.0, L], pairs])
    worst = None
    for a, b in pairs:
        v = quasi_pair(path, qp, float(a), float(b))
        if v > NOISE and (worst is None or v > worst[0]):
            worst = (v, float(a), float(b))
    if worst is None:
        return None
    witness = {"path": _path_data(path), "lam": qp.lam, "eps": qp.eps, "pair": [worst[1], worst[2]]}
    return ViolationReport("QuasiGeodesic", witness, worst[0])


# ---------------------------------------------------------------- re-evaluation

def recheck(complex: MkComplex, report: ViolationReport) -> float:
    """Re-run the single-case evaluator for a report's witness and return the magnitude."""
    w = report.witness
    if report.kind == "LinkSystole":
        return _link_magnitude(complex, w)
    if report.kind == "CatComparison":
        sides = [_path_from(complex, d) for d in w["sides"]]
        tri = _prepare_triangle(complex, sides, w["kappa"])
        i, s, j, t = w["pair"]
        d, dbar = cat_pair_violation(tri, int(i), float(s), int(j), float(t))
        return d - dbar
    if report.kind == "Convexity":
        c1, c2 = (_path_from(complex, d) for d in w["paths"])
        return convexity_pair(complex, c1, c2, w["t"])
    if report.kind == "Slimness":
        sides = [_path_from(complex, d) for d in w["sides"]]
        return slimness_pair(complex, sides, w["s"])
    if report.kind == "QuasiGeodesic":
        path = _path_from(complex, w["path"])
        return quasi_pair(path, QuasiParams(w["lam"], w["eps"]), *w["pair"])
    raise ValueError(report.kind)
