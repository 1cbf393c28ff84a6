"""Crescents of polygons in the hyperbolic plane and their convexification.

Polygons are stored by Klein coordinates, where hyperbolic geodesics are
Euclidean chords, so convexity questions are Euclidean orientation tests.
Distances are always measured on the hyperboloid.

A crescent is a chord between two polygon vertices (the I-part) together with
the boundary arc it cuts off (the alpha-part).  Crescents come from a pocket
tree: the pockets of the polygon's hull are the outer crescents of depth 1;
the pockets of the hull of a crescent's arc are its children, alternating
between outer (outside the region) and inner (inside).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import LineString, Point, Polygon
from shapely.ops import unary_union

from .hypgeom import hyperbolic_from_klein

COLLINEAR_TOL = 1e-12
AREA_TOL = 1e-12
SNAP_TOL = 1e-12


class CrescentError(ValueError):
    pass


class DegeneratePolygonError(CrescentError):
    pass


class UnsupportedComparisonError(CrescentError):
    pass


class OverlapClassError(CrescentError):
    def __init__(self, message, pair):
        super().__init__(message)
        self.pair = pair


class IncompressibilityError(CrescentError):
    def __init__(self, message, crescent):
        super().__init__(message)
        self.crescent = crescent


@dataclass(frozen=True)
class HPolygon:
    """Closed polygon in the hyperbolic plane given by Klein coordinates."""
    klein: np.ndarray

    def __post_init__(self):
        k = np.array(self.klein, dtype=float)
        if k.ndim != 2 or k.shape[1] != 2 or len(k) < 3:
            raise CrescentError("a polygon needs at least 3 points in the Klein disk")
        if np.any(np.sum(k * k, axis=1) >= 1.0):
            raise CrescentError("Klein coordinates must lie in the open unit disk")
        if np.any(np.linalg.norm(k - np.roll(k, -1, axis=0), axis=1) <= 1e-14):
            raise CrescentError("consecutive vertices must be distinct")
        k.setflags(write=False)
        object.__setattr__(self, "klein", k)

    def __len__(self):
        return len(self.klein)

    @property
    def hyperboloid(self) -> np.ndarray:
        return hyperbolic_from_klein(self.klein)

    @property
    def signed_area(self) -> float:
        """Euclidean signed area in the chart (positive for counterclockwise order)."""
        x, y = self.klein[:, 0], self.klein[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def ccw(self) -> bool:
        return self.signed_area > 0.0

    @property
    def self_intersecting(self) -> bool:
        return not Polygon(self.klein).exterior.is_simple

    def shape(self) -> Polygon:
        return Polygon(self.klein)

    def arc(self, start: int, end: int) -> list:
        """Vertex indices from start to end, walking forward cyclically."""
        n = len(self)
        out = [start % n]
        while out[-1] != end % n:
            out.append((out[-1] + 1) % n)
        return out

    def is_convex(self, tol: float = COLLINEAR_TOL) -> bool:
        s = 1.0 if self.ccw else -1.0
        k = self.klein
        a, b, c = np.roll(k, 1, axis=0), k, np.roll(k, -1, axis=0)
        return bool(np.all(s * _cross(a, b, c) >= -tol))


def _cross(o, a, b):
    return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - (a[..., 1] - o[..., 1]) * (b[..., 0] - o[..., 0])


def hull_indices(points, tol: float = COLLINEAR_TOL) -> list:
    """Indices of convex-hull points (collinear boundary points kept), counterclockwise."""
    P = np.asarray(points, float)
    order = sorted(range(len(P)), key=lambda i: (P[i, 0], P[i, 1]))

    def chain(idx):
        h = []
        for i in idx:
            while len(h) >= 2 and _cross(P[h[-2]], P[h[-1]], P[i]) < -tol:
                h.pop()
            h.append(i)
        return h

    lower = chain(order)
    upper = chain(order[::-1])
    out = []
    for i in lower[:-1] + upper[:-1]:
        if i not in out:
            out.append(i)
    return out


# ---------------------------------------------------------------- crescents

@dataclass(frozen=True)
class Crescent2D:
    """Chord between vertices ``start`` and ``end`` cutting off the arc start..end."""
    start: int
    end: int
    i_part: np.ndarray = field(repr=False)
    side: str
    depth: int
    folding_number: int = 0
    size: float = 0.0
    parent: tuple | None = None

    @property
    def key(self) -> tuple:
        return (self.start, self.end)

    def arc(self, poly: HPolygon) -> list:
        return poly.arc(self.start, self.end)

    def arc_points(self, poly: HPolygon) -> np.ndarray:
        return poly.klein[self.arc(poly)]

    def region(self, poly: HPolygon) -> Polygon:
        """Region bounded by the arc and the chord."""
        return _valid(Polygon(self.arc_points(poly)))

    def hull_region(self, poly: HPolygon) -> Polygon:
        return Polygon(self.arc_points(poly)).convex_hull


def _valid(p: Polygon) -> Polygon:
    if p.is_valid:
        return p
    q = p.buffer(0)
    return q


def _pockets(P, idx, tol):
    """Child chords of the arc idx (a list of polygon indices): hull gaps other than the closing chord."""
    pts = P[idx]
    h = sorted(hull_indices(pts, tol))
    out = []
    for a, b in zip(h[:-1], h[1:]):
        if b - a > 1:
            out.append((a, b))
    return out


def _tree(poly: HPolygon, tol=COLLINEAR_TOL):
    """(start, end, side, depth, parent) for every crescent of the pocket tree."""
    P = poly.klein
    n = len(P)
    if len(hull_indices(P, tol)) < 3 or abs(poly.signed_area) <= AREA_TOL:
        raise DegeneratePolygonError("polygon vertices are collinear")
    h = sorted(hull_indices(P, tol))
    out = []
    stack = []
    for a, b in zip(h, h[1:] + [h[0] + n]):
        if b - a > 1:
            stack.append((a % n, b % n, "outer", 1, None))
    while stack:
        s, e, side, depth, parent = stack.pop(0)
        out.append((s, e, side, depth, parent))
        idx = poly.arc(s, e)
        child = "inner" if side == "outer" else "outer"
        for a, b in _pockets(P, idx, tol):
            stack.append((idx[a], idx[b], child, depth + 1, (s, e)))
    return out


def find_crescents(poly: HPolygon, size_samples: int = 1000) -> list:
    """All crescents of the pocket tree, sorted by folding number then arc index."""
    out = []
    for s, e, side, depth, parent in _tree(poly):
        c = Crescent2D(s, e, poly.klein[[s, e]].copy(), side, depth, 0, 0.0, parent)
        f = folding_number(c, poly)
        z = crescent_size(c, poly, size_samples).value
        out.append(Crescent2D(s, e, c.i_part, side, depth, f, z, parent))
    out.sort(key=lambda c: (c.folding_number, c.start, c.end, c.depth))
    return out


def crescent_from_chord(poly: HPolygon, start: int, end: int, side: str = "outer") -> Crescent2D:
    """A crescent given by an arbitrary chord (not necessarily from the pocket tree)."""
    if side not in ("outer", "inner"):
        raise ValueError("side is 'outer' or 'inner'")
    n = len(poly)
    if (end - start) % n < 2:
        raise CrescentError("the arc must contain at least one vertex between the chord ends")
    c = Crescent2D(start % n, end % n, poly.klein[[start % n, end % n]].copy(), side, 0)
    return Crescent2D(c.start, c.end, c.i_part, side, 0, folding_number(c, poly),
                      crescent_size(c, poly).value, None)


def _components(geom):
    if geom.is_empty:
        return []
    if geom.geom_type == "Polygon":
        return [geom]
    return [g for g in getattr(geom, "geoms", []) if g.geom_type == "Polygon"]


def folding_number(crescent: Crescent2D, poly: HPolygon) -> int:
    """Crossing depth of the crescent.

    The hull of the arc is cut by the polygon boundary into faces.  Starting
    from the faces on the crescent's own side of the arc, each step into an
    adjacent face crosses the boundary once; the folding number is the largest
    number of crossings needed to reach a face.
    """
    H = crescent.hull_region(poly)
    M = _valid(poly.shape())
    scale = max(H.area, 1e-300)
    faces = [f for f in _components(H.intersection(M)) + _components(H.difference(M)) if f.area > AREA_TOL * scale]
    if not faces:
        return 0
    R = crescent.region(poly)
    start = [i for i, f in enumerate(faces) if f.intersection(R).area > 1e-6 * f.area]
    if not start:
        return 0
    dist = {i: 0 for i in start}
    frontier = list(start)
    while frontier:
        nxt = []
        for i in frontier:
            for j in range(len(faces)):
                if j in dist:
                    continue
                if faces[i].boundary.intersection(faces[j].boundary).length > 1e-12:
                    dist[j] = dist[i] + 1
                    nxt.append(j)
        frontier = nxt
    return max(dist.values())


# ---------------------------------------------------------------- sizes

def _segment_distances(X, a, b):
    """Hyperbolic distances from hyperboloid points X (N, 3) to the geodesic segment [a, b]."""
    J = np.array([-1.0, 1.0, 1.0])

    def d(P, q):
        diff = P - q
        m = np.maximum(np.sum(J * diff * diff, axis=-1), 0.0)
        return 2.0 * np.arcsinh(np.sqrt(m) / 2.0)

    ends = np.minimum(d(X, a), d(X, b))
    nvec = np.cross(a, b)
    nvec[0] = -nvec[0]
    nn = float(np.sum(J * nvec * nvec))
    if nn <= 0.0:
        return ends
    nvec = nvec / math.sqrt(nn)
    s = np.sum(J * X * nvec, axis=-1)
    foot = X - s[:, None] * nvec
    coef = np.linalg.lstsq(np.stack([a, b], axis=1), foot.T, rcond=None)[0]
    inside = (coef[0] >= 0.0) & (coef[1] >= 0.0)
    perp = np.arcsinh(np.abs(s))
    return np.where(inside, np.minimum(ends, perp), ends)


def polyline_distance(X, chain) -> np.ndarray:
    """Distances from hyperboloid points to a polyline given by hyperboloid vertices."""
    best = np.full(len(X), np.inf)
    for a, b in zip(chain[:-1], chain[1:]):
        best = np.minimum(best, _segment_distances(X, a, b))
    return best


@dataclass(frozen=True)
class SizeEstimate:
    value: float
    bound: float  # the true supremum is at most value + bound

    def __float__(self):
        return self.value


def crescent_size(crescent: Crescent2D, poly: HPolygon, samples: int = 1000) -> SizeEstimate:
    """Largest hyperbolic distance from a chord point to the arc (sampled)."""
    t = np.linspace(0.0, 1.0, samples)
    a, b = crescent.i_part
    K = (1.0 - t)[:, None] * a + t[:, None] * b
    X = hyperbolic_from_klein(K)
    chain = hyperbolic_from_klein(crescent.arc_points(poly))
    d = polyline_distance(X, chain)
    J = np.array([-1.0, 1.0, 1.0])
    diff = X[1:] - X[:-1]
    gaps = 2.0 * np.arcsinh(np.sqrt(np.maximum(np.sum(J * diff * diff, axis=-1), 0.0)) / 2.0)
    return SizeEstimate(float(np.max(d)), float(np.max(gaps)) / 2.0 if len(gaps) else 0.0)


# ---------------------------------------------------------------- pairs

def _segments_cross(p1, p2, q1, q2, tol=1e-14):
    d1, d2 = _cross(q1, q2, p1), _cross(q1, q2, p2)
    d3, d4 = _cross(p1, p2, q1), _cross(p1, p2, q2)
    return d1 * d2 < -tol and d3 * d4 < -tol


def classify_pair(c1: Crescent2D, c2: Crescent2D, poly: HPolygon) -> str:
    """'disjoint', 'nested' or 'transversal' for two crescents on the same side."""
    if c1.side != c2.side:
        raise UnsupportedComparisonError("crescents lie on different sides of the boundary")
    R, S = c1.region(poly), c2.region(poly)
    scale = max(min(R.area, S.area), 1e-300)
    inter = R.intersection(S).area
    if inter <= 1e-9 * scale:
        return "disjoint"
    if R.difference(S).area <= 1e-9 * scale or S.difference(R).area <= 1e-9 * scale:
        return "nested"
    (p1, p2), (q1, q2) = c1.i_part, c2.i_part
    if not _segments_cross(p1, p2, q1, q2):
        raise CrescentError("crescents overlap without crossing chords")
    if not _transversal_conditions(c1, c2, poly, R, S):
        raise CrescentError("crossing chords fail the transversal region conditions")
    return "transversal"


def _transversal_conditions(c1, c2, poly, R, S) -> bool:
    (p1, p2), (q1, q2) = c1.i_part, c2.i_part
    den = _cross(np.zeros(2), p2 - p1, q2 - q1)
    t = _cross(np.zeros(2), q1 - p1, q2 - q1) / den
    J = p1 + t * (p2 - p1)
    # the chord piece of each crescent beyond the crossing lies in the other crescent
    Rc, Sc = R.buffer(1e-9), S.buffer(1e-9)
    nu_r = [LineString([J, p]) for p in (p1, p2) if Sc.covers(LineString([J, p]))]
    nu_s = [LineString([J, q]) for q in (q1, q2) if Rc.covers(LineString([J, q]))]
    if not nu_r or not nu_s:
        return False
    # arcs overlap in a single run and their union is one arc
    a1, a2 = set(c1.arc(poly)), set(c2.arc(poly))
    if not (a1 & a2):
        return False
    n = len(poly)
    union = a1 | a2
    if len(union) < n:
        gaps = sum(1 for i in union if (i + 1) % n not in union)
        if gaps != 1:
            return False
    # interiors meet with positive area, neither contains the other
    return R.intersection(S).area > 0.0


# ---------------------------------------------------------------- moves

@dataclass(frozen=True)
class MoveResult:
    polygon: HPolygon
    removed: int
    added: int


def _overlap(R, S):
    return R.intersection(S).area > 1e-12 * max(min(R.area, S.area), 1e-300)


def crescent_move(poly: HPolygon, crescents, universe=None) -> MoveResult:
    """Replace the arcs of an overlap class of crescents by the boundary of their union.

    Outer crescents are added to the region, inner ones removed from it.  The
    class must be connected under interior overlap and closed against
    ``universe`` (default: the crescents of the pocket tree).
    """
    cl = list(crescents)
    if not cl:
        return MoveResult(poly, 0, 0)
    sides = {c.side for c in cl}
    if len(sides) != 1:
        raise UnsupportedComparisonError("an overlap class lies on one side")
    regions = [c.region(poly) for c in cl]
    # connectivity of the class
    seen, todo = {0}, [0]
    while todo:
        i = todo.pop()
        for j in range(len(cl)):
            if j not in seen and _overlap(regions[i], regions[j]):
                seen.add(j)
                todo.append(j)
    if len(seen) != len(cl):
        j = min(set(range(len(cl))) - seen)
        raise OverlapClassError("class is not connected by overlaps", (cl[0].key, cl[j].key))
    if universe is None:
        universe = [c for c in find_crescents(poly, size_samples=2) if c.side == cl[0].side]
    keys = {c.key for c in cl}
    for d in universe:
        if d.key in keys or d.side != cl[0].side:
            continue
        D = d.region(poly)
        for c, R in zip(cl, regions):
            if _overlap(R, D) and not (R.difference(D).area <= 1e-9 * R.area or D.difference(R).area <= 1e-9 * D.area):
                raise OverlapClassError("class misses a transversally overlapping crescent", (c.key, d.key))
    M = _valid(poly.shape())
    U = unary_union(regions)
    new = M.union(U) if cl[0].side == "outer" else M.difference(U)
    if new.geom_type != "Polygon" or len(new.interiors) > 0:
        raise CrescentError("move does not produce a simple polygon")
    pts = _snap(np.array(new.exterior.coords)[:-1], poly.klein)
    pts = _drop_repeats(pts)
    if (_signed_area(pts) > 0) != poly.ccw:
        pts = pts[::-1]
    pts = _rotate_to_first(pts, poly.klein)
    out = HPolygon(pts)
    old = {tuple(p) for p in poly.klein}
    now = {tuple(p) for p in pts}
    return MoveResult(out, len(old - now), len(now - old))


def _signed_area(k):
    x, y = k[:, 0], k[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _snap(pts, ref):
    out = pts.copy()
    for i, p in enumerate(pts):
        d = np.linalg.norm(ref - p, axis=1)
        j = int(np.argmin(d))
        if d[j] <= SNAP_TOL:
            out[i] = ref[j]
    return out


def _drop_repeats(pts):
    keep = [pts[0]]
    for p in pts[1:]:
        if np.linalg.norm(p - keep[-1]) > 1e-14:
            keep.append(p)
    if len(keep) > 1 and np.linalg.norm(keep[0] - keep[-1]) <= 1e-14:
        keep.pop()
    return np.array(keep)


def _rotate_to_first(pts, ref):
    """Start the ring at the surviving input vertex with the smallest index."""
    for r in ref:
        hit = np.where(np.all(pts == r, axis=1))[0]
        if len(hit):
            return np.roll(pts, -int(hit[0]), axis=0)
    return pts


# ---------------------------------------------------------------- hull

@dataclass(frozen=True)
class MarkedGeodesics:
    """Marked points and chords (Klein coordinates), one array of 1 or 2 points each."""
    items: tuple = ()

    @classmethod
    def of(cls, *items) -> "MarkedGeodesics":
        return cls(tuple(np.atleast_2d(np.asarray(x, float)) for x in items))

    def samples(self, i, n=64) -> np.ndarray:
        x = self.items[i]
        if len(x) == 1:
            return x
        t = np.linspace(0.0, 1.0, n)[:, None]
        return (1.0 - t) * x[0] + t * x[1]


def region_distance(poly: HPolygon, klein_points) -> float:
    """Largest hyperbolic distance from the points to the closed polygon region."""
    M = _valid(poly.shape())
    pts = np.atleast_2d(klein_points)
    out = [i for i, p in enumerate(pts) if not M.buffer(1e-12).covers(Point(p))]
    if not out:
        return 0.0
    X = hyperbolic_from_klein(pts[out])
    ring = hyperbolic_from_klein(np.vstack([poly.klein, poly.klein[:1]]))
    return float(np.max(polyline_distance(X, ring)))


def check_marks(poly: HPolygon, marked: MarkedGeodesics, crescents) -> None:
    """Raise IncompressibilityError when a mark enters the interior of a crescent."""
    for c in crescents:
        R = c.region(poly).buffer(-1e-10)
        if R.is_empty:
            continue
        for i in range(len(marked.items)):
            pts = marked.samples(i)
            geom = Point(pts[0]) if len(pts) == 1 else LineString(pts)
            if R.intersects(geom):
                raise IncompressibilityError(f"marked element {i} enters crescent {c.key}", c)


@dataclass(frozen=True)
class HullIteration:
    level: int  # highest folding number at the start of the iteration
    moves: tuple  # arcs (start, end) moved, in the polygon current at each move
    vertices: int  # vertex count after the iteration


@dataclass(frozen=True)
class HullResult:
    polygon: HPolygon
    trace: tuple

    @property
    def levels(self) -> list:
        return [it.level for it in self.trace]


def _ancestors(c, by_key):
    p = c.parent
    while p is not None:
        yield p
        p = by_key[p].parent if p in by_key else None


def _highest_level(cs):
    """Top folding number and the crescents to try moving, best first.

    Crescents under one at the top level come first, deepest first; the rest
    follow in the same order.
    """
    top = max(c.folding_number for c in cs)
    by_key = {c.key: c for c in cs}
    heads = {c.key for c in cs if c.folding_number == top}
    under = lambda c: c.key in heads or bool(heads & set(_ancestors(c, by_key)))
    return top, sorted(cs, key=lambda c: (not under(c), -c.depth, c.start, c.end))


def is_embedded(c: Crescent2D, poly: HPolygon) -> bool:
    """Whether the crescent's region meets the polygon only along its own arc.

    Only embedded crescents can be moved without splitting the region.
    """
    R, M = c.region(poly), _valid(poly.shape())
    stray = R.intersection(M) if c.side == "outer" else R.difference(M)
    return stray.area <= 1e-9 * R.area


def _pending_distance(poly: HPolygon, cs, klein_points) -> float:
    """Distance to the region, ignoring points in outer pockets that are still to be filled."""
    pts = np.atleast_2d(klein_points)
    # regions one by one: a union of pockets sharing a vertex can lose slivers
    for R in [c.region(poly).buffer(1e-12) for c in cs if c.side == "outer"]:
        pts = pts[[not R.covers(Point(p)) for p in pts]]
    return region_distance(poly, pts) if len(pts) else 0.0


def two_convex_hull(poly: HPolygon, marked: MarkedGeodesics | None = None, eps: float = 1e-6,
                    max_moves: int = 10000) -> HullResult:
    """Move crescents level by level until the polygon is convex.

    Each iteration starts at the current highest folding number and moves the
    deepest embedded crescents under it (filling outer pockets, cutting inner
    ones) until that number drops.  After each move every mark must stay
    within eps of the region or inside an outer pocket still to be filled.
    """
    if not eps > 0.0:
        raise ValueError("eps must be positive")
    marked = marked or MarkedGeodesics()
    cur = poly
    cs = find_crescents(cur, size_samples=2)
    check_marks(cur, marked, cs)
    trace = []
    budget = max_moves
    while cs:
        level, _ = _highest_level(cs)
        moved = []
        while cs and _highest_level(cs)[0] >= level:
            c = next((d for d in _highest_level(cs)[1] if is_embedded(d, cur)), None)
            if c is None:
                raise CrescentError("no crescent can be moved without splitting the polygon")
            same = [d for d in cs if d.side == c.side]
            cur = crescent_move(cur, [c], universe=same).polygon
            moved.append(c.key)
            budget -= 1
            if budget <= 0:
                raise CrescentError("move budget exhausted")
            cs = find_crescents(cur, size_samples=2)
            for i in range(len(marked.items)):
                d = _pending_distance(cur, cs, marked.samples(i))
                if d > eps:
                    raise IncompressibilityError(f"marked element {i} is {d} from the region after a move", c)
        trace.append(HullIteration(level, tuple(moved), len(cur)))
    return HullResult(cur, tuple(trace))
