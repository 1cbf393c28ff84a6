"""Points and piecewise-geodesic paths inside a 2-complex."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..complexcore import MkComplex
from ..hypgeom import normalize_model, raw_dist

BARY_TOL = 1e-12
SUPPORT_TOL = 1e-12


class GeodesyError(ValueError):
    pass


class NonConvergenceError(GeodesyError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


class DisconnectedError(GeodesyError):
    pass


@dataclass(frozen=True)
class PathPoint:
    """A point of a complex given by a simplex id and barycentric coordinates.

    Barycentric coordinates are linear in the quadric model: the point is the
    normalization of sum(b_i * V_i), which is independent of how the simplex is placed.
    """
    sid: str
    bary: tuple

    def __post_init__(self):
        b = tuple(float(x) for x in self.bary)
        if abs(math.fsum(b) - 1.0) > BARY_TOL * 10 or min(b) < -1e-12:
            raise GeodesyError(f"invalid barycentric coordinates {b}")
        object.__setattr__(self, "sid", str(self.sid))
        object.__setattr__(self, "bary", b)

    def support(self) -> tuple:
        return tuple(i for i, x in enumerate(self.bary) if x > SUPPORT_TOL)


def vertex_point(complex: MkComplex, sid, label) -> PathPoint:
    s = complex.simplex(sid)
    b = [0.0] * (s.dim + 1)
    b[s.vertex_labels.index(str(label))] = 1.0
    return PathPoint(s.id, tuple(b))


def simplex_vectors(complex: MkComplex, sid) -> np.ndarray:
    """Model coordinates of a simplex's vertices in its canonical placement (rows in label order)."""
    s = complex.simplex(sid)
    if s.dim == 2:
        pl = complex.placement(sid)
        return np.array([pl[x] for x in s.vertex_labels])
    if s.dim == 1:
        key = ("place1", s.id)
        cache = complex.cache()
        if key not in cache:
            l = s.length(*s.vertex_labels)
            k = complex.kappa
            if k == -1:
                v = np.array([[1.0, 0.0, 0.0], [math.cosh(l), math.sinh(l), 0.0]])
            elif k == 1:
                v = np.array([[1.0, 0.0, 0.0], [math.cos(l), math.sin(l), 0.0]])
            else:
                v = np.array([[1.0, 0.0, 0.0], [1.0, l, 0.0]])
            cache[key] = v
        return cache[key]
    raise GeodesyError("geodesy works on 1- and 2-simplices")


def combine(kappa: int, vectors: np.ndarray, bary) -> np.ndarray:
    x = np.asarray(bary, dtype=float) @ vectors
    if kappa == 0:
        return x / x[0]
    return normalize_model(kappa, x)


def point_vector(complex: MkComplex, p: PathPoint) -> np.ndarray:
    return combine(complex.kappa, simplex_vectors(complex, p.sid), p.bary)


def bary_of(kappa: int, vectors: np.ndarray, x: np.ndarray) -> tuple:
    """Barycentric coordinates of a model vector in a placed triangle."""
    b = np.linalg.solve(vectors.T, x)
    b = np.where(np.abs(b) < 1e-15 * np.max(np.abs(b)), 0.0, b)
    b = np.clip(b, 0.0, None)
    b = b / b.sum()
    return tuple(float(v) for v in b)


def support_face(complex: MkComplex, p: PathPoint):
    """Smallest face containing the point, as (kind, class id)."""
    s = complex.simplex(p.sid)
    sup = p.support()
    labels = [s.vertex_labels[i] for i in sup]
    if len(labels) == 1:
        return ("vertex", complex.vertex_of(s.id, labels[0]))
    if len(labels) == 2:
        return ("edge", complex.edge_of(s.id, *labels))
    return ("simplex", s.id)


def transfer(complex: MkComplex, p: PathPoint, sid2) -> PathPoint | None:
    """Express p in simplex sid2 when it lies on a face shared with sid2; else None."""
    sid2 = str(sid2)
    if p.sid == sid2:
        return p
    s, t = complex.simplex(p.sid), complex.simplex(sid2)
    sup = p.support()
    kind, cid = support_face(complex, p)
    if kind == "simplex":
        return None
    cls = {complex.vertex_of(s.id, s.vertex_labels[i]): p.bary[i] for i in sup}
    tlab = {complex.vertex_of(t.id, x): j for j, x in enumerate(t.vertex_labels)}
    if not all(c in tlab for c in cls):
        return None
    if kind == "edge":
        labs = [t.vertex_labels[tlab[c]] for c in cls]
        if complex.edge_of(t.id, *labs) != cid:
            return None
    b = [0.0] * (t.dim + 1)
    for c, w in cls.items():
        b[tlab[c]] = w
    return PathPoint(t.id, tuple(b))


def same_point(complex: MkComplex, p: PathPoint, q: PathPoint, tol: float = 1e-9) -> bool:
    if p.sid == q.sid:
        return max(abs(a - b) for a, b in zip(p.bary, q.bary)) <= tol
    r = transfer(complex, p, q.sid)
    if r is None:
        return False
    return max(abs(a - b) for a, b in zip(r.bary, q.bary)) <= tol


@dataclass(frozen=True, eq=False)
class ComplexPath:
    """Polyline of waypoints; consecutive waypoints in the same simplex bound a straight piece,
    consecutive waypoints in different simplices are the same point seen from two simplices."""
    complex: MkComplex = field(repr=False)
    waypoints: tuple
    virtual: tuple = ()
    closed: bool = False
    contracted: bool = False

    def __post_init__(self):
        wps = tuple(self.waypoints)
        if not wps:
            raise GeodesyError("a path needs at least one waypoint")
        object.__setattr__(self, "waypoints", wps)
        virt = tuple(bool(x) for x in self.virtual) if self.virtual else (False,) * len(wps)
        if len(virt) != len(wps):
            raise GeodesyError("virtual flags must match the waypoints")
        object.__setattr__(self, "virtual", virt)
        for a, b in zip(wps[:-1], wps[1:]):
            if a.sid != b.sid and not same_point(self.complex, a, b, 1e-7):
                raise GeodesyError(f"waypoints in {a.sid} and {b.sid} are not joined by a shared face point")

    @property
    def start(self) -> PathPoint:
        return self.waypoints[0]

    @property
    def end(self) -> PathPoint:
        return self.waypoints[-1]

    def pieces(self):
        """(sid, start point, end point) of every straight piece, zero-length pieces included."""
        out = []
        for a, b in zip(self.waypoints[:-1], self.waypoints[1:]):
            if a.sid == b.sid:
                out.append((a.sid, a, b))
        return out

    def piece_lengths(self) -> list:
        k = self.complex.kappa
        out = []
        for sid, a, b in self.pieces():
            V = simplex_vectors(self.complex, sid)
            out.append(raw_dist(k, combine(k, V, a.bary), combine(k, V, b.bary)))
        return out

    @property
    def length(self) -> float:
        return math.fsum(self.piece_lengths())

    def point_at(self, s: float) -> PathPoint:
        """Point at arclength s (clamped to the path)."""
        lens = self.piece_lengths()
        pcs = self.pieces()
        if not pcs:
            return self.waypoints[0]
        s = min(max(s, 0.0), math.fsum(lens))
        acc = 0.0
        for (sid, a, b), l in zip(pcs, lens):
            if s <= acc + l or (sid, a, b) == pcs[-1]:
                t = 0.0 if l == 0 else min(max((s - acc) / l, 0.0), 1.0)
                return _interp(self.complex, sid, a, b, t)
            acc += l
        return pcs[-1][2]

    def vectors_at(self, params) -> list:
        """(sid, model vector) at each arclength parameter (sorted input is fastest)."""
        k = self.complex.kappa
        lens = self.piece_lengths()
        pcs = self.pieces()
        out = []
        if not pcs:
            p = self.waypoints[0]
            v = point_vector(self.complex, p)
            return [(p.sid, v) for _ in params]
        cum = np.concatenate([[0.0], np.cumsum(lens)])
        total = cum[-1]
        for s in params:
            s = min(max(float(s), 0.0), total)
            i = int(np.searchsorted(cum, s, side="right")) - 1
            i = min(max(i, 0), len(pcs) - 1)
            sid, a, b = pcs[i]
            l = lens[i]
            t = 0.0 if l == 0 else min(max((s - cum[i]) / l, 0.0), 1.0)
            V = simplex_vectors(self.complex, sid)
            from ..hypgeom import raw_geodesic_point
            out.append((sid, raw_geodesic_point(k, combine(k, V, a.bary), combine(k, V, b.bary), t)))
        return out

    def reversed(self) -> "ComplexPath":
        return ComplexPath(self.complex, self.waypoints[::-1], self.virtual[::-1], self.closed)

    def concat(self, other: "ComplexPath") -> "ComplexPath":
        if not same_point(self.complex, self.end, other.start, 1e-7):
            raise GeodesyError("paths do not meet")
        return ComplexPath(self.complex, self.waypoints + other.waypoints, self.virtual + other.virtual)

    def subpath(self, s0: float, s1: float) -> "ComplexPath":
        """Portion between arclengths s0 <= s1."""
        lens = self.piece_lengths()
        pcs = self.pieces()
        total = math.fsum(lens)
        s0, s1 = max(0.0, s0), min(total, s1)
        if not pcs or s1 <= s0:
            p = self.point_at(s0)
            return ComplexPath(self.complex, (p,))
        wps = []
        acc = 0.0
        for (sid, a, b), l in zip(pcs, lens):
            lo, hi = acc, acc + l
            acc = hi
            if hi < s0 or lo > s1:
                continue
            ta = 0.0 if l == 0 else max((s0 - lo) / l, 0.0)
            tb = 1.0 if l == 0 else min((s1 - lo) / l, 1.0)
            wps.append(_interp(self.complex, sid, a, b, ta))
            wps.append(_interp(self.complex, sid, a, b, tb))
        return ComplexPath(self.complex, tuple(wps))


def _interp(complex, sid, a: PathPoint, b: PathPoint, t: float) -> PathPoint:
    if t <= 0.0:
        return a
    if t >= 1.0:
        return b
    k = complex.kappa
    V = simplex_vectors(complex, sid)
    from ..hypgeom import raw_geodesic_point
    x = raw_geodesic_point(k, combine(k, V, a.bary), combine(k, V, b.bary), t)
    if V.shape[0] == 2:
        # 1-simplex: barycentric coordinates from the distance along the edge
        l = raw_dist(k, V[0], V[1])
        d0 = raw_dist(k, V[0], x)
        w = d0 / l
        return PathPoint(sid, (1.0 - w, w))
    return PathPoint(sid, bary_of(k, V, x))


def path_through(complex: MkComplex, points) -> ComplexPath:
    """Path visiting the given points in order; consecutive points must share a simplex.

    A point is re-expressed in the next point's simplex when needed.
    """
    pts = list(points)
    wps = [pts[0]]
    for q in pts[1:]:
        p = wps[-1]
        if p.sid == q.sid:
            wps.append(q)
            continue
        moved = transfer(complex, p, q.sid)
        if moved is not None:
            wps += [moved, q]
            continue
        back = transfer(complex, q, p.sid)
        if back is not None:
            wps += [back, q]
            continue
        raise GeodesyError(f"points in {p.sid} and {q.sid} share no simplex")
    return ComplexPath(complex, tuple(wps))
