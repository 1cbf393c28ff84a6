"""Classification of surface vertices from their direction links on the unit sphere.

A link is a closed spherical polygon of unit directions.  The central number is
the cap margin ``m = max over unit n of min_i <n, v_i>``: positive when an open
hemisphere holds the link, zero on the boundary case, negative when no closed
hemisphere does (then ``-m`` is how deep the origin sits inside the hull).
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

MARGIN = 1e-9
UNIT_TOL = 1e-12
H_TOL = 1e-9
BISECT_ITERS = 40


class VertexClassError(ValueError):
    pass


class OrientationMissingError(VertexClassError):
    pass


class MalformedCertificateError(VertexClassError):
    pass


@dataclass(frozen=True)
class SphericalPolygon:
    """Closed polygon of unit vectors; consecutive vertices joined by minor arcs."""
    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3 or v.shape[0] < 3:
            raise VertexClassError("a spherical polygon needs at least 3 vectors in R^3")
        if np.any(np.abs(np.linalg.norm(v, axis=1) - 1.0) > UNIT_TOL):
            raise VertexClassError("vertices must be unit vectors (within 1e-12)")
        nxt = np.roll(v, -1, axis=0)
        if np.any(np.linalg.norm(v + nxt, axis=1) < 1e-12):
            raise VertexClassError("consecutive vertices are antipodal; the arc between them is ambiguous")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @classmethod
    def from_directions(cls, dirs) -> "SphericalPolygon":
        d = np.asarray(dirs, dtype=float)
        return cls(d / np.linalg.norm(d, axis=1, keepdims=True))

    def __len__(self):
        return len(self.vertices)

    def arc_lengths(self) -> np.ndarray:
        v = self.vertices
        return _arc(v, np.roll(v, -1, axis=0))

    @property
    def length(self) -> float:
        return math.fsum(self.arc_lengths())

    def rotated(self, R) -> "SphericalPolygon":
        return SphericalPolygon(self.vertices @ np.asarray(R, float).T)

    def sample(self, per_arc: int) -> np.ndarray:
        """Points along the loop: every vertex plus per_arc - 1 interior points per arc."""
        v = self.vertices
        out = []
        for a, b in zip(v, np.roll(v, -1, axis=0)):
            out.extend(slerp(a, b, t) for t in np.arange(per_arc) / per_arc)
        return np.array(out)


def _arc(a, b):
    """Great-circle distance, stable for near and near-antipodal points."""
    cr = np.linalg.norm(np.cross(a, b), axis=-1)
    return np.arctan2(cr, np.sum(a * b, axis=-1))


def slerp(a, b, t):
    w = _arc(a, b)
    if w < 1e-15:
        return a.copy()
    s = math.sin(w)
    return (math.sin((1 - t) * w) * a + math.sin(t * w) * b) / s


# ---------------------------------------------------------------- hemispheres

@dataclass(frozen=True)
class CapFit:
    """Best hemisphere center and its margin min_i <center, v_i> (negative: depth of the origin)."""
    center: np.ndarray
    margin: float


def _lp_center(V):
    """max t subject to <n, v_i> >= t and -1 <= n_j <= 1 (a linear program)."""
    n = len(V)
    c = np.zeros(4)
    c[3] = -1.0
    A = np.hstack([-V, np.ones((n, 1))])
    res = linprog(c, A_ub=A, b_ub=np.zeros(n), bounds=[(-1, 1)] * 3 + [(None, 1)], method="highs")
    if res.status != 0:
        raise VertexClassError(f"hemisphere LP failed: {res.message}")
    return res.x[:3], res.x[3]


def _min_norm_point(V):
    """Closest point of conv(V) to the origin.

    In R^3 the closest point lies in the relative interior of a vertex, edge or
    triangle spanned by input points, so all of them are checked.
    """
    V = np.asarray(V, float)
    n = len(V)
    cands = [V]
    i, j = np.triu_indices(n, 1)
    if len(i):
        a, d = V[i], V[j] - V[i]
        dd = np.einsum("ij,ij->i", d, d)
        ok = dd > 1e-24
        t = -np.einsum("ij,ij->i", a[ok], d[ok]) / dd[ok]
        keep = (t > 0.0) & (t < 1.0)
        cands.append(a[ok][keep] + t[keep, None] * d[ok][keep])
    if n >= 3:
        tri = np.array(list(itertools.combinations(range(n), 3)))
        a, e1, e2 = V[tri[:, 0]], V[tri[:, 1]] - V[tri[:, 0]], V[tri[:, 2]] - V[tri[:, 0]]
        g11 = np.einsum("ij,ij->i", e1, e1)
        g12 = np.einsum("ij,ij->i", e1, e2)
        g22 = np.einsum("ij,ij->i", e2, e2)
        r1 = -np.einsum("ij,ij->i", a, e1)
        r2 = -np.einsum("ij,ij->i", a, e2)
        det = g11 * g22 - g12 * g12
        ok = det > 1e-18 * np.maximum(g11 * g22, 1e-300)
        s_ = np.where(ok, (r1 * g22 - r2 * g12) / np.where(ok, det, 1.0), -1.0)
        t_ = np.where(ok, (g11 * r2 - g12 * r1) / np.where(ok, det, 1.0), -1.0)
        keep = ok & (s_ > 0.0) & (t_ > 0.0) & (s_ + t_ < 1.0)
        cands.append(a[keep] + s_[keep, None] * e1[keep] + t_[keep, None] * e2[keep])
    P = np.vstack(cands)
    return P[int(np.argmin(np.einsum("ij,ij->i", P, P)))]


def cap_fit(V) -> CapFit:
    V = np.asarray(V, float)
    n_box, t = _lp_center(V)
    if t > 0.0:
        cands = [n_box / np.linalg.norm(n_box)]
        p = _min_norm_point(V)
        if np.linalg.norm(p) > 0.0:
            cands.append(p / np.linalg.norm(p))
        best = max(cands, key=lambda c: float(np.min(V @ c)))
        return CapFit(best, float(np.min(V @ best)))
    # no open hemisphere: measure how far inside the hull the origin is
    _, s, vt = np.linalg.svd(V)
    if s[-1] < 1e-12 * max(s[0], 1.0):
        c = vt[-1]
        return CapFit(c, float(np.min(V @ c)))
    try:
        hull = ConvexHull(V)
    except QhullError:
        c = vt[-1]
        return CapFit(c, float(np.min(V @ c)))
    eq = hull.equations  # a.x + d <= 0 inside, |a| = 1
    k = int(np.argmax(eq[:, 3]))
    c = -eq[k, :3]
    return CapFit(c, float(np.min(V @ c)) if eq[k, 3] >= 0.0 else float(eq[k, 3]))


def hemisphere_fit(poly: SphericalPolygon, mode: str = "open"):
    """Center of an open (margin > 1e-9) or closed (margin >= -1e-9) hemisphere holding the loop, or None.

    Arcs are minor, so holding the vertices means holding the loop.
    """
    if mode not in ("open", "closed"):
        raise ValueError("mode is 'open' or 'closed'")
    fit = cap_fit(poly.vertices)
    if mode == "open":
        return fit.center if fit.margin > MARGIN else None
    return fit.center if fit.margin >= -MARGIN else None


def fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    r = np.sqrt(1.0 - z * z)
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)


# ---------------------------------------------------------------- certificates

@dataclass(frozen=True)
class SphericalSegment:
    """Arc from ``start`` leaving in unit tangent direction ``tangent`` for ``length`` radians."""
    start: np.ndarray
    tangent: np.ndarray
    length: float

    def point(self, s):
        return math.cos(s) * self.start + math.sin(s) * self.tangent

    @property
    def end(self):
        return self.point(self.length)

    @property
    def pole(self):
        return np.cross(self.start, self.tangent)

    @classmethod
    def major_arc(cls, z, t) -> "SphericalSegment":
        """The long way round from z to t (length 2*pi - d(z, t) > pi)."""
        z, t = np.asarray(z, float), np.asarray(t, float)
        w = t - np.dot(t, z) * z
        nw = np.linalg.norm(w)
        if nw < 1e-12:
            raise MalformedCertificateError("endpoints are equal or antipodal")
        return cls(z, -w / nw, 2.0 * math.pi - float(_arc(z, t)))


@dataclass(frozen=True)
class CrossingCertificate:
    """A long segment l with ends on the link and two link points x, y whose minor arc crosses it."""
    segment: SphericalSegment
    x: np.ndarray
    y: np.ndarray


def _on_loop(poly: SphericalPolygon, p, tol=1e-9) -> bool:
    v = poly.vertices
    for a, b in zip(v, np.roll(v, -1, axis=0)):
        if abs(_arc(a, p) + _arc(p, b) - _arc(a, b)) <= tol:
            return True
    return False


def crossing_certificate_check(poly: SphericalPolygon, l: SphericalSegment, x, y, tol: float = 1e-9) -> bool:
    """Validate a crossing certificate.

    Valid when x and y are strictly on opposite sides of l's great circle and
    their minor arc meets l strictly between the antipodes of l's end and start
    (arclength in (length - pi, pi)).  Then no closed hemisphere holds the link.
    """
    if not l.length > math.pi:
        raise MalformedCertificateError(f"segment length {l.length} is not greater than pi")
    x, y = np.asarray(x, float), np.asarray(y, float)
    for p in (l.start, l.end):
        if not _on_loop(poly, p, tol):
            raise MalformedCertificateError("segment endpoints must lie on the link")
    if not (_on_loop(poly, x, tol) and _on_loop(poly, y, tol)):
        raise MalformedCertificateError("x and y must lie on the link")
    m = l.pole
    sx, sy = float(np.dot(m, x)), float(np.dot(m, y))
    if not (sx * sy < 0.0 and min(abs(sx), abs(sy)) > tol):
        return False
    p = np.cross(m, np.cross(x, y))
    p /= np.linalg.norm(p)
    if np.dot(p, x + y) < 0.0:
        p = -p
    s = math.atan2(float(np.dot(p, l.tangent)), float(np.dot(p, l.start))) % (2.0 * math.pi)
    return l.length - math.pi + tol < s < math.pi - tol


def find_crossing_certificate(poly: SphericalPolygon, per_arc: int = 4):
    """Search a crossing certificate among loop samples, refining the sampling if needed."""
    while per_arc <= 64:
        S = poly.sample(per_arc)
        try:
            hull = ConvexHull(S)
        except QhullError:
            return None
        eq = hull.equations
        for z in S:
            # the ray from the origin towards -z leaves the hull through a facet;
            # z and that facet's corners hold the origin inside their tetrahedron
            d = -z
            with np.errstate(divide="ignore"):
                hit = np.where(eq[:, :3] @ d > 0, -eq[:, 3] / (eq[:, :3] @ d), np.inf)
            k = int(np.argmin(hit))
            a, b, c = S[hull.simplices[k]]
            for zz, tt, xx, yy in ((z, a, b, c), (z, b, a, c), (z, c, a, b)):
                if np.linalg.norm(zz + tt) < 1e-9 or np.linalg.norm(zz - tt) < 1e-9:
                    continue
                seg = SphericalSegment.major_arc(zz, tt)
                if crossing_certificate_check(poly, seg, xx, yy):
                    return CrossingCertificate(seg, xx.copy(), yy.copy())
        per_arc *= 2
    return None


# ---------------------------------------------------------------- classification

class Kind(enum.Enum):
    CONVEX = "Convex"
    CONCAVE = "Concave"
    S_VERTEX = "SVertex"
    STRICT_S_VERTEX = "StrictSVertex"


@dataclass(frozen=True)
class VertexClass:
    kind: Kind
    h_vertex: bool
    witness: object = field(repr=False)  # hemisphere center or CrossingCertificate
    margin: float = 0.0

    @property
    def is_s_vertex(self) -> bool:
        return self.kind in (Kind.S_VERTEX, Kind.STRICT_S_VERTEX)


def h_vertex_test(angle_sum: float, location: str = "interior") -> bool:
    if not angle_sum > 0.0:
        raise ValueError("angle sum must be positive")
    if location == "interior":
        return angle_sum >= 2.0 * math.pi - H_TOL
    if location == "boundary":
        return angle_sum >= math.pi - H_TOL
    raise ValueError("location is 'interior' or 'boundary'")


def classify_vertex(poly: SphericalPolygon, orientation=None) -> VertexClass:
    """Convex / Concave / SVertex / StrictSVertex, with the h-flag from the loop length.

    ``orientation`` is a direction pointing out of the solid at the vertex; a
    link in an open hemisphere is Convex when that hemisphere's center points
    into the solid and Concave otherwise.
    """
    fit = cap_fit(poly.vertices)
    h = h_vertex_test(poly.length, "interior")
    if fit.margin > MARGIN:
        if orientation is None:
            raise OrientationMissingError("an open hemisphere holds the link; orientation is needed")
        side = float(np.dot(fit.center, np.asarray(orientation, float)))
        if side == 0.0:
            raise OrientationMissingError("orientation is tangent to the supporting hemisphere")
        kind = Kind.CONVEX if side < 0.0 else Kind.CONCAVE
        return VertexClass(kind, h, fit.center, fit.margin)
    if fit.margin >= -MARGIN:
        return VertexClass(Kind.S_VERTEX, h, fit.center, fit.margin)
    cert = find_crossing_certificate(poly)
    if cert is None:
        raise VertexClassError("no crossing certificate found for a link outside every closed hemisphere")
    return VertexClass(Kind.STRICT_S_VERTEX, h, cert, fit.margin)


@dataclass(frozen=True)
class TwoConvexity:
    passed: bool
    failing: int | None
    classes: tuple


def two_convexity_decision(links) -> TwoConvexity:
    """Pass iff no boundary vertex link classifies as Concave; otherwise report the first one."""
    out = []
    for i, (poly, orient) in enumerate(links):
        vc = classify_vertex(poly, orient)
        out.append(vc)
        if vc.kind is Kind.CONCAVE:
            return TwoConvexity(False, i, tuple(out))
    return TwoConvexity(True, None, tuple(out))


# ---------------------------------------------------------------- perturbation

def _push(poly: SphericalPolygon, c, step: float) -> SphericalPolygon:
    v = poly.vertices
    if step == 0.0:
        return poly
    contact = np.abs(v @ c) <= 1e-9
    if contact.all():
        # totally geodesic link: tilt the directions alternately off the great circle
        signs = np.where(np.arange(len(v)) % 2 == 0, 1.0, -1.0)
        w = v + step * signs[:, None] * c
    else:
        # move the vertex into the open side; every direction tilts away from c
        w = v - step * c
    return SphericalPolygon.from_directions(w)


def strict_step_max(poly: SphericalPolygon, hi: float = 0.5) -> float:
    """Largest push (bisection, 40 steps) below ``hi`` whose output is still a strict s-vertex link."""
    c = _nonstrict_center(poly)

    def strict(s):
        return cap_fit(_push(poly, c, s).vertices).margin < -MARGIN

    if strict(hi):
        return hi
    lo = hi
    while lo > 1e-8 and not strict(lo):
        lo /= 2.0
    if not strict(lo):
        raise VertexClassError("no push makes this link strict")
    a, b = lo, hi
    for _ in range(BISECT_ITERS):
        mid = 0.5 * (a + b)
        if strict(mid):
            a = mid
        else:
            b = mid
    return a


def _nonstrict_center(poly):
    fit = cap_fit(poly.vertices)
    if not (-MARGIN <= fit.margin <= MARGIN):
        raise VertexClassError("input is not a non-strict s-vertex link")
    return fit.center


def perturb_to_strict(poly: SphericalPolygon, step: float) -> SphericalPolygon:
    """Push a non-strict s-vertex off its closed supporting hemisphere.

    The push is capped at the bisected maximal step, so the result is strict
    for every positive step; step 0 returns the input unchanged.
    """
    c = _nonstrict_center(poly)
    if step < 0.0:
        raise ValueError("step must be non-negative")
    if step == 0.0:
        return poly
    return _push(poly, c, min(step, strict_step_max(poly)))
