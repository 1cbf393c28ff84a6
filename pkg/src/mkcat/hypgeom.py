"""Constant-curvature model geometry for kappa in {-1, 0, +1}.

Points live in the quadric models: the hyperboloid <x, x> = -1 (x0 > 0) with the
Minkowski form diag(-1, 1, ..., 1), the unit sphere, and flat R^n.  The Klein
chart is available for the hyperbolic plane but is never the storage format.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MODEL_TOL = 1e-12
DEGENERATE_REL = 1e-14


class GeometryError(ValueError):
    """Base class for geometric input errors."""


class CurvatureMismatchError(GeometryError):
    pass


class AmbiguousGeodesicError(GeometryError):
    pass


class DegenerateTriangleError(GeometryError):
    def __init__(self, message, configuration=None):
        super().__init__(message)
        self.configuration = configuration


class InfeasibleTriangleError(GeometryError):
    pass


class UndefinedAngleError(GeometryError):
    pass


class UnsupportedCurvatureError(GeometryError):
    pass


class DivergentRaysError(GeometryError):
    pass


@dataclass(frozen=True)
class Curvature:
    kappa: int

    def __post_init__(self):
        if self.kappa not in (-1, 0, 1):
            raise GeometryError(f"curvature must be -1, 0 or +1, got {self.kappa!r}")

    @property
    def diameter_bound(self) -> float:
        return math.pi if self.kappa == 1 else math.inf

    @classmethod
    def of(cls, value) -> "Curvature":
        if isinstance(value, Curvature):
            return value
        return cls(int(value))


HYPERBOLIC = Curvature(-1)
FLAT = Curvature(0)
SPHERICAL = Curvature(1)


def mink(x, y):
    """Minkowski bilinear form with signature (-, +, ..., +), batched over the last axis."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1 and y.ndim == 1:
        return float(x[1:] @ y[1:] - x[0] * y[0])
    return np.sum(x[..., 1:] * y[..., 1:], axis=-1) - x[..., 0] * y[..., 0]


def inner(kappa: int, x, y):
    """Ambient form of the quadric model (Minkowski for kappa=-1, Euclidean otherwise)."""
    if kappa == -1:
        return mink(x, y)
    return np.sum(np.asarray(x, float) * np.asarray(y, float), axis=-1)


def normalize_model(kappa: int, x):
    """Project a vector onto the model (renormalization after linear combinations)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        # scalar fast path; this is called in every inner loop
        if kappa == -1:
            q = float(x[0] * x[0] - x[1:] @ x[1:])
            if not (q > 0.0 and x[0] > 0.0):
                raise GeometryError("vector is not timelike future-pointing")
            return x / math.sqrt(q)
        if kappa == 1:
            n = math.sqrt(float(x @ x))
            if n == 0.0:
                raise GeometryError("zero vector cannot be normalized onto the sphere")
            return x / n
        return x
    if kappa == -1:
        q = -mink(x, x)
        if np.any(q <= 0) or np.any(x[..., 0] <= 0):
            raise GeometryError("vector is not timelike future-pointing")
        return x / np.sqrt(q)[..., None] if x.ndim > 1 else x / math.sqrt(q)
    if kappa == 1:
        n = np.linalg.norm(x, axis=-1)
        if np.any(n == 0):
            raise GeometryError("zero vector cannot be normalized onto the sphere")
        return x / n[..., None] if x.ndim > 1 else x / n
    return x


def model_residual(kappa: int, x) -> float:
    x = np.asarray(x, dtype=float)
    if kappa == -1:
        return abs(float(mink(x, x)) + 1.0) / max(1.0, float(x[0]) ** 2)
    if kappa == 1:
        return abs(float(np.dot(x, x)) - 1.0)
    return 0.0


@dataclass(frozen=True)
class ModelPoint:
    curvature: Curvature
    coords: np.ndarray = field(compare=False)

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        if c.ndim != 1 or c.size == 0 or not np.all(np.isfinite(c)):
            raise GeometryError("coordinates must be a finite vector")
        k = self.curvature.kappa
        if k == -1 and c[0] <= 0:
            raise GeometryError("hyperboloid point must have x0 > 0")
        if model_residual(k, c) > MODEL_TOL:
            raise GeometryError(f"point violates the model constraint (residual {model_residual(k, c):.3g})")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def dim(self) -> int:
        return self.coords.size - (0 if self.curvature.kappa == 0 else 1)

    def __eq__(self, other):
        return (isinstance(other, ModelPoint) and self.curvature == other.curvature
                and np.array_equal(self.coords, other.coords))

    def __hash__(self):
        return hash((self.curvature.kappa, self.coords.tobytes()))


def model_point(kappa, coords) -> ModelPoint:
    """Build a ModelPoint, renormalizing onto the quadric first."""
    k = Curvature.of(kappa)
    return ModelPoint(k, normalize_model(k.kappa, np.asarray(coords, dtype=float)))


def basepoint(kappa: int, n: int = 2) -> np.ndarray:
    if kappa == 0:
        return np.zeros(n)
    e = np.zeros(n + 1)
    e[0] = 1.0
    return e


def hyperbolic_from_klein(k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    r2 = np.sum(k * k, axis=-1)
    if np.any(r2 >= 1.0):
        raise GeometryError("Klein coordinates must lie in the open unit disk")
    s = 1.0 / np.sqrt(1.0 - r2)
    return np.concatenate([np.atleast_1d(s)[..., None], k * np.atleast_1d(s)[..., None]], axis=-1).reshape(
        k.shape[:-1] + (k.shape[-1] + 1,))


def klein_from_hyperbolic(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[..., 1:] / x[..., :1]


def raw_dist(kappa: int, p, q) -> float:
    """Distance between raw model vectors, using cancellation-free formulas."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    d = p - q
    if kappa == -1:
        m = float(mink(d, d))
        return 2.0 * math.asinh(math.sqrt(max(m, 0.0)) / 2.0)
    if kappa == 1:
        return 2.0 * math.atan2(float(np.linalg.norm(d)), float(np.linalg.norm(p + q)))
    return float(np.linalg.norm(d))


def _check_pair(p: ModelPoint, q: ModelPoint):
    if p.curvature != q.curvature:
        raise CurvatureMismatchError("points carry different curvatures")
    if p.coords.shape != q.coords.shape:
        raise CurvatureMismatchError("points have different dimensions")


def dist(p: ModelPoint, q: ModelPoint) -> float:
    _check_pair(p, q)
    return raw_dist(p.curvature.kappa, p.coords, q.coords)


def raw_geodesic_point(kappa: int, p, q, t: float):
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if t == 0.0:
        return p.copy()
    if t == 1.0:
        return q.copy()
    if kappa == 0:
        return (1.0 - t) * p + t * q
    d = raw_dist(kappa, p, q)
    if d == 0.0:
        return p.copy()
    if kappa == 1:
        if np.linalg.norm(p + q) < 1e-12:
            raise AmbiguousGeodesicError("antipodal points have no unique minor arc")
        s = math.sin(d)
        x = (math.sin((1 - t) * d) / s) * p + (math.sin(t * d) / s) * q
    else:
        s = math.sinh(d)
        x = (math.sinh((1 - t) * d) / s) * p + (math.sinh(t * d) / s) * q
    return normalize_model(kappa, x)


def raw_segment_distance(kappa: int, x, a, b) -> float:
    """Distance from x to the geodesic segment [a, b] (2-dimensional models)."""
    x, a, b = (np.asarray(v, dtype=float) for v in (x, a, b))
    ends = min(raw_dist(kappa, x, a), raw_dist(kappa, x, b))
    if raw_dist(kappa, a, b) == 0.0:
        return ends
    if kappa == 0:
        d = b - a
        t = float(np.dot(x - a, d) / np.dot(d, d))
        if 0.0 <= t <= 1.0:
            return min(ends, float(np.linalg.norm(x - a - t * d)))
        return ends
    n = np.cross(a, b)
    if kappa == -1:
        n[0] = -n[0]
    n = n / math.sqrt(float(inner(kappa, n, n)))
    s = float(inner(kappa, x, n))
    foot = x - s * n
    ab = np.linalg.lstsq(np.stack([a, b], axis=1), foot, rcond=None)[0]
    if ab[0] < 0.0 or ab[1] < 0.0:
        return ends
    d = math.asinh(abs(s)) if kappa == -1 else math.asin(min(1.0, abs(s)))
    return min(ends, d)


def raw_dists(kappa: int, P, q) -> np.ndarray:
    """Distances from each row of P to q (same formulas as raw_dist)."""
    P = np.atleast_2d(np.asarray(P, dtype=float))
    d = P - np.asarray(q, dtype=float)
    if kappa == -1:
        return 2.0 * np.arcsinh(np.sqrt(np.maximum(mink(d, d), 0.0)) / 2.0)
    if kappa == 1:
        return 2.0 * np.arctan2(np.linalg.norm(d, axis=-1), np.linalg.norm(P + q, axis=-1))
    return np.linalg.norm(d, axis=-1)


def raw_segment_distances(kappa: int, X, a, b) -> np.ndarray:
    """Batched raw_segment_distance over the rows of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    ends = np.minimum(raw_dists(kappa, X, a), raw_dists(kappa, X, b))
    if raw_dist(kappa, a, b) == 0.0:
        return ends
    if kappa == 0:
        d = b - a
        t = (X - a) @ d / float(np.dot(d, d))
        perp = np.linalg.norm(X - a - t[:, None] * d, axis=-1)
        return np.where((t >= 0.0) & (t <= 1.0), np.minimum(ends, perp), ends)
    n = np.cross(a, b)
    if kappa == -1:
        n[0] = -n[0]
    n = n / math.sqrt(float(inner(kappa, n, n)))
    s = inner(kappa, X, n)
    foot = X - s[:, None] * n
    ab = np.linalg.lstsq(np.stack([a, b], axis=1), foot.T, rcond=None)[0]
    inside = (ab[0] >= 0.0) & (ab[1] >= 0.0)
    perp = np.arcsinh(np.abs(s)) if kappa == -1 else np.arcsin(np.minimum(1.0, np.abs(s)))
    return np.where(inside, np.minimum(ends, perp), ends)


def raw_geodesic_points(kappa: int, p, q, t) -> np.ndarray:
    """Points of the segment [p, q] at the parameters t (rows)."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    t = np.asarray(t, dtype=float)[:, None]
    if kappa == 0:
        return (1.0 - t) * p + t * q
    d = raw_dist(kappa, p, q)
    if d == 0.0:
        return np.repeat(p[None, :], len(t), axis=0)
    f = np.sin if kappa == 1 else np.sinh
    x = (f((1.0 - t) * d) * p + f(t * d) * q) / f(d)
    return normalize_model(kappa, x)


def geodesic_point(p: ModelPoint, q: ModelPoint, t: float) -> ModelPoint:
    _check_pair(p, q)
    if not 0.0 <= t <= 1.0:
        raise GeometryError("geodesic parameter must lie in [0, 1]")
    return ModelPoint(p.curvature, raw_geodesic_point(p.curvature.kappa, p.coords, q.coords, t))


@dataclass(frozen=True)
class GeodesicSegment:
    start: ModelPoint
    end: ModelPoint

    def __post_init__(self):
        _check_pair(self.start, self.end)
        if self.start.curvature.kappa == 1 and np.linalg.norm(self.start.coords + self.end.coords) < 1e-12:
            raise AmbiguousGeodesicError("antipodal endpoints")

    @property
    def length(self) -> float:
        return dist(self.start, self.end)

    def point(self, t: float) -> ModelPoint:
        return geodesic_point(self.start, self.end, t)


def tangent_toward(kappa: int, v, a):
    """Unnormalized initial tangent at v of the geodesic toward a."""
    v = np.asarray(v, dtype=float)
    a = np.asarray(a, dtype=float)
    if kappa == -1:
        return a + mink(a, v) * v
    if kappa == 1:
        return a - np.dot(a, v) * v
    return a - v


def raw_angle(kappa: int, v, a, b) -> float:
    """Angle at v between the geodesics toward a and toward b."""
    ua = tangent_toward(kappa, v, a)
    ub = tangent_toward(kappa, v, b)
    g_ab = float(inner(kappa, ua, ub))
    g_aa = float(inner(kappa, ua, ua))
    g_bb = float(inner(kappa, ub, ub))
    if g_aa <= 0 or g_bb <= 0:
        raise UndefinedAngleError("angle at a coincident endpoint is undefined")
    # det(v, ua, ub) is the tangent-plane area form in all three models; unlike
    # sqrt(g_aa g_bb - g_ab^2) it keeps full precision for nearly parallel tangents
    if len(ua) == 2:
        cross = abs(float(ua[0] * ub[1] - ua[1] * ub[0]))
    else:
        cross = abs(float(np.dot(np.asarray(v, dtype=float), np.cross(ua, ub))))
    return math.atan2(cross, g_ab)


@dataclass(frozen=True)
class TriangleSides:
    a: float
    b: float
    c: float
    curvature: Curvature = HYPERBOLIC

    def __post_init__(self):
        object.__setattr__(self, "curvature", Curvature.of(self.curvature))
        s = (self.a, self.b, self.c)
        if not all(math.isfinite(x) and x > 0 for x in s):
            raise GeometryError("side lengths must be finite and positive")
        lo = max(s) - (sum(s) - max(s))
        if lo > DEGENERATE_REL * sum(s):
            raise GeometryError("side lengths violate the triangle inequality")
        if self.curvature.kappa == 1 and sum(s) >= 2 * math.pi:
            raise InfeasibleTriangleError("spherical triangle perimeter must be < 2*pi")


def _sfun(kappa: int):
    return {-1: math.sinh, 0: (lambda x: x), 1: math.sin}[kappa]


def _half_angle(kappa: int, a: float, b: float, c: float) -> float:
    """Angle opposite side a, from the half-angle tangent formula."""
    S = _sfun(kappa)
    s = 0.5 * (a + b + c)
    sa, sb, sc = max(s - a, 0.0), max(s - b, 0.0), max(s - c, 0.0)
    num = S(sb) * S(sc)
    den = S(s) * S(sa)
    return 2.0 * math.atan2(math.sqrt(max(num, 0.0)), math.sqrt(max(den, 0.0)))


def _degenerate_configuration(a: float, b: float, c: float):
    s = 0.5 * (a + b + c)
    gaps = {"A": s - a, "B": s - b, "C": s - c}
    between = min(gaps, key=gaps.get)
    if gaps[between] > DEGENERATE_REL * s:
        return None
    return {"collinear": True, "between_vertex": between, "sides": (a, b, c)}


def angles_allow_degenerate(kappa: int, a: float, b: float, c: float):
    """Angles opposite (a, b, c); tight triangles give the collinear angles 0 and pi."""
    if min(a, b, c) <= 0:
        raise UndefinedAngleError("zero-length side")
    return (_half_angle(kappa, a, b, c), _half_angle(kappa, b, c, a), _half_angle(kappa, c, a, b))


def triangle_angles_from_sides(sides: TriangleSides):
    conf = _degenerate_configuration(sides.a, sides.b, sides.c)
    if conf is not None:
        raise DegenerateTriangleError(
            f"degenerate triangle: vertex {conf['between_vertex']} lies on the opposite side", conf)
    return angles_allow_degenerate(sides.curvature.kappa, sides.a, sides.b, sides.c)


def third_side(kappa: int, a: float, b: float, gamma: float) -> float:
    """Side opposite the angle gamma enclosed by sides a and b (law of cosines)."""
    if kappa == 0:
        return math.sqrt(max(a * a + b * b - 2 * a * b * math.cos(gamma), 0.0))
    if kappa == -1:
        # cosh c - 1 written without cancellation
        v = 2 * math.sinh((a - b) / 2) ** 2 + math.sinh(a) * math.sinh(b) * (1 - math.cos(gamma))
        return 2 * math.asinh(math.sqrt(max(v, 0.0) / 2))
    v = 2 * math.sin((a - b) / 2) ** 2 + math.sin(a) * math.sin(b) * (1 - math.cos(gamma))
    return 2 * math.asin(min(math.sqrt(max(v, 0.0) / 2), 1.0))


def triangle_area(sides: TriangleSides) -> float:
    if sides.curvature.kappa != -1:
        raise UnsupportedCurvatureError("area is only provided for kappa = -1")
    al, be, ga = triangle_angles_from_sides(sides)
    return max(math.pi - (al + be + ga), 0.0)


def raw_comparison_triangle(kappa: int, d_pq: float, d_qr: float, d_rp: float):
    """Place a triangle with the first vertex at the basepoint and the second on the first axis."""
    if min(d_pq, d_qr, d_rp) < 0:
        raise GeometryError("distances must be non-negative")
    if max(d_pq, d_qr, d_rp) - (d_pq + d_qr + d_rp - max(d_pq, d_qr, d_rp)) > DEGENERATE_REL * (d_pq + d_qr + d_rp) + 1e-300:
        raise GeometryError("distances violate the triangle inequality")
    if kappa == 1 and d_pq + d_qr + d_rp >= 2 * math.pi:
        raise InfeasibleTriangleError("spherical comparison needs perimeter < 2*pi")
    if d_pq == 0 and d_rp == 0:
        alpha = 0.0
    elif d_pq == 0 or d_rp == 0:
        alpha = 0.0
    else:
        alpha = _half_angle(kappa, d_qr, d_pq, d_rp)
    if kappa == 0:
        p = np.zeros(2)
        q = np.array([d_pq, 0.0])
        r = np.array([d_rp * math.cos(alpha), d_rp * math.sin(alpha)])
    elif kappa == -1:
        p = np.array([1.0, 0.0, 0.0])
        q = np.array([math.cosh(d_pq), math.sinh(d_pq), 0.0])
        r = np.array([math.cosh(d_rp), math.sinh(d_rp) * math.cos(alpha), math.sinh(d_rp) * math.sin(alpha)])
    else:
        p = np.array([1.0, 0.0, 0.0])
        q = np.array([math.cos(d_pq), math.sin(d_pq), 0.0])
        r = np.array([math.cos(d_rp), math.sin(d_rp) * math.cos(alpha), math.sin(d_rp) * math.sin(alpha)])
    return p, q, r


def comparison_triangle(d_pq: float, d_qr: float, d_rp: float, target) -> tuple:
    k = Curvature.of(target)
    p, q, r = raw_comparison_triangle(k.kappa, d_pq, d_qr, d_rp)
    return tuple(ModelPoint(k, x) for x in (p, q, r))


def comparison_angle(d_pq: float, d_pr: float, d_qr: float) -> float:
    """Euclidean comparison angle at p between q and r."""
    if d_pq <= 0 or d_pr <= 0:
        raise UndefinedAngleError("comparison angle needs d(p,q) > 0 and d(p,r) > 0")
    if max(d_pq, d_pr, d_qr) - (d_pq + d_pr + d_qr - max(d_pq, d_pr, d_qr)) > DEGENERATE_REL * (d_pq + d_pr + d_qr):
        raise GeometryError("distances violate the triangle inequality")
    return _half_angle(0, d_qr, d_pq, d_pr)


@dataclass(frozen=True)
class GeodesicRay:
    """Unit-speed hyperbolic ray from a base point with a tangent direction."""
    base: ModelPoint
    direction: np.ndarray = field(compare=False)

    def __post_init__(self):
        if self.base.curvature.kappa != -1:
            raise UnsupportedCurvatureError("rays are only supported in the hyperbolic model")
        u = np.asarray(self.direction, dtype=float)
        u = u + mink(u, self.base.coords) * self.base.coords
        n = float(mink(u, u))
        if n <= 0:
            raise GeometryError("ray direction must be a nonzero tangent vector")
        u = u / math.sqrt(n)
        u.setflags(write=False)
        object.__setattr__(self, "direction", u)

    def at(self, t: float) -> np.ndarray:
        return math.cosh(t) * self.base.coords + math.sinh(t) * self.direction

    @property
    def ideal_point(self) -> np.ndarray:
        """Limit point on the Klein boundary circle."""
        w = self.base.coords + self.direction
        return w[1:] / w[0]


def asymptotic_ray_gap(ray1: GeodesicRay, ray2: GeodesicRay, t: float) -> float:
    """Distance between the rays at time t, with the second ray re-parameterized by its horocycle offset.

    The offset aligns both rays on a common horocycle family centered at the shared ideal point,
    which makes the gap non-increasing and exponentially small.
    """
    if t < 0:
        raise GeometryError("t must be non-negative")
    if np.linalg.norm(ray1.ideal_point - ray2.ideal_point) > 1e-9:
        raise DivergentRaysError("rays do not share an ideal endpoint")
    null = ray1.base.coords + ray1.direction
    shift = math.log(-float(mink(ray2.base.coords, null)))
    # ray2 is extended backwards along its geodesic when the offset is negative
    return raw_dist(-1, ray1.at(t), ray2.at(t + shift))
