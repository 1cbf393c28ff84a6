import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mkcat.hypgeom import (
    AmbiguousGeodesicError,
    Curvature,
    DegenerateTriangleError,
    DivergentRaysError,
    GeodesicRay,
    GeometryError,
    InfeasibleTriangleError,
    TriangleSides,
    UndefinedAngleError,
    UnsupportedCurvatureError,
    asymptotic_ray_gap,
    comparison_angle,
    comparison_triangle,
    dist,
    geodesic_point,
    hyperbolic_from_klein,
    klein_from_hyperbolic,
    mink,
    model_point,
    model_residual,
    raw_angle,
    raw_dist,
    raw_dists,
    raw_geodesic_point,
    raw_geodesic_points,
    raw_segment_distance,
    raw_segment_distances,
    triangle_angles_from_sides,
    triangle_area,
)


def random_point(rng, kappa):
    if kappa == -1:
        v = rng.normal(size=2) * rng.uniform(0, 2)
        return model_point(-1, [math.sqrt(1 + v @ v), *v])
    if kappa == 1:
        return model_point(1, rng.normal(size=3))
    return model_point(0, rng.normal(size=2))


def test_curvature_diameter_bound():
    assert Curvature(1).diameter_bound == math.pi
    assert Curvature(-1).diameter_bound == math.inf
    with pytest.raises(GeometryError):
        Curvature(2)


def test_dist_examples():
    p = model_point(-1, [1, 0, 0])
    q = model_point(-1, [math.cosh(1), math.sinh(1), 0])
    assert dist(p, q) == pytest.approx(1.0, abs=1e-12)
    assert dist(p, p) == 0.0
    n, e = model_point(1, [0, 0, 1]), model_point(1, [1, 0, 0])
    assert dist(n, e) == pytest.approx(math.pi / 2, abs=1e-12)


def test_dist_rejects_mixed_curvature():
    with pytest.raises(GeometryError):
        dist(model_point(-1, [1, 0, 0]), model_point(1, [1, 0, 0]))


@pytest.mark.parametrize("kappa", [-1, 0, 1])
def test_metric_axioms_random_triples(kappa):
    rng = np.random.default_rng(kappa + 5)
    for _ in range(1000):
        a, b, c = (random_point(rng, kappa) for _ in range(3))
        assert dist(a, b) == dist(b, a)
        assert dist(a, c) <= dist(a, b) + dist(b, c) + 1e-10
        if kappa == 1:
            assert 0.0 <= dist(a, b) <= math.pi


def test_geodesic_point_endpoints_and_midpoint():
    p = model_point(0, [0, 0])
    q = model_point(0, [2, 0])
    assert np.allclose(geodesic_point(p, q, 0.5).coords, [1, 0])
    h0 = model_point(-1, [1, 0, 0])
    h1 = model_point(-1, [math.cosh(1), math.sinh(1), 0])
    assert geodesic_point(h0, h1, 0.0) == h0
    assert np.allclose(geodesic_point(h0, h1, 1.0).coords, h1.coords, atol=1e-12)
    m = geodesic_point(h0, h1, 0.5)
    # oracle: bisection on the unit-speed parameterization (cosh s, sinh s, 0)
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        x = np.array([math.cosh(mid), math.sinh(mid), 0.0])
        if raw_dist(-1, h0.coords, x) < raw_dist(-1, x, h1.coords):
            lo = mid
        else:
            hi = mid
    assert np.allclose(m.coords, [math.cosh(lo), math.sinh(lo), 0], atol=1e-10)
    assert dist(h0, m) == pytest.approx(0.5, abs=1e-10)


def test_geodesic_point_antipodal_error():
    with pytest.raises(AmbiguousGeodesicError):
        geodesic_point(model_point(1, [1, 0, 0]), model_point(1, [-1, 0, 0]), 0.5)


@pytest.mark.parametrize("kappa", [-1, 0, 1])
def test_geodesic_point_distance_fraction(kappa):
    rng = np.random.default_rng(11)
    for _ in range(200):
        p, q = random_point(rng, kappa), random_point(rng, kappa)
        t = rng.uniform()
        x = geodesic_point(p, q, t)
        assert dist(p, x) == pytest.approx(t * dist(p, q), abs=1e-10)
        assert model_residual(kappa, x.coords) < 1e-12


def test_right_triangle_angle():
    al, be, ga = triangle_angles_from_sides(TriangleSides(3, 4, 5, 0))
    assert ga == pytest.approx(math.pi / 2, abs=1e-12)
    assert al + be + ga == pytest.approx(math.pi, abs=1e-10)


def test_equilateral_hyperbolic_angle():
    al, be, ga = triangle_angles_from_sides(TriangleSides(1, 1, 1, -1))
    # oracle: hyperbolic law of cosines evaluated directly
    direct = math.acos((math.cosh(1) ** 2 - math.cosh(1)) / math.sinh(1) ** 2)
    assert al == pytest.approx(direct, abs=1e-12)
    assert al == pytest.approx(0.9188, abs=1e-4)
    # cross-check: embed three points and measure tangent angles
    p, q, r = comparison_triangle(1, 1, 1, -1)
    assert raw_angle(-1, p.coords, q.coords, r.coords) == pytest.approx(al, abs=1e-10)


def test_small_triangle_tends_to_euclidean():
    angles = triangle_angles_from_sides(TriangleSides(1e-4, 1e-4, 1e-4, -1))
    assert np.allclose(angles, math.pi / 3, atol=1e-6)


def test_degenerate_triangle_reported():
    with pytest.raises(DegenerateTriangleError) as err:
        triangle_angles_from_sides(TriangleSides(1, 1, 2, 0))
    assert err.value.configuration["between_vertex"] == "C"


@pytest.mark.parametrize("kappa", [-1, 0, 1])
def test_law_of_cosines_matches_tangent_angles(kappa):
    rng = np.random.default_rng(3)
    for _ in range(300):
        p, q, r = (random_point(rng, kappa) for _ in range(3))
        a, b, c = dist(q, r), dist(r, p), dist(p, q)
        if min(a, b, c) < 1e-3 or max(a, b, c) > (a + b + c) / 2 - 1e-3:
            continue
        if kappa == 1 and a + b + c >= 2 * math.pi - 1e-3:
            continue
        al, be, ga = triangle_angles_from_sides(TriangleSides(a, b, c, kappa))
        assert al == pytest.approx(raw_angle(kappa, p.coords, q.coords, r.coords), abs=1e-8)
        assert be == pytest.approx(raw_angle(kappa, q.coords, r.coords, p.coords), abs=1e-8)


def test_comparison_triangle_examples():
    p, q, r = comparison_triangle(1, 1, 2, 0)
    assert np.allclose([p.coords, q.coords, r.coords], [[0, 0], [1, 0], [2, 0]], atol=1e-12)
    p, q, r = comparison_triangle(3, 5, 4, 0)
    assert np.allclose([p.coords, q.coords, r.coords], [[0, 0], [3, 0], [0, 4]], atol=1e-12)
    p, q, r = comparison_triangle(1, 1, 1, 1)
    for a, b in ((p, q), (q, r), (r, p)):
        # spherical law of cosines oracle: cos d = <a, b>
        assert math.acos(np.clip(a.coords @ b.coords, -1, 1)) == pytest.approx(1.0, abs=1e-10)


def test_comparison_triangle_spherical_perimeter():
    with pytest.raises(InfeasibleTriangleError):
        comparison_triangle(2.5, 2.5, 2.5, 1)


@given(st.floats(0.05, 3.0), st.floats(0.05, 3.0), st.floats(0.0, 1.0), st.sampled_from([-1, 0, 1]))
@settings(max_examples=200, deadline=None)
def test_comparison_triangle_reproduces_distances(a, b, f, kappa):
    lo, hi = abs(a - b), a + b
    c = lo + (hi - lo) * (0.02 + 0.96 * f)
    if kappa == 1 and a + b + c >= 2 * math.pi - 1e-6:
        return
    p, q, r = comparison_triangle(a, c, b, kappa)
    assert dist(p, q) == pytest.approx(a, abs=1e-10)
    assert dist(q, r) == pytest.approx(c, abs=1e-10)
    assert dist(r, p) == pytest.approx(b, abs=1e-10)


def test_comparison_angle_examples():
    assert comparison_angle(1, 1, 1) == pytest.approx(math.pi / 3)
    assert comparison_angle(1, 1, 2) == pytest.approx(math.pi)
    assert comparison_angle(3, 4, 5) == pytest.approx(math.pi / 2)
    with pytest.raises(UndefinedAngleError):
        comparison_angle(0, 1, 1)


def test_triangle_area_examples():
    al = triangle_angles_from_sides(TriangleSides(1, 1, 1, -1))[0]
    assert triangle_area(TriangleSides(1, 1, 1, -1)) == pytest.approx(math.pi - 3 * al, abs=1e-12)
    assert triangle_area(TriangleSides(1, 1, 1, -1)) == pytest.approx(0.3852, abs=1e-4)
    assert triangle_area(TriangleSides(1, 1, 1.9999999, -1)) < 1e-3
    with pytest.raises(UnsupportedCurvatureError):
        triangle_area(TriangleSides(1, 1, 1, 0))


def test_random_hyperbolic_triangles_have_defect_area():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        p, q, r = (random_point(rng, -1) for _ in range(3))
        a, b, c = dist(q, r), dist(r, p), dist(p, q)
        if max(a, b, c) > (a + b + c) / 2 - 1e-6:
            continue
        s = TriangleSides(a, b, c, -1)
        angles = triangle_angles_from_sides(s)
        assert sum(angles) < math.pi
        assert triangle_area(s) == pytest.approx(math.pi - sum(angles), abs=1e-10)
        assert triangle_area(s) < math.pi


def test_midpoint_contraction_in_hyperbolic_plane():
    rng = np.random.default_rng(9)
    for _ in range(1000):
        p, q, r = (random_point(rng, -1) for _ in range(3))
        a, b, c = dist(p, q), dist(q, r), dist(r, p)
        if max(a, b, c) > (a + b + c) / 2 - 1e-9:
            continue
        m1, m2 = geodesic_point(p, q, 0.5), geodesic_point(p, r, 0.5)
        P, Q, R = comparison_triangle(a, b, c, 0)
        mb1, mb2 = geodesic_point(P, Q, 0.5), geodesic_point(P, R, 0.5)
        assert dist(m1, m2) <= dist(mb1, mb2) + 1e-10


def test_klein_round_trip():
    rng = np.random.default_rng(1)
    k = rng.uniform(-0.7, 0.7, size=(50, 2))
    X = hyperbolic_from_klein(k)
    assert np.allclose(mink(X, X), -1.0, atol=1e-12)
    assert np.allclose(klein_from_hyperbolic(X), k, atol=1e-14)


def _ray_to(base_klein, ideal):
    """Ray from a base point toward an ideal point (both in Klein coordinates)."""
    b = hyperbolic_from_klein(np.asarray(base_klein))
    null = np.array([1.0, *ideal])
    return GeodesicRay(model_point(-1, b), null)


def test_asymptotic_rays_identical_and_decreasing():
    r1 = _ray_to([0.1, 0.0], [1.0, 0.0])
    assert asymptotic_ray_gap(r1, r1, 3.0) == pytest.approx(0.0, abs=1e-12)
    r2 = _ray_to([-0.2, 0.5], [1.0, 0.0])
    g = [asymptotic_ray_gap(r1, r2, t) for t in (0.0, 5.0, 10.0)]
    assert g[0] > g[1] > g[2]
    assert g[2] < g[1] / 2
    t1, t2 = 1.0, 4.0
    assert asymptotic_ray_gap(r1, r2, (t1 + t2) / 2) <= 0.5 * (
        asymptotic_ray_gap(r1, r2, t1) + asymptotic_ray_gap(r1, r2, t2)) + 1e-12


def test_divergent_rays_rejected():
    with pytest.raises(DivergentRaysError):
        asymptotic_ray_gap(_ray_to([0, 0], [1, 0]), _ray_to([0, 0], [0, 1]), 1.0)


@pytest.mark.parametrize("kappa", [-1, 0, 1])
def test_batched_helpers_match_scalar_ones(kappa):
    rng = np.random.default_rng(kappa + 10)
    X = np.array([random_point(rng, kappa).coords for _ in range(40)])
    a, b = random_point(rng, kappa).coords, random_point(rng, kappa).coords
    d = raw_dists(kappa, X, a)
    s = raw_segment_distances(kappa, X, a, b)
    for i, x in enumerate(X):
        assert d[i] == pytest.approx(raw_dist(kappa, x, a), abs=1e-12)
        assert s[i] == pytest.approx(raw_segment_distance(kappa, x, a, b), abs=1e-12)
    t = np.linspace(0.0, 1.0, 7)
    G = raw_geodesic_points(kappa, a, b, t)
    for ti, g in zip(t, G):
        assert np.allclose(g, raw_geodesic_point(kappa, a, b, float(ti)), atol=1e-12)


def test_segment_distance_brute_force():
    # densely sampled segment as an independent oracle
    rng = np.random.default_rng(4)
    a, b = random_point(rng, -1).coords, random_point(rng, -1).coords
    X = np.array([random_point(rng, -1).coords for _ in range(30)])
    dense = raw_geodesic_points(-1, a, b, np.linspace(0.0, 1.0, 20001))
    brute = np.array([raw_dists(-1, dense, x).min() for x in X])
    got = raw_segment_distances(-1, X, a, b)
    assert np.all(got <= brute + 1e-12)
    assert np.all(brute - got <= 1e-3 * raw_dist(-1, a, b) / 2)
