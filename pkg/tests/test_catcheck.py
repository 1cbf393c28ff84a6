import math

import numpy as np
import pytest

from mkcat import corpus
from mkcat.catcheck import (
    QuasiParams,
    UnsupportedComplexError,
    ViolationReport,
    cat_inequality_report,
    cat_inequality_sample,
    convexity_check,
    is_quasi_geodesic,
    link_condition,
    recheck,
    shortest_link_loops,
    slimness_report,
    triangle_sides,
    violating_triangle_near,
)
from mkcat.complexcore import build_complex, MetricSimplex
from mkcat.geodesy import GeodesyError, PathPoint, path_through, vertex_point
from mkcat.hypgeom import comparison_triangle, raw_dist, raw_geodesic_point

EQ_ANGLE = math.acos((math.cosh(1) ** 2 - math.cosh(1)) / math.sinh(1) ** 2)


def P(sid, *b):
    return PathPoint(sid, b)


def test_link_condition_seven_passes_six_fails():
    assert link_condition(corpus.cone(7)) is None
    rep = link_condition(corpus.cone(6))
    assert rep.kind == "LinkSystole"
    assert rep.witness["vertex"] == corpus.cone(6).resolve_vertex("c")
    assert len(rep.witness["corners"]) == 6
    assert rep.witness["length"] == pytest.approx(6 * EQ_ANGLE, abs=1e-9)
    assert rep.magnitude == pytest.approx(2 * math.pi - 6 * EQ_ANGLE, abs=1e-9)


def test_boundary_vertices_pass_vacuously():
    cx = corpus.cone(6, closed=False)
    assert shortest_link_loops(cx) == {}
    assert link_condition(cx) is None


def test_exact_flat_cone_point_passes():
    # six flat equilateral triangles: angle sum 2*pi up to rounding
    assert link_condition(corpus.cone(6, kappa=0)) is None


def test_link_condition_rejects_1_complexes():
    with pytest.raises(UnsupportedComplexError):
        link_condition(corpus.tripod())


def test_link_witness_rechecks():
    rep = link_condition(corpus.cone(5))
    assert abs(recheck(corpus.cone(5), rep) - rep.magnitude) <= 1e-12


def test_violation_report_requires_positive_magnitude():
    with pytest.raises(ValueError):
        ViolationReport("CatComparison", {}, 0.0)
    with pytest.raises(ValueError):
        ViolationReport("Other", {}, 1.0)


def test_cat_inside_single_simplex_is_zero():
    cx = corpus.single_triangle(1.5, 1.4, 1.3)
    sides = triangle_sides(cx, P("t0", 0.7, 0.2, 0.1), P("t0", 0.1, 0.8, 0.1), P("t0", 0.2, 0.1, 0.7))
    assert cat_inequality_sample(cx, sides, 2000, seed=1) <= 1e-9


def test_cat_degenerate_triangle_is_exactly_zero():
    cx = corpus.single_triangle()
    a, b, c = P("t0", 1, 0, 0), P("t0", 0.5, 0.5, 0), P("t0", 0, 1, 0)
    sides = (path_through(cx, [a, b]), path_through(cx, [b, c]), path_through(cx, [c, b, a]))
    assert cat_inequality_sample(cx, sides, 500, seed=0) == 0.0


def test_cat_sides_must_close():
    cx = corpus.single_triangle()
    a, b, c = P("t0", 1, 0, 0), P("t0", 0, 1, 0), P("t0", 0, 0, 1)
    sides = (path_through(cx, [a, b]), path_through(cx, [b, c]), path_through(cx, [c, b]))
    with pytest.raises(GeodesyError):
        cat_inequality_sample(cx, sides, 10)


def _cone_triangle(cx):
    sids = sorted(s.id for s in cx.simplices)
    k = len(sids)
    picks = [sids[0], sids[k // 3], sids[2 * k // 3]]
    return triangle_sides(cx, *(P(s, 0.1, 0.45, 0.45) for s in picks))


def test_cat_holds_on_link_passing_cone():
    cx = corpus.cone(7)
    assert cat_inequality_sample(cx, _cone_triangle(cx), 2000, seed=3) <= 1e-7


def test_cat_violated_near_failing_vertex():
    cx = corpus.cone(6)
    rep, corners = violating_triangle_near(cx, "c", n_triangles=10, n_samples=500, seed=0)
    assert rep is not None and rep.magnitude > 1e-4
    assert corners is not None
    assert abs(recheck(cx, rep) - rep.magnitude) <= 1e-12


def test_cat_report_deterministic():
    cx = corpus.cone(5)
    sides = _cone_triangle(cx)
    a = cat_inequality_report(cx, sides, 300, seed=9)
    b = cat_inequality_report(cx, sides, 300, seed=9)
    assert a == b


def test_cat_comparison_oracle_in_model_triangle():
    # independent check of the comparison distance: hyperbolic law of cosines on the model triangle
    p, q, r = (x.coords for x in comparison_triangle(1.2, 0.9, 1.0, -1))
    x = raw_geodesic_point(-1, p, q, 0.3)
    y = raw_geodesic_point(-1, q, r, 0.6)
    dq_x, dq_y = 0.7 * 1.2, 0.6 * 0.9
    angle_q = math.acos((math.cosh(1.2) * math.cosh(0.9) - math.cosh(1.0)) / (math.sinh(1.2) * math.sinh(0.9)))
    expected = math.acosh(math.cosh(dq_x) * math.cosh(dq_y) - math.sinh(dq_x) * math.sinh(dq_y) * math.cos(angle_q))
    assert raw_dist(-1, x, y) == pytest.approx(expected, abs=1e-10)


def test_convexity_identical_geodesics():
    cx = corpus.single_triangle()
    c = path_through(cx, [P("t0", 1, 0, 0), P("t0", 0, 0.5, 0.5)])
    assert convexity_check(cx, c, c) == 0.0


def test_convexity_in_one_simplex():
    cx = corpus.single_triangle(1.5, 1.4, 1.3)
    c1 = path_through(cx, [P("t0", 1, 0, 0), P("t0", 0, 1, 0)])
    c2 = path_through(cx, [P("t0", 0.2, 0.1, 0.7), P("t0", 0.1, 0.3, 0.6)])
    assert convexity_check(cx, c1, c2, 50) <= 1e-9


def test_convexity_on_corpus_cone():
    cx = corpus.cone(7)
    rng = np.random.default_rng(2)
    sids = sorted(s.id for s in cx.simplices)
    worst = 0.0
    for _ in range(8):
        pts = [P(sids[int(rng.integers(7))], *rng.dirichlet([1, 1, 1])) for _ in range(4)]
        c1 = triangle_sides(cx, pts[0], pts[1], pts[2])[0]
        c2 = triangle_sides(cx, pts[2], pts[3], pts[0])[0]
        worst = max(worst, convexity_check(cx, c1, c2, 20))
    assert worst <= 1e-7


def test_slimness_of_tree_is_zero():
    est = slimness_report(corpus.tripod(), n_triples=5, seed=0)
    assert est.delta == pytest.approx(0.0, abs=1e-12)


def _dense_slimness_oracle(a, b, c, n=401):
    p, q, r = (x.coords for x in comparison_triangle(a, b, c, -1))
    t = np.linspace(0, 1, n)
    side = lambda u, w: np.array([raw_geodesic_point(-1, u, w, s) for s in t])
    pq, qr, rp = side(p, q), side(q, r), side(r, p)
    other = np.vstack([qr, rp])
    gaps = []
    for x in pq:
        gaps.append(min(raw_dist(-1, x, y) for y in other))
    return max(gaps)


def test_slimness_large_hyperbolic_triangle():
    cx = corpus.single_triangle(10.0, 10.0, 10.0)
    est = slimness_report(cx, triples=[(P("t0", 1, 0, 0), P("t0", 0, 1, 0), P("t0", 0, 0, 1))], n_points=9)
    oracle = _dense_slimness_oracle(10.0, 10.0, 10.0)
    assert est.delta <= 1.0
    # a sampled lower bound never exceeds the dense estimate (which itself is within sampling error)
    assert est.delta <= oracle + 1e-3
    assert est.delta > 0.5


def test_slimness_grows_on_flat_grid():
    triple = lambda cx: [(P("t0", 1, 0, 0), P("t30", 0, 1, 0), P("t7", 0, 0, 1))]
    small = corpus.square_grid(4, 4, 1.0)
    big = corpus.square_grid(4, 4, 3.0)
    d1 = slimness_report(small, triples=triple(small)).delta
    d3 = slimness_report(big, triples=triple(big)).delta
    assert d3 > d1 > 0
    assert d3 == pytest.approx(3 * d1, rel=1e-3)


def test_slimness_deterministic():
    cx = corpus.cone(7)
    assert slimness_report(cx, 2, seed=5, n_points=3) == slimness_report(cx, 2, seed=5, n_points=3)


def test_straight_geodesic_is_quasi_geodesic():
    cx = corpus.cone(7)
    side = _cone_triangle(cx)[0]
    assert is_quasi_geodesic(side, QuasiParams(1.0, 0.0), 60) is None


def test_backtracking_fails_with_witness():
    cx = corpus.single_triangle()
    a, b = P("t0", 1, 0, 0), P("t0", 0, 1, 0)
    path = path_through(cx, [a, b, a])
    rep = is_quasi_geodesic(path, QuasiParams(1.0, 0.0), 50)
    assert rep is not None and rep.kind == "QuasiGeodesic"
    # the endpoint pair is the worst: d = 0 while |t - t'| = 2
    assert rep.magnitude == pytest.approx(2.0, abs=1e-9)
    assert abs(recheck(cx, rep) - rep.magnitude) <= 1e-12


def test_staircase_is_sqrt2_quasi_geodesic():
    n = 4
    cx = corpus.square_grid(n, n, 1.0)
    pts = []
    for i in range(n):
        sid = f"t{2 * (i * n + i)}"  # lower triangle of square (i, i)
        pts += [vertex_point(cx, sid, f"v{i}_{i}"), vertex_point(cx, sid, f"v{i + 1}_{i}"),
                vertex_point(cx, sid, f"v{i + 1}_{i + 1}")]
    path = path_through(cx, pts)
    assert path.length == pytest.approx(2 * n)
    assert is_quasi_geodesic(path, QuasiParams(math.sqrt(2), 0.0), 200) is None
    # but it is not a geodesic
    assert is_quasi_geodesic(path, QuasiParams(1.0, 0.0), 50) is not None


def test_quasi_params_validated():
    with pytest.raises(ValueError):
        QuasiParams(0.5, 0.0)
    with pytest.raises(ValueError):
        QuasiParams(1.0, -1.0)
