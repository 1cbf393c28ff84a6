import math

import numpy as np
import pytest

from mkcat import corpus
from mkcat.catcheck import link_condition
from mkcat.complexcore import MetricSimplex, NotASurfaceError, build_complex
from mkcat.geodesy import (
    DisconnectedError,
    HMapInvariantError,
    HMapSurface,
    PathPoint,
    SingularSurface,
    build_alpha_net,
    distance,
    gauss_bonnet_audit,
    gauss_bonnet_terms,
    geodesic_candidates,
    h_area_bound_check,
    hausdorff,
    path_through,
    polygon_area_slack,
    realize_h_map,
    shortest_geodesic,
    straighten_path,
    tighten_closed,
    vertex_point,
)
from mkcat.geodesy.paths import point_vector
from mkcat.hypgeom import comparison_triangle, raw_dist

TWO_PI = 2 * math.pi


def vp(cx, name):
    v = cx.resolve_vertex(name)
    sid, lab = cx.vertex_members(v)[0]
    return vertex_point(cx, sid, lab)


def cone_chord(spoke, gamma):
    """Hyperbolic distance between two spoke ends enclosing angle gamma (law of cosines)."""
    return math.acosh(math.cosh(spoke) ** 2 - math.sinh(spoke) ** 2 * math.cos(gamma))


# ---------------------------------------------------------------- straightening


def test_two_sides_straighten_to_third():
    cx = corpus.single_triangle(1.0, 1.1, 0.9)
    A, B, C = (vertex_point(cx, "t0", x) for x in "ABC")
    path = path_through(cx, [A, C, B])
    assert path.length == pytest.approx(1.1 + 1.0)
    g = straighten_path(path)
    assert g.length == pytest.approx(0.9, abs=1e-12)


def test_path_through_big_cone_point_is_geodesic():
    cx = corpus.cone(8, apex_angle=TWO_PI + 0.5)
    c, r0, r4 = vp(cx, "c"), vp(cx, "r0"), vp(cx, "r4")
    path = shortest_geodesic(cx, r0, c).concat(shortest_geodesic(cx, c, r4))
    hist = []
    g = straighten_path(path, history=hist)
    assert g.length == pytest.approx(2.0, abs=1e-12)
    assert len(hist) == 1


def test_path_through_small_cone_point_is_pulled_off():
    cx = corpus.cone(8, apex_angle=TWO_PI - 0.5)
    c, r0, r4 = vp(cx, "c"), vp(cx, "r0"), vp(cx, "r4")
    path = shortest_geodesic(cx, r0, c).concat(shortest_geodesic(cx, c, r4))
    hist = []
    g = straighten_path(path, history=hist)
    # unfold the four triangles on one side: chord with apex angle (2*pi - 0.5)/2
    assert g.length == pytest.approx(cone_chord(1.0, (TWO_PI - 0.5) / 2), abs=1e-10)
    assert g.length < 2.0
    assert all(a >= b - 1e-12 for a, b in zip(hist, hist[1:]))


def test_geodesic_through_vertex_needs_h_vertex():
    rng = np.random.default_rng(5)
    for _ in range(10):
        cx = corpus.heptagonal_disk(rng)
        sids = sorted(s.id for s in cx.simplices)
        p = PathPoint(sids[int(rng.integers(len(sids)))], tuple(rng.dirichlet([1, 1, 1])))
        q = PathPoint(sids[int(rng.integers(len(sids)))], tuple(rng.dirichlet([1, 1, 1])))
        g = shortest_geodesic(cx, p, q)
        for w in g.waypoints[1:-1]:
            if max(w.bary) == 1.0:
                v = cx.vertex_of(w.sid, cx.simplex(w.sid).vertex_labels[w.bary.index(1.0)])
                s = SingularSurface(cx)
                if not s.is_boundary(v):
                    assert s.angle_sum(v) >= TWO_PI - 1e-8


# ---------------------------------------------------------------- shortest geodesics


def test_zero_length_geodesic():
    cx = corpus.cone(7)
    p = PathPoint("t0", (0.2, 0.3, 0.5))
    g = shortest_geodesic(cx, p, p)
    assert g.length == 0.0


def test_geodesic_in_one_simplex_is_model_segment():
    cx = corpus.single_triangle(1.2, 1.0, 0.8)
    p, q = PathPoint("t0", (0.7, 0.2, 0.1)), PathPoint("t0", (0.1, 0.3, 0.6))
    # oracle: place the triangle in the hyperboloid and normalize barycentric combinations
    P = [x.coords for x in comparison_triangle(0.8, 1.2, 1.0, -1)]  # A, B, C with AB, BC, CA

    def embed(b):
        x = sum(bi * Pi for bi, Pi in zip(b, P))
        return x / math.sqrt(-(-x[0] ** 2 + x[1] ** 2 + x[2] ** 2))

    expected = raw_dist(-1, embed(p.bary), embed(q.bary))
    assert distance(cx, p, q) == pytest.approx(expected, abs=1e-12)


def test_symmetric_seeds_around_big_cone_point():
    cx = corpus.cone(8, apex_angle=TWO_PI + 1.0)
    p = PathPoint("t0", (0.2, 0.4, 0.4))
    q = PathPoint("t4", (0.2, 0.4, 0.4))
    search = geodesic_candidates(cx, p, q)
    lengths = sorted(c.length for c in search.candidates)
    # both ways round pass the cone point, so the two best corridors agree
    d_cp = raw_dist(-1, point_vector(cx, p), point_vector(cx, vp(cx, "c")))
    assert lengths[0] == pytest.approx(2 * d_cp, abs=1e-10)
    assert lengths[1] == pytest.approx(lengths[0], abs=1e-10)


def test_disconnected_endpoints():
    s1 = corpus.single_triangle().simplices[0]
    s2 = MetricSimplex("t1", 2, s1.vertex_labels, s1.edge_lengths)
    cx = build_complex(-1, [s1, s2], [])
    with pytest.raises(DisconnectedError):
        shortest_geodesic(cx, PathPoint("t0", (1 / 3, 1 / 3, 1 / 3)), PathPoint("t1", (1 / 3, 1 / 3, 1 / 3)))


def test_seeds_agree_on_link_passing_disks():
    rng = np.random.default_rng(12)
    cx = corpus.heptagonal_disk(rng)
    assert link_condition(cx) is None
    sids = sorted(s.id for s in cx.simplices)
    for _ in range(3):
        p = PathPoint(sids[int(rng.integers(len(sids)))], tuple(rng.dirichlet([1, 1, 1])))
        q = PathPoint(sids[int(rng.integers(len(sids)))], tuple(rng.dirichlet([1, 1, 1])))
        search = geodesic_candidates(cx, p, q)
        best = search.path
        for c in search.candidates:
            if abs(c.length - best.length) < 1e-9:
                assert hausdorff(c, best) <= 1e-7


# ---------------------------------------------------------------- closed geodesics


def grid_point(x, y, columns=4, rows=2):
    """Point of the flat cylinder fixture at planar coordinates (x mod columns, y)."""
    x = x % float(columns)
    i, j = min(int(x), columns - 1), min(int(y), rows - 1)
    u, v = x - i, y - j
    base = 2 * (rows * i + j)
    if u >= v:
        return PathPoint(f"t{base}", (1 - u, u - v, v))
    return PathPoint(f"t{base + 1}", (1 - v, u, v - u))


def _cuts(P, Q):
    ts = {0.0, 1.0}
    for k in range(3):
        for m in range(-2, 7):
            g = [lambda p: p[0] - m, lambda p: p[1] - m, lambda p: p[0] - p[1] - m][k]
            a, b = g(P), g(Q)
            if a * b < 0:
                ts.add(a / (a - b))
    return sorted(ts)


def cylinder_loop(cx, f, n=200):
    xs = np.linspace(0, 4, n + 1)
    G = [(x, f(x)) for x in xs]
    pts = []
    for P, Q in zip(G[:-1], G[1:]):
        for t in _cuts(P, Q)[:-1]:
            pts.append(grid_point(P[0] + t * (Q[0] - P[0]), P[1] + t * (Q[1] - P[1])))
    pts.append(pts[0])
    return path_through(cx, pts)


def test_core_circle_is_already_closed_geodesic():
    cx = corpus.flat_cylinder(4, 2)
    core = cylinder_loop(cx, lambda x: 0.5, 8)
    r = tighten_closed(core)
    assert not r.contracted
    assert r.length == pytest.approx(4.0, abs=1e-12)


def test_wobbly_loop_tightens_to_circumference():
    cx = corpus.flat_cylinder(4, 2)
    wob = cylinder_loop(cx, lambda x: 1.0 + 0.4 * math.sin(1.5 * math.pi * x))
    assert wob.length > 4.5
    hist = []
    r = tighten_closed(wob, history=hist)
    assert abs(r.length - 4.0) <= 1e-6
    assert all(a >= b - 1e-12 for a, b in zip(hist, hist[1:]))


def test_small_loop_contracts():
    cx = corpus.flat_cylinder(4, 2)
    small = path_through(cx, [grid_point(.6, .2), grid_point(.8, .3), grid_point(.7, .5), grid_point(.6, .2)])
    assert tighten_closed(small).contracted


# ---------------------------------------------------------------- nets and h-maps


def test_alpha_net_fan_in_single_simplex():
    cx = corpus.single_triangle(1, 1.1, .9)
    A, B, C = (vertex_point(cx, "t0", x) for x in "ABC")
    net = build_alpha_net(cx, A, path_through(cx, [B, C]), 5)
    s = net.surface.surface
    # rail subdivision points inside one simplex are flat
    assert all(abs(s.angle_sum(v) - TWO_PI) <= 1e-9 for v in s.interior_vertices())
    assert gauss_bonnet_audit(s) <= 1e-9
    assert h_area_bound_check(net.surface) >= -1e-9


def test_alpha_net_ruled_flat_strip():
    g = corpus.square_grid(2, 2)
    alpha = shortest_geodesic(g, vp(g, "v0_0"), vp(g, "v0_2"))
    beta = shortest_geodesic(g, vp(g, "v2_0"), vp(g, "v2_2"))
    net = build_alpha_net(g, alpha, beta, 5)
    s = net.surface.surface
    sums = [s.angle_sum(v) for v in s.interior_vertices()]
    assert sums and max(abs(x - TWO_PI) for x in sums) <= 1e-9
    assert s.area() == pytest.approx(4.0, abs=1e-9)


def test_alpha_net_around_big_cone_point_and_refinement():
    cx = corpus.cone(8, apex_angle=TWO_PI + 1)
    alpha = shortest_geodesic(cx, vp(cx, "r0"), vp(cx, "r1"))
    beta = shortest_geodesic(cx, vp(cx, "r5"), vp(cx, "r4"))
    gaps = []
    for n in (3, 5, 9):
        net = build_alpha_net(cx, alpha, beta, n)
        s = net.surface.surface
        assert all(s.angle_sum(v) >= TWO_PI - 1e-9 for v in s.interior_vertices())
        assert h_area_bound_check(net.surface) >= -1e-9
        gaps.append(net.max_rail_gap())
    assert gaps[0] > gaps[1] > gaps[2]


def test_realized_triangle_is_itself():
    cx = corpus.single_triangle(1, 1.1, .9)
    pts = {x: vertex_point(cx, "t0", x) for x in "ABC"}
    R = realize_h_map([("A", "B", "C")], pts, cx, distinguished="ABC")
    s = R.hmap.surface
    expected = math.pi - sum(cx.corner_angle("t0", x) for x in "ABC")
    assert s.area() == pytest.approx(expected, abs=1e-12)
    # triangle with theta_i = pi - alpha_i: the h-inequality is tight
    assert h_area_bound_check(R.hmap) == pytest.approx(0.0, abs=1e-12)
    assert polygon_area_slack(R.hmap) == pytest.approx(math.pi - expected, abs=1e-12)


def test_realized_cone_quadrilateral_respects_ngon_bound():
    cx = corpus.cone(8, apex_angle=TWO_PI + 1)
    pts = {f"r{i}": vp(cx, f"r{i}") for i in range(0, 8, 2)}
    R = realize_h_map([("r0", "r2", "r4"), ("r0", "r4", "r6")], pts, cx, distinguished=list(pts))
    assert gauss_bonnet_audit(R.hmap.surface) <= 1e-9
    assert h_area_bound_check(R.hmap) >= -1e-9
    assert 0 < R.hmap.surface.area() < 2 * math.pi
    assert polygon_area_slack(R.hmap) >= 1e-6


def test_realized_annulus_on_cylinder():
    cx = corpus.flat_cylinder(4, 2)
    pts = {}
    for i in range(3):
        pts[f"a{i}"] = grid_point(4 * i / 3, 0.0)
        pts[f"b{i}"] = grid_point(4 * i / 3 + 0.2, 2.0)
    tris = []
    for i in range(3):
        j = (i + 1) % 3
        tris += [(f"a{i}", f"a{j}", f"b{i}"), (f"b{i}", f"a{j}", f"b{j}")]
    R = realize_h_map(tris, pts, cx)
    s = R.hmap.surface
    assert s.euler_characteristic() == 0
    assert all(s.angle_sum(v) >= TWO_PI - 1e-9 for v in s.interior_vertices())
    assert gauss_bonnet_audit(s) <= 1e-9
    assert s.area() == pytest.approx(8.0, abs=1e-6)


# ---------------------------------------------------------------- Gauss-Bonnet


def test_gauss_bonnet_examples():
    one = SingularSurface(corpus.single_triangle())
    t = gauss_bonnet_terms(one)
    assert (t.chi, t.interior) == (1, 0.0)
    assert t.residual <= 1e-12
    double = SingularSurface(corpus.doubled_triangle())
    t = gauss_bonnet_terms(double)
    assert t.chi == 2 and len(t.non_cat) == 3
    assert t.residual <= 1e-9
    torus = SingularSurface(corpus.flat_torus7())
    assert gauss_bonnet_audit(torus) <= 1e-9


def test_gauss_bonnet_random_surfaces():
    rng = np.random.default_rng(1)
    for kind in ("octahedron", "torus", "disk", "strip", "annulus") * 4:
        assert gauss_bonnet_audit(SingularSurface(corpus.random_closed_surface(rng, kind))) <= 1e-9


def test_non_surface_rejected():
    with pytest.raises(NotASurfaceError):
        SingularSurface(corpus.tripod())


def test_hmap_invariants_enforced():
    # cone with angle below 2*pi at the center is not an h-map
    with pytest.raises(HMapInvariantError):
        HMapSurface(SingularSurface(corpus.cone(6)), ())
    with pytest.raises(HMapInvariantError):
        HMapSurface(SingularSurface(corpus.cone(7)), ("c",))


def test_ngon_area_bound():
    for n in range(3, 9):
        # regular hyperbolic n-gon fanned from its center with a 2*pi cone there
        cx = corpus.cone(n, apex_angle=TWO_PI, spokes=[1.5] * n)
        h = HMapSurface(SingularSurface(cx), tuple(f"r{i}" for i in range(n)))
        assert h_area_bound_check(h) >= -1e-9
        assert polygon_area_slack(h) >= 1e-6
