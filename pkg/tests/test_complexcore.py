import math

import numpy as np
import pytest

from mkcat import corpus
from mkcat.complexcore import (
    ComplexValidationError,
    Gluing,
    MetricSimplex,
    NotASurfaceError,
    VertexNotFoundError,
    build_complex,
    euler_characteristic,
    total_area,
    vertex_link,
)
from mkcat.hypgeom import TriangleSides, triangle_angles_from_sides

EQ_ANGLE = math.acos((math.cosh(1) ** 2 - math.cosh(1)) / math.sinh(1) ** 2)
EQ_AREA = math.pi - 3 * EQ_ANGLE


def tri(sid, labels=("A", "B", "C"), lengths=(1.0, 1.0, 1.0)):
    a, b, c = labels
    return MetricSimplex(sid, 2, labels, {(b, c): lengths[0], (a, c): lengths[1], (a, b): lengths[2]})


def test_single_triangle_has_three_vertices():
    cx = build_complex(-1, [tri("t0")], [])
    assert len(cx.vertices()) == 3
    assert len(cx.edges()) == 3


def test_two_triangles_share_an_edge():
    t0, t1 = tri("t0"), tri("t1", ("A", "B", "D"))
    face0 = t0.face_index(("A", "B"))
    face1 = t1.face_index(("A", "B"))
    cx = build_complex(-1, [t0, t1], [Gluing(("t0", face0), ("t1", face1), {"A": "A", "B": "B"})])
    assert len(cx.vertices()) == 4
    assert len(cx.edges()) == 5


def test_non_isometric_gluing_rejected():
    t0, t1 = tri("t0"), tri("t1", lengths=(1.0, 1.0, 1.1))
    f = t0.face_index(("A", "B"))
    with pytest.raises(ComplexValidationError) as err:
        build_complex(-1, [t0, t1], [Gluing(("t0", f), ("t1", f), {"A": "A", "B": "B"})])
    kinds = [v.kind for v in err.value.violations]
    assert kinds == ["non-isometric-gluing"]
    assert err.value.violations[0].record == ("gluing", 0)


def test_every_violation_is_reported():
    bad_tri = tri("t0", lengths=(1.0, 1.0, 3.0))
    bad_len = MetricSimplex("t1", 2, ("A", "B", "C"), {("B", "C"): -1.0, ("A", "C"): 1.0, ("A", "B"): 1.0})
    ok = tri("t2")
    f = ok.face_index(("A", "B"))
    glue = [Gluing(("t2", f), ("t2", f), {"A": "A", "B": "B"}), Gluing(("t2", f), ("zz", 0), {"A": "A", "B": "B"})]
    with pytest.raises(ComplexValidationError) as err:
        build_complex(-1, [bad_tri, bad_len, ok], glue)
    kinds = sorted(v.kind for v in err.value.violations)
    assert kinds == ["bad-length", "doubly-glued", "unknown-simplex", "unrealizable-simplex"]


def test_spherical_lengths_must_stay_below_pi():
    with pytest.raises(ComplexValidationError):
        build_complex(1, [tri("t0", lengths=(3.2, 1.0, 2.5))], [])


def test_same_face_pair_glued_twice():
    t0, t1 = tri("t0"), tri("t1")
    g = Gluing(("t0", 0), ("t1", 0), {"B": "B", "C": "C"})
    with pytest.raises(ComplexValidationError) as err:
        build_complex(-1, [t0, t1], [g, g])
    assert [v.kind for v in err.value.violations] == ["doubly-glued"]


@pytest.mark.parametrize("k", [5, 6, 7, 8])
def test_cone_link_is_cycle_of_equilateral_angles(k):
    cx = corpus.cone(k)
    link = vertex_link(cx, "c")
    (comp,) = link.components()
    assert link.component_kind(comp) == "cycle"
    assert len(link.edges) == k
    for e in link.edges:
        assert e.length == pytest.approx(EQ_ANGLE, abs=1e-12)
    assert link.total_length() == pytest.approx(k * EQ_ANGLE, abs=1e-9)


def test_boundary_vertex_link_is_path():
    cx = corpus.cone(7)
    link = vertex_link(cx, "r0")
    (comp,) = link.components()
    assert link.component_kind(comp) == "path"
    assert len(link.edges) == 2


def test_tripod_leaf_link_is_point():
    cx = corpus.tripod()
    leaf = cx.resolve_vertex("x1")
    link = vertex_link(cx, leaf)
    assert len(link.nodes) == 1
    assert link.component_kind(link.components()[0]) == "point"
    center = vertex_link(cx, cx.resolve_vertex("o"))
    assert len(center.nodes) == 3


def test_unknown_vertex():
    with pytest.raises(VertexNotFoundError):
        vertex_link(corpus.cone(5), "nope")


def test_link_circumference_equals_angle_sum():
    rng = np.random.default_rng(4)
    for kind in ("octahedron", "torus", "annulus", "strip", "disk"):
        cx = corpus.random_closed_surface(rng, kind)
        for v in cx.vertices():
            link = vertex_link(cx, v)
            expected = 0.0
            for sid, lab in cx.vertex_members(v):
                s = cx.simplex(sid)
                i = s.vertex_labels.index(lab)
                j, k = [x for x in range(3) if x != i]
                opp = s.length(s.vertex_labels[j], s.vertex_labels[k])
                adj1 = s.length(lab, s.vertex_labels[j])
                adj2 = s.length(lab, s.vertex_labels[k])
                expected += triangle_angles_from_sides(TriangleSides(opp, adj1, adj2, -1))[0]
            assert link.total_length() == pytest.approx(expected, abs=1e-9)


def test_edge_cycles_close_with_identity():
    # going around each edge class through its member faces never identifies
    # the two endpoints of a simplex edge with each other
    rng = np.random.default_rng(8)
    cx = corpus.random_closed_surface(rng, "torus")
    for e in cx.edges():
        ends = cx.edge_endpoints(e)
        assert len(set(ends)) == 2
        for sid, lab in cx.edge_members(e):
            a, b = sorted(lab)
            assert {cx.vertex_of(sid, a), cx.vertex_of(sid, b)} == set(ends)


def test_euler_characteristic_examples():
    assert euler_characteristic(corpus.tetrahedron_boundary()) == 2
    assert euler_characteristic(corpus.single_triangle()) == 1
    torus = corpus.flat_torus7()
    assert (len(torus.vertices()), len(torus.edges()), len(torus.triangles())) == (7, 21, 14)
    assert euler_characteristic(torus) == 0
    assert euler_characteristic(corpus.flat_cylinder()) == 0


def test_non_surface_rejected():
    tris = [("a", "b", "c"), ("a", "b", "d"), ("a", "b", "e")]
    from mkcat.complexcore import complex_from_mesh
    lengths = {}
    for t in tris:
        for u in t:
            for w in t:
                if u < w:
                    lengths[frozenset((u, w))] = 1.0
    cx = complex_from_mesh(-1, tris, lengths)
    with pytest.raises(NotASurfaceError):
        euler_characteristic(cx)


def test_total_area_examples():
    assert total_area(build_complex(-1, [], [])) == 0.0
    one = corpus.single_triangle()
    assert total_area(one) == pytest.approx(EQ_AREA, abs=1e-12)
    assert total_area(one) == pytest.approx(0.3852, abs=1e-4)
    two = build_complex(-1, [tri("t0"), tri("t1")], [])
    assert abs(total_area(two) - 2 * total_area(one)) <= 1e-15


@pytest.mark.parametrize("which", ["length", "map"])
def test_single_corruption_detected(which):
    cx = corpus.cone(7)
    simplices, gluings = list(cx.simplices), list(cx.gluings)
    if which == "length":
        s = simplices[3]
        el = dict(s.edge_lengths)
        key = next(k for k in el if "c" in k)
        el[key] += 0.01
        simplices[3] = MetricSimplex(s.id, s.dim, s.vertex_labels, el)
    else:
        g = gluings[0]
        labels = list(g.vertex_map)
        vals = list(g.vertex_map.values())
        gluings[0] = Gluing(g.side_a, g.side_b, {labels[0]: vals[0], labels[1]: vals[0]})
    with pytest.raises(ComplexValidationError):
        build_complex(-1, simplices, gluings)
