"""Metric simplicial complexes with constant-curvature simplices glued by isometries.

Simplices are stored by their edge lengths.  Vertex labels are local to a
simplex; identifications come only from gluings, which are closed under passing
to sub-faces.  Quotient classes are named by their lexicographically smallest
member ``"sid:label"`` (vertices) or ``"sid:a-b"`` (edges) so reports are stable.
"""
from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .hypgeom import (
    Curvature,
    UnsupportedCurvatureError,
    angles_allow_degenerate,
    raw_comparison_triangle,
)

GLUE_TOL = 1e-10


class ComplexError(ValueError):
    pass


class VertexNotFoundError(ComplexError, KeyError):
    def __str__(self):
        return ComplexError.__str__(self)


class NotASurfaceError(ComplexError):
    pass


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    record: tuple  # ("simplex", index) or ("gluing", index)


class ComplexValidationError(ComplexError):
    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(f"{v.record[0]} {v.record[1]}: {v.message}" for v in self.violations)
        super().__init__(f"{len(self.violations)} violation(s): {lines}")


def _pair(a, b) -> frozenset:
    return frozenset((str(a), str(b)))


@dataclass(frozen=True, eq=False)
class MetricSimplex:
    id: str
    dim: int
    vertex_labels: tuple
    edge_lengths: Mapping = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id))
        object.__setattr__(self, "vertex_labels", tuple(str(x) for x in self.vertex_labels))
        lengths = {}
        for key, val in dict(self.edge_lengths).items():
            lengths[_pair(*tuple(key))] = float(val)
        object.__setattr__(self, "edge_lengths", lengths)

    def length(self, a, b) -> float:
        return self.edge_lengths[_pair(a, b)]

    def face(self, i: int) -> tuple:
        """Labels of the face opposite the i-th vertex."""
        return self.vertex_labels[:i] + self.vertex_labels[i + 1:]

    def face_index(self, labels) -> int:
        missing = set(self.vertex_labels) - set(labels)
        (lab,) = missing
        return self.vertex_labels.index(lab)

    def __eq__(self, other):
        return (isinstance(other, MetricSimplex) and self.id == other.id and self.dim == other.dim
                and self.vertex_labels == other.vertex_labels and self.edge_lengths == other.edge_lengths)

    def __hash__(self):
        return hash((self.id, self.dim, self.vertex_labels))


@dataclass(frozen=True, eq=False)
class Gluing:
    side_a: tuple
    side_b: tuple
    vertex_map: Mapping = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "side_a", (str(self.side_a[0]), int(self.side_a[1])))
        object.__setattr__(self, "side_b", (str(self.side_b[0]), int(self.side_b[1])))
        object.__setattr__(self, "vertex_map", {str(k): str(v) for k, v in dict(self.vertex_map).items()})

    def __eq__(self, other):
        return (isinstance(other, Gluing) and self.side_a == other.side_a and self.side_b == other.side_b
                and self.vertex_map == other.vertex_map)

    def __hash__(self):
        return hash((self.side_a, self.side_b))


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def add(self, x):
        self.parent.setdefault(x, x)

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra

    def groups(self):
        out = {}
        for x in self.parent:
            out.setdefault(self.find(x), []).append(x)
        return list(out.values())


def _simplex_realizable(kappa: int, s: MetricSimplex, allow_degenerate: bool):
    """Return None if the edge lengths span a simplex of the model space, else a reason."""
    labs = s.vertex_labels
    d = {}
    for a, b in itertools.combinations(labs, 2):
        d[(a, b)] = d[(b, a)] = s.length(a, b)
    if kappa == 1 and any(x >= math.pi for x in d.values()):
        return "spherical edge length must be < pi"
    for tri in itertools.combinations(labs, 3):
        a, b, c = d[tri[1], tri[2]], d[tri[0], tri[2]], d[tri[0], tri[1]]
        per = a + b + c
        slack = min(per - 2 * a, per - 2 * b, per - 2 * c)
        if slack < -1e-14 * per or (not allow_degenerate and slack <= 1e-14 * per):
            return f"face {tri} violates the strict triangle inequality"
        if kappa == 1 and per >= 2 * math.pi:
            return f"face {tri} has spherical perimeter >= 2*pi"
    if s.dim == 3:
        n = len(labs)
        if kappa == -1:
            G = np.array([[-math.cosh(d[labs[i], labs[j]]) if i != j else -1.0 for j in range(n)] for i in range(n)])
        elif kappa == 1:
            G = np.array([[math.cos(d[labs[i], labs[j]]) if i != j else 1.0 for j in range(n)] for i in range(n)])
        else:
            o = labs[0]
            G = np.array([[0.5 * (d[o, labs[i]] ** 2 + d[o, labs[j]] ** 2 - (d[labs[i], labs[j]] ** 2 if i != j else 0.0))
                           for j in range(1, n)] for i in range(1, n)])
        ev = np.linalg.eigvalsh(G)
        scale = max(1.0, float(np.max(np.abs(ev))))
        neg = int(np.sum(ev < -1e-12 * scale))
        small = int(np.sum(np.abs(ev) <= 1e-12 * scale))
        want_neg = 1 if kappa == -1 else 0
        if small and not allow_degenerate:
            return "tetrahedron is degenerate"
        if neg != want_neg:
            return "edge lengths do not span a tetrahedron of the model space"
    return None


class MkComplex:
    """A validated complex; build it with :func:`build_complex`."""

    def __init__(self, curvature: Curvature, simplices, gluings, classes):
        self.curvature = curvature
        self.simplices = tuple(simplices)
        self.gluings = tuple(gluings)
        self._by_id = {s.id: s for s in self.simplices}
        self._vclass, self._eclass, self._tclass = classes
        self._cache = {}
        vmembers, emembers, tmembers = {}, {}, {}
        for key, cid in self._vclass.items():
            vmembers.setdefault(cid, []).append(key)
        for key, cid in self._eclass.items():
            emembers.setdefault(cid, []).append(key)
        for key, cid in self._tclass.items():
            tmembers.setdefault(cid, []).append(key)
        self._vmembers = {k: sorted(v) for k, v in vmembers.items()}
        self._emembers = {k: sorted(v, key=lambda m: (m[0], sorted(m[1]))) for k, v in emembers.items()}
        self._tmembers = {k: sorted(v, key=lambda m: (m[0], sorted(m[1]))) for k, v in tmembers.items()}
        self._edge_tris = {}
        for s in self.simplices:
            if s.dim == 2:
                for i in range(3):
                    e = self.edge_of(s.id, *s.face(i))
                    self._edge_tris.setdefault(e, []).append((s.id, i))

    # basic accessors
    @property
    def kappa(self) -> int:
        return self.curvature.kappa

    @property
    def dim(self) -> int:
        return max((s.dim for s in self.simplices), default=0)

    def is_pure(self, d: int) -> bool:
        return all(s.dim == d for s in self.simplices)

    def simplex(self, sid) -> MetricSimplex:
        try:
            return self._by_id[str(sid)]
        except KeyError:
            raise ComplexError(f"unknown simplex {sid!r}") from None

    def vertices(self) -> list:
        return sorted(self._vmembers)

    def edges(self) -> list:
        return sorted(self._emembers)

    def vertex_of(self, sid, label) -> str:
        return self._vclass[(str(sid), str(label))]

    def vertex_members(self, v) -> list:
        if v not in self._vmembers:
            raise VertexNotFoundError(f"vertex {v!r} not found")
        return list(self._vmembers[v])

    def resolve_vertex(self, name) -> str:
        """Accept a class id or any member written as ``sid:label``."""
        name = str(name)
        if name in self._vmembers:
            return name
        if ":" in name:
            sid, lab = name.split(":", 1)
            key = (sid, lab)
            if key in self._vclass:
                return self._vclass[key]
        # a bare label names a vertex when all simplices using it agree (mesh-built complexes)
        classes = {c for (sid, lab), c in self._vclass.items() if lab == name}
        if len(classes) == 1:
            return classes.pop()
        raise VertexNotFoundError(f"vertex {name!r} not found")

    def edge_of(self, sid, a, b) -> str:
        return self._eclass[(str(sid), _pair(a, b))]

    def edge_members(self, e) -> list:
        return list(self._emembers[e])

    def edge_length(self, e) -> float:
        sid, pair = self._emembers[e][0]
        return self._by_id[sid].length(*pair)

    def edge_endpoints(self, e) -> tuple:
        sid, pair = self._emembers[e][0]
        a, b = sorted(pair)
        return tuple(sorted((self.vertex_of(sid, a), self.vertex_of(sid, b))))

    def triangle_of(self, sid, labels) -> str:
        return self._tclass[(str(sid), frozenset(str(x) for x in labels))]

    def triangle_classes(self) -> list:
        return sorted(self._tmembers)

    def triangle_members(self, t) -> list:
        return list(self._tmembers[t])

    def triangles(self) -> list:
        return sorted(s.id for s in self.simplices if s.dim == 2)

    def edge_triangles(self, e) -> list:
        """(sid, face index) of every 2-simplex containing the edge class."""
        return list(self._edge_tris.get(e, []))

    def boundary_edges(self) -> list:
        return sorted(e for e, ts in self._edge_tris.items() if len(ts) == 1)

    def corner_angle(self, sid, label) -> float:
        """Angle of a 2-simplex at one of its vertices."""
        key = ("corner", str(sid), str(label))
        if key not in self._cache:
            s = self.simplex(sid)
            if s.dim != 2:
                raise ComplexError("corner angles are defined on 2-simplices")
            i = s.vertex_labels.index(str(label))
            b, c = s.face(i)
            opp = s.length(b, c)
            self._cache[key] = angles_allow_degenerate(self.kappa, opp, s.length(label, b), s.length(label, c))[0]
        return self._cache[key]

    def face_corner_angle(self, sid, labels, label) -> float:
        """Angle at ``label`` of the triangular face ``labels`` of any simplex."""
        s = self.simplex(sid)
        others = [x for x in labels if x != label]
        return angles_allow_degenerate(self.kappa, s.length(*others), s.length(label, others[0]),
                                       s.length(label, others[1]))[0]

    def placement(self, sid) -> dict:
        """Model coordinates of a 2-simplex: first label at the basepoint, second on the first axis."""
        key = ("place", str(sid))
        if key not in self._cache:
            s = self.simplex(sid)
            if s.dim != 2:
                raise ComplexError("placement is provided for 2-simplices")
            a, b, c = s.vertex_labels
            p, q, r = raw_comparison_triangle(self.kappa, s.length(a, b), s.length(b, c), s.length(c, a))
            if self.kappa == 0:
                p, q, r = (np.concatenate([[1.0], x]) for x in (p, q, r))
            self._cache[key] = {a: p, b: q, c: r}
        return self._cache[key]

    def cache(self) -> dict:
        """Scratch cache for derived geometry keyed by callers."""
        return self._cache


def build_complex(curvature, simplices, gluings, allow_degenerate: bool = False) -> MkComplex:
    """Validate simplices and gluings and form the quotient.

    Every violation is collected before raising :class:`ComplexValidationError`.
    A face may take part in several gluings (branching); gluing the same pair of
    faces twice, or a face to itself, is rejected.
    """
    curvature = Curvature.of(curvature)
    k = curvature.kappa
    simplices = list(simplices)
    gluings = list(gluings)
    violations = []
    by_id = {}
    ok_simplex = set()
    for idx, s in enumerate(simplices):
        bad = False
        if s.id in by_id:
            violations.append(Violation("duplicate-simplex", f"simplex id {s.id!r} repeated", ("simplex", idx)))
            continue
        by_id[s.id] = s
        if s.dim not in (1, 2, 3):
            violations.append(Violation("bad-dimension", f"dimension {s.dim} not in 1..3", ("simplex", idx)))
            continue
        labs = s.vertex_labels
        if len(labs) != s.dim + 1 or len(set(labs)) != len(labs):
            violations.append(Violation("bad-labels", f"needs {s.dim + 1} distinct labels", ("simplex", idx)))
            continue
        need = {_pair(a, b) for a, b in itertools.combinations(labs, 2)}
        if set(s.edge_lengths) != need:
            violations.append(Violation("missing-length", "edge lengths do not match the vertex pairs",
                                        ("simplex", idx)))
            continue
        for key, val in s.edge_lengths.items():
            if not (math.isfinite(val) and val > 0):
                violations.append(Violation("bad-length", f"edge {sorted(key)} has length {val!r}", ("simplex", idx)))
                bad = True
        if bad:
            continue
        reason = _simplex_realizable(k, s, allow_degenerate)
        if reason:
            violations.append(Violation("unrealizable-simplex", reason, ("simplex", idx)))
            continue
        ok_simplex.add(s.id)

    uf = _UnionFind()
    for s in simplices:
        if s.id not in ok_simplex:
            continue
        for r in range(1, len(s.vertex_labels) + 1):
            for sub in itertools.combinations(s.vertex_labels, r):
                uf.add((s.id, frozenset(sub)))

    seen_pairs = set()
    for idx, g in enumerate(gluings):
        rec = ("gluing", idx)
        (sa, fa), (sb, fb) = g.side_a, g.side_b
        if sa not in by_id or sb not in by_id:
            violations.append(Violation("unknown-simplex", f"gluing references unknown simplex", rec))
            continue
        if sa not in ok_simplex or sb not in ok_simplex:
            continue
        A, B = by_id[sa], by_id[sb]
        if not (0 <= fa <= A.dim and 0 <= fb <= B.dim):
            violations.append(Violation("bad-face", "face index out of range", rec))
            continue
        if A.dim != B.dim:
            violations.append(Violation("bad-face", "glued faces have different dimensions", rec))
            continue
        key = frozenset([(sa, fa), (sb, fb)])
        if (sa, fa) == (sb, fb):
            violations.append(Violation("doubly-glued", "face glued to itself", rec))
            continue
        if key in seen_pairs:
            violations.append(Violation("doubly-glued", f"faces {sa}/{fa} and {sb}/{fb} glued twice", rec))
            continue
        seen_pairs.add(key)
        face_a, face_b = A.face(fa), B.face(fb)
        vm = g.vertex_map
        if set(vm) != set(face_a) or sorted(vm.values()) != sorted(face_b):
            violations.append(Violation("bad-map", "vertex map is not a bijection between the faces", rec))
            continue
        mism = []
        for x, y in itertools.combinations(face_a, 2):
            la, lb = A.length(x, y), B.length(vm[x], vm[y])
            if abs(la - lb) > GLUE_TOL:
                mism.append(f"{x}-{y}={la!r} vs {vm[x]}-{vm[y]}={lb!r}")
        if mism:
            violations.append(Violation("non-isometric-gluing", "length mismatch: " + ", ".join(mism), rec))
            continue
        for r in range(1, len(face_a) + 1):
            for sub in itertools.combinations(face_a, r):
                uf.union((sa, frozenset(sub)), (sb, frozenset(vm[x] for x in sub)))

    for idx, s in enumerate(simplices):
        if s.id not in ok_simplex:
            continue
        roots = [uf.find((s.id, frozenset([x]))) for x in s.vertex_labels]
        if len(set(roots)) != len(roots):
            violations.append(Violation("degenerate-quotient", f"gluings identify two vertices of simplex {s.id}",
                                        ("simplex", idx)))

    if violations:
        raise ComplexValidationError(violations)

    vclass, eclass, tclass = {}, {}, {}
    for group in uf.groups():
        size = len(next(iter(group))[1])
        if size == 1:
            name = min(f"{sid}:{next(iter(lab))}" for sid, lab in group)
            for sid, lab in group:
                vclass[(sid, next(iter(lab)))] = name
        elif size == 2:
            name = min(f"{sid}:{'-'.join(sorted(lab))}" for sid, lab in group)
            for sid, lab in group:
                eclass[(sid, lab)] = name
        elif size == 3:
            name = min(f"{sid}:{'-'.join(sorted(lab))}" for sid, lab in group)
            for sid, lab in group:
                tclass[(sid, lab)] = name
    return MkComplex(curvature, simplices, gluings, (vclass, eclass, tclass))


def complex_from_mesh(curvature, triangles, lengths, ids=None, allow_degenerate=False) -> MkComplex:
    """Build a 2-complex from triangles given by global vertex keys.

    ``lengths`` maps frozenset pairs of global keys to edge lengths.  Triangles
    sharing an edge are glued along it; an edge in three or more triangles is
    glued from its first triangle to each of the others.
    """
    simplices, gluings = [], []
    ids = list(ids) if ids is not None else [f"t{i}" for i in range(len(triangles))]
    owners = {}
    for sid, tri in zip(ids, triangles):
        tri = tuple(str(x) for x in tri)
        el = {_pair(a, b): lengths[frozenset((a, b))] if frozenset((a, b)) in lengths
              else lengths[_pair(a, b)] for a, b in itertools.combinations(tri, 2)}
        s = MetricSimplex(sid, 2, tri, el)
        simplices.append(s)
        for i in range(3):
            owners.setdefault(frozenset(s.face(i)), []).append((s, i))
    for key in sorted(owners, key=lambda f: sorted(f)):
        own = owners[key]
        s0, f0 = own[0]
        for s1, f1 in own[1:]:
            gluings.append(Gluing((s0.id, f0), (s1.id, f1), {x: x for x in s0.face(f0)}))
    return build_complex(curvature, simplices, gluings, allow_degenerate=allow_degenerate)


@dataclass(frozen=True)
class LinkEdge:
    ends: tuple
    length: float
    corner: tuple  # (simplex id, labels of the triangle, label at the base vertex)


@dataclass(frozen=True)
class LinkComplex:
    """Link of a vertex: nodes are incident edge classes, edges are incident triangle corners."""
    base_vertex: str
    nodes: tuple
    edges: tuple

    def adjacency(self) -> dict:
        adj = {n: [] for n in self.nodes}
        for i, e in enumerate(self.edges):
            u, w = e.ends
            adj[u].append((i, w))
            if u != w:
                adj[w].append((i, u))
        return adj

    def components(self) -> list:
        adj = self.adjacency()
        seen, comps = set(), []
        for n in self.nodes:
            if n in seen:
                continue
            stack, comp = [n], []
            seen.add(n)
            while stack:
                x = stack.pop()
                comp.append(x)
                for _, y in adj[x]:
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            comps.append(sorted(comp))
        return comps

    def component_kind(self, comp) -> str:
        """'cycle', 'path', 'point' or 'graph' for one component."""
        comp = set(comp)
        edges = [e for e in self.edges if e.ends[0] in comp]
        if not edges:
            return "point"
        deg = {n: 0 for n in comp}
        for e in edges:
            deg[e.ends[0]] += 1
            deg[e.ends[1]] += 1
        if all(d == 2 for d in deg.values()):
            return "cycle"
        ones = sum(1 for d in deg.values() if d == 1)
        if ones == 2 and all(d in (1, 2) for d in deg.values()) and len(edges) == len(comp) - 1:
            return "path"
        return "graph"

    def total_length(self, comp=None) -> float:
        comp = set(self.nodes if comp is None else comp)
        return math.fsum(e.length for e in self.edges if e.ends[0] in comp)

    def shortest_path(self, src, dst, banned: int = -1):
        """Dijkstra distance and edge list from src to dst avoiding one edge index."""
        adj = self.adjacency()
        best = {src: 0.0}
        prev = {}
        heap = [(0.0, src)]
        while heap:
            d, x = heapq.heappop(heap)
            if d > best.get(x, math.inf):
                continue
            if x == dst:
                break
            for i, y in sorted(adj[x], key=lambda t: t[0]):
                if i == banned:
                    continue
                nd = d + self.edges[i].length
                if nd < best.get(y, math.inf):
                    best[y] = nd
                    prev[y] = (x, i)
                    heapq.heappush(heap, (nd, y))
        if dst not in best:
            return math.inf, []
        path, x = [], dst
        while x != src:
            x, i = prev[x]
            path.append(i)
        return best[dst], path[::-1]


def vertex_link(complex: MkComplex, v) -> LinkComplex:
    v = complex.resolve_vertex(v)
    nodes = set()
    for sid, lab in complex.vertex_members(v):
        s = complex.simplex(sid)
        for other in s.vertex_labels:
            if other != lab:
                nodes.add(complex.edge_of(sid, lab, other))
    edges = []
    seen_tris = set()
    for sid, lab in complex.vertex_members(v):
        s = complex.simplex(sid)
        others = [x for x in s.vertex_labels if x != lab]
        for m1, m2 in itertools.combinations(others, 2):
            labels = frozenset((lab, m1, m2))
            tid = complex.triangle_of(sid, labels)
            if tid in seen_tris:
                continue
            seen_tris.add(tid)
            if s.dim == 2:
                ang = complex.corner_angle(sid, lab)
            else:
                ang = complex.face_corner_angle(sid, (lab, m1, m2), lab)
            ends = tuple(sorted((complex.edge_of(sid, lab, m1), complex.edge_of(sid, lab, m2))))
            edges.append(LinkEdge(ends, ang, (sid, tuple(sorted(labels)), lab)))
    edges.sort(key=lambda e: (e.ends, e.corner))
    return LinkComplex(v, tuple(sorted(nodes)), tuple(edges))


def check_surface(complex: MkComplex):
    if not complex.is_pure(2):
        raise NotASurfaceError("expected a pure 2-complex")
    for e in complex.edges():
        if len(complex.edge_triangles(e)) > 2:
            raise NotASurfaceError(f"edge {e} lies in {len(complex.edge_triangles(e))} triangles")


def euler_characteristic(complex: MkComplex) -> int:
    check_surface(complex)
    return len(complex.vertices()) - len(complex.edges()) + len(complex.triangles())


def total_area(complex: MkComplex) -> float:
    if complex.kappa != -1:
        raise UnsupportedCurvatureError("area is only provided for kappa = -1")
    if not complex.simplices:
        return 0.0
    if not complex.is_pure(2):
        raise ComplexError("area needs a pure 2-complex")
    return math.fsum(triangle_defect(complex, sid) for sid in complex.triangles())


def triangle_defect(complex: MkComplex, sid) -> float:
    s = complex.simplex(sid)
    return max(math.pi - math.fsum(complex.corner_angle(sid, x) for x in s.vertex_labels), 0.0)
