"""Corridor unfolding, funnel straightening and vertex-flip rules for 2-complexes.

A corridor is a sequence of triangles with the edge class crossed between
consecutive ones.  Unfolding places the corridor in one copy of the model
plane; in the chart V[1:]/V[0] (Klein, gnomonic, or affine) geodesics are
straight lines, so the taut path inside the corridor comes from a funnel
sweep over the portals.  A bend at a vertex is kept only when the angle on the
side away from the corridor is also at least pi; otherwise the corridor is
re-routed around the vertex on that side, which strictly shortens the path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from ..complexcore import MkComplex
from ..hypgeom import _half_angle, inner, raw_angle, raw_dist, tangent_toward
from .paths import (
    ComplexPath,
    GeodesyError,
    NonConvergenceError,
    PathPoint,
    DisconnectedError,
    combine,
    point_vector,
    simplex_vectors,
    transfer,
)

ANGLE_TOL = 1e-8
TOUCH_TOL = 1e-10


@dataclass
class LinkOrder:
    """Cyclic or linear order of the triangle corners around a vertex (one link component)."""
    vertex: str
    kind: str  # 'cycle' | 'path' | 'graph'
    corners: list = field(default_factory=list)  # (sid, label)
    low: list = field(default_factory=list)  # edge class at the start of each corner
    high: list = field(default_factory=list)
    angles: list = field(default_factory=list)
    starts: list = field(default_factory=list)
    index: dict = field(default_factory=dict)  # sid -> corner index

    @property
    def total(self) -> float:
        return math.fsum(self.angles)


class SurfaceIndex:
    """Adjacency data of the 2-simplices of a complex, cached per complex."""

    def __init__(self, complex: MkComplex):
        self.c = complex
        self.kappa = complex.kappa
        self.labels, self.vcls, self.edges = {}, {}, {}
        for sid in complex.triangles():
            s = complex.simplex(sid)
            self.labels[sid] = s.vertex_labels
            self.vcls[sid] = tuple(complex.vertex_of(sid, x) for x in s.vertex_labels)
            self.edges[sid] = tuple(complex.edge_of(sid, *s.face(i)) for i in range(3))
        self.edge_tris = {}
        for sid, es in self.edges.items():
            for i, e in enumerate(es):
                self.edge_tris.setdefault(e, []).append((sid, i))
        self._links = {}
        self._unfold = {}
        self._graph = None

    # link orders -------------------------------------------------------
    def link_orders(self, v: str) -> list:
        if v not in self._links:
            self._links[v] = self._build_links(v)
        return self._links[v]

    def link_of(self, v: str, sid: str) -> LinkOrder:
        for lo in self.link_orders(v):
            if sid in lo.index:
                return lo
        raise GeodesyError(f"triangle {sid} has no corner at {v}")

    def _corner_edges(self, sid, v):
        i = self.vcls[sid].index(v)
        # the two faces containing vertex i are the faces opposite the other two labels
        return [self.edges[sid][j] for j in range(3) if j != i]

    def _build_links(self, v):
        corners = sorted(sid for sid in self.labels if v in self.vcls[sid])
        seen, out = set(), []
        for start in corners:
            if start in seen:
                continue
            comp, stack = [], [start]
            seen.add(start)
            branching = False
            while stack:
                t = stack.pop()
                comp.append(t)
                for e in self._corner_edges(t, v):
                    nb = [s for s, _ in self.edge_tris[e] if s != t]
                    if len(self.edge_tris[e]) > 2:
                        branching = True
                    for s in nb:
                        if s not in seen:
                            seen.add(s)
                            stack.append(s)
            comp.sort()
            if branching:
                out.append(LinkOrder(v, "graph", [(t, self._label(t, v)) for t in comp]))
                continue
            bd = [(t, e) for t in comp for e in sorted(self._corner_edges(t, v)) if len(self.edge_tris[e]) == 1]
            if bd:
                t0, low0 = min(bd)
                kind = "path"
            else:
                t0 = comp[0]
                low0 = min(self._corner_edges(t0, v))
                kind = "cycle"
            lo = LinkOrder(v, kind)
            t, low = t0, low0
            while True:
                es = self._corner_edges(t, v)
                high = es[1] if es[0] == low else es[0]
                lo.index[t] = len(lo.corners)
                lo.corners.append((t, self._label(t, v)))
                lo.low.append(low)
                lo.high.append(high)
                lo.angles.append(self.c.corner_angle(t, self._label(t, v)))
                nb = [s for s, _ in self.edge_tris[high] if s != t]
                if not nb or nb[0] == t0:
                    break
                t, low = nb[0], high
            lo.starts = list(np.concatenate([[0.0], np.cumsum(lo.angles)[:-1]]))
            out.append(lo)
        return out

    def _label(self, sid, v):
        return self.labels[sid][self.vcls[sid].index(v)]

    # unfolding ----------------------------------------------------------
    def unfold(self, tris: tuple, cross: tuple):
        """Positions (3x3 rows in label order) and occurrence ids of every corridor triangle."""
        key = (tris, cross)
        hit = self._unfold.get(key)
        if hit is not None:
            return hit
        k = self.kappa
        pos = [np.array(simplex_vectors(self.c, tris[0]))]
        occ = [(0, 1, 2)]
        nxt = 3
        for j in range(1, len(tris)):
            prev, cur, e = tris[j - 1], tris[j], cross[j - 1]
            fp = self.edges[prev].index(e)
            fc = self.edges[cur].index(e)
            P = pos[-1]
            shared = [i for i in range(3) if i != fp]
            newpos = np.zeros((3, 3))
            newocc = [None, None, None]
            cv = self.vcls[cur]
            pv = self.vcls[prev]
            for i in range(3):
                if i == fc:
                    continue
                src = [x for x in shared if pv[x] == cv[i]]
                if len(src) != 1:
                    raise GeodesyError("corridor crossing does not match vertex classes")
                newpos[i] = P[src[0]]
                newocc[i] = occ[-1][src[0]]
            a, b = [i for i in range(3) if i != fc]
            s = self.c.simplex(cur)
            L = self.labels[cur]
            dA = s.length(L[a], L[fc])
            dB = s.length(L[b], L[fc])
            dAB = s.length(L[a], L[b])
            newpos[fc] = place_third(k, newpos[a], newpos[b], P[fp], dA, dB, dAB)
            newocc[fc] = nxt
            nxt += 1
            pos.append(newpos)
            occ.append(tuple(newocc))
        res = (pos, occ)
        if len(self._unfold) > 50000:
            self._unfold.clear()
        self._unfold[key] = res
        return res

    # dual graph ----------------------------------------------------------
    def dual_graph(self):
        if self._graph is None:
            G = nx.Graph()
            k = self.kappa
            for sid in self.labels:
                G.add_node(sid)
            for e, ts in sorted(self.edge_tris.items()):
                for (s1, f1) in ts:
                    for (s2, f2) in ts:
                        if s1 >= s2:
                            continue
                        w = _centroid_gap(self.c, s1, f1) + _centroid_gap(self.c, s2, f2)
                        if not G.has_edge(s1, s2) or G[s1][s2]["w"] > w:
                            G.add_edge(s1, s2, w=w, e=e)
            self._graph = G
        return self._graph


def _centroid_gap(complex, sid, face):
    k = complex.kappa
    V = simplex_vectors(complex, sid)
    c = combine(k, V, (1 / 3, 1 / 3, 1 / 3))
    b = [0.5, 0.5, 0.5]
    b[face] = 0.0
    m = combine(k, V, b)
    return raw_dist(k, c, m)


def index_of(complex: MkComplex) -> SurfaceIndex:
    cache = complex.cache()
    if "surface_index" not in cache:
        cache["surface_index"] = SurfaceIndex(complex)
    return cache["surface_index"]


def _unit(kappa, v):
    n = float(inner(kappa, v, v))
    return v / math.sqrt(n)


def exp_map(kappa, x, u, d):
    if kappa == -1:
        return math.cosh(d) * x + math.sinh(d) * u
    if kappa == 1:
        return math.cos(d) * x + math.sin(d) * u
    return x + d * u


def place_third(kappa, A, B, C, dA, dB, dAB):
    """Third vertex z with d(A,z)=dA, d(B,z)=dB on the side of line AB away from C."""
    alpha = _half_angle(kappa, dB, dAB, dA)
    u = _unit(kappa, tangent_toward(kappa, A, B))
    c = tangent_toward(kappa, A, C)
    w = c - float(inner(kappa, c, u)) * u
    w = -_unit(kappa, w)
    z = exp_map(kappa, A, math.cos(alpha) * u + math.sin(alpha) * w, dA)
    if kappa == -1:
        z = z / math.sqrt(-float(inner(-1, z, z)))
    elif kappa == 1:
        z = z / np.linalg.norm(z)
    return z


def chart(x):
    if x[0] <= 1e-9:
        raise GeodesyError("corridor leaves the chart hemisphere")
    return (float(x[1] / x[0]), float(x[2] / x[0]))


def lift(kappa, c):
    x = np.array([1.0, c[0], c[1]])
    if kappa == -1:
        q = 1.0 - c[0] * c[0] - c[1] * c[1]
        return x / math.sqrt(q)
    if kappa == 1:
        return x / np.linalg.norm(x)
    return x


def cross2(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


@dataclass
class Node:
    vec: np.ndarray
    pt: tuple
    occ: object  # occurrence id for corridor vertices, None for free points
    entry: int
    exit: int
    bend: bool = False


@dataclass
class Straight:
    tris: tuple
    cross: tuple
    nodes: list
    length: float
    flips: int = 0
    history: list = field(default_factory=list)
    p: PathPoint | None = None
    q: PathPoint | None = None


def _one_hot(p: PathPoint):
    nz = [i for i, x in enumerate(p.bary) if x > 0.0]
    if len(nz) == 1:
        return nz[0]
    big = [i for i, x in enumerate(p.bary) if x > 1.0 - 1e-13]
    return big[0] if big else None


def _portal_data(ix: SurfaceIndex, tris, cross, pos, occ):
    """Left/right endpoints (vec, chart, occ) of each portal, seen from the previous triangle."""
    portals = []
    for j in range(1, len(tris)):
        prev = tris[j - 1]
        fp = ix.edges[prev].index(cross[j - 1])
        P = pos[j - 1]
        a, b = [i for i in range(3) if i != fp]
        ca, cb, cc = chart(P[a]), chart(P[b]), chart(P[fp])
        if cross2(cc, ca, cb) > 0:
            right, left = a, b
        else:
            right, left = b, a
        portals.append(((P[left], chart(P[left]), occ[j - 1][left]), (P[right], chart(P[right]), occ[j - 1][right])))
    return portals


def _funnel(start, end, portals):
    """Simple stupid funnel over (left, right) portals; returns apex indices into the portal list.

    ``start``/``end`` are (vec, chart, occ).  Portal 0 is the start, portal m+1 the end.
    """
    pts = [(start, start)] + portals + [(end, end)]
    apex = start
    left = right = start
    li = ri = 0
    out = []
    i = 1
    n = len(pts)
    while i < n:
        L, R = pts[i]
        # right side
        if cross2(apex[1], right[1], R[1]) >= 0.0:
            if _same(apex, right) or _same(apex, left) or cross2(apex[1], left[1], R[1]) < 0.0:
                right, ri = R, i
            else:
                out.append((left, li))
                apex, ai = left, li
                left = right = apex
                li = ri = ai
                i = ai + 1
                continue
        if cross2(apex[1], left[1], L[1]) <= 0.0:
            if _same(apex, left) or _same(apex, right) or cross2(apex[1], right[1], L[1]) > 0.0:
                left, li = L, i
            else:
                out.append((right, ri))
                apex, ai = right, ri
                left = right = apex
                li = ri = ai
                i = ai + 1
                continue
        i += 1
    # the end point can show up as a final apex; it is not a bend
    return [(pt, ix) for pt, ix in out if ix != n - 1]


def _same(a, b):
    if a[2] is not None and b[2] is not None:
        return a[2] == b[2]
    return a[1] == b[1]


def _run(portals, occ_id, k):
    """Maximal run of portal indices (1-based) around k whose endpoints include occ_id."""
    def has(j):
        return 1 <= j <= len(portals) and occ_id in (portals[j - 1][0][2], portals[j - 1][1][2])
    a = b = k
    while has(a - 1):
        a -= 1
    while has(b + 1):
        b += 1
    return a, b


def solve_corridor(ix: SurfaceIndex, tris, cross, p: PathPoint, q: PathPoint):
    """Taut path from p (in tris[0]) to q (in tris[-1]) inside a fixed corridor."""
    k = ix.kappa
    pos, occ = ix.unfold(tris, cross)
    sv = combine(k, pos[0], p.bary)
    ev = combine(k, pos[-1], q.bary)
    si, ei = _one_hot(p), _one_hot(q)
    so = occ[0][si] if si is not None else "S"
    eo = occ[-1][ei] if ei is not None else "E"
    if si is not None:
        sv = pos[0][si]
    if ei is not None:
        ev = pos[-1][ei]
    start = (sv, chart(sv), so)
    end = (ev, chart(ev), eo)
    portals = _portal_data(ix, tris, cross, pos, occ)
    m = len(portals)
    apexes = _funnel(start, end, portals)
    nodes = []
    s_exit = _run(portals, so, 1)[1] if si is not None and m and so in (portals[0][0][2], portals[0][1][2]) else 0
    nodes.append(Node(sv, start[1], so if si is not None else None, 0, s_exit))
    for (pt, idx) in apexes:
        a, b = _run(portals, pt[2], idx)
        nodes.append(Node(pt[0], pt[1], pt[2], a - 1, b, True))
    e_entry = m
    if ei is not None and m and eo in (portals[-1][0][2], portals[-1][1][2]):
        e_entry = _run(portals, eo, m)[0] - 1
    nodes.append(Node(ev, end[1], eo if ei is not None else None, e_entry, m))
    nodes = _insert_touches(nodes, portals)
    length = math.fsum(raw_dist(k, a.vec, b.vec) for a, b in zip(nodes[:-1], nodes[1:]))
    return nodes, portals, length


def _insert_touches(nodes, portals):
    out = [nodes[0]]
    for a, b in zip(nodes[:-1], nodes[1:]):
        j = a.exit + 1
        while j <= b.entry:
            (Lv, Lc, Lo), (Rv, Rc, Ro) = portals[j - 1]
            hit = None
            for vec, c, o in ((Lv, Lc, Lo), (Rv, Rc, Ro)):
                if o in (a.occ, b.occ) or c == a.pt or c == b.pt:
                    continue
                if _near_segment(a.pt, b.pt, c):
                    hit = (vec, c, o)
                    break
            if hit is not None:
                r0, r1 = _run(portals, hit[2], j)
                node = Node(hit[0], hit[1], hit[2], r0 - 1, r1, True)
                out.append(node)
                a = node
                j = r1 + 1
                continue
            j += 1
        out.append(b)
    return out


def _near_segment(p, q, c):
    dx, dy = q[0] - p[0], q[1] - p[1]
    l2 = dx * dx + dy * dy
    if l2 == 0.0:
        return False
    t = ((c[0] - p[0]) * dx + (c[1] - p[1]) * dy) / l2
    if t <= 0.0 or t >= 1.0:
        return False
    px, py = p[0] + t * dx - c[0], p[1] + t * dy - c[1]
    scale = max(1.0, abs(c[0]), abs(c[1]))
    return math.hypot(px, py) <= TOUCH_TOL * scale * max(1.0, math.sqrt(l2))


def _side_angles(ix: SurfaceIndex, tris, cross, pos, occ, node: Node, prev: Node, nxt: Node):
    """Angles on both sides of the path at a vertex node, plus the data to re-route.

    Returns (corridor_angle, candidates) with candidates = [(angle, walk)] where
    walk = list of (edge, triangle) steps from tris[entry] to tris[exit].
    """
    k = ix.kappa
    te, tx = tris[node.entry], tris[node.exit]
    if raw_dist(k, node.vec, prev.vec) == 0.0 or raw_dist(k, node.vec, nxt.vec) == 0.0:
        return math.inf, [], None
    ie = occ[node.entry].index(node.occ)
    iv = occ[node.exit].index(node.occ)
    v = ix.vcls[te][ie]
    lo = ix.link_of(v, te)
    W = node.vec
    # corridor side, summed through the fan
    e_first = cross[node.entry]
    e_last = cross[node.exit - 1]
    def other_end(j, e):
        t = tris[j]
        f = ix.edges[t].index(e)
        i_w = occ[j].index(node.occ)
        o = [i for i in range(3) if i != f and i != i_w]
        # the edge e contains w and one other vertex; that vertex is the one that is neither w nor opposite e
        return pos[j][o[0]]
    a_in = raw_angle(k, W, prev.vec, other_end(node.entry, e_first))
    a_out = raw_angle(k, W, other_end(node.exit, e_last), nxt.vec)
    mid = math.fsum(ix.c.corner_angle(tris[j], ix.labels[tris[j]][occ[j].index(node.occ)])
                    for j in range(node.entry + 1, node.exit))
    corridor = a_in + mid + a_out
    if lo.kind != "cycle":
        return corridor, [], v
    ci, co = lo.index[te], lo.index[tx]
    theta = lo.total

    def low_end(j, ci_):
        e = lo.low[ci_]
        return other_end(j, e)
    p_in = lo.starts[ci] + raw_angle(k, W, low_end(node.entry, ci), prev.vec)
    p_out = lo.starts[co] + raw_angle(k, W, low_end(node.exit, co), nxt.vec)
    corr_dir = "up" if e_first == lo.high[ci] else "down"
    current = list(zip(cross[node.entry:node.exit], tris[node.entry + 1:node.exit + 1]))
    n = len(lo.corners)
    cands = []
    for d in ("up", "down"):
        if d == "up":
            steps = (co - ci) % n
            if steps == 0 and p_out < p_in:
                steps = n
            wraps = 1 if co < ci or (co == ci and steps == n) else 0
            ang = p_out - p_in + wraps * theta
        else:
            steps = (ci - co) % n
            if steps == 0 and p_out > p_in:
                steps = n
            wraps = 1 if co > ci or (co == ci and steps == n) else 0
            ang = p_in - p_out + wraps * theta
        ang = max(ang, 0.0)
        if d == corr_dir and abs(ang - corridor) < 1e-9:
            continue
        walk = []
        c = ci
        for _ in range(steps):
            if d == "up":
                e = lo.high[c]
                c = (c + 1) % n
            else:
                e = lo.low[c]
                c = (c - 1) % n
            walk.append((e, lo.corners[c][0]))
        # re-routing along the current corridor changes nothing
        if walk == current:
            continue
        cands.append((ang, walk))
    return corridor, cands, v


def _simplify(tris, cross):
    tris, cross = list(tris), list(cross)
    changed = True
    while changed:
        changed = False
        for j in range(1, len(tris) - 1):
            if tris[j - 1] == tris[j + 1] and cross[j - 1] == cross[j]:
                del tris[j:j + 2]
                del cross[j - 1:j + 1]
                changed = True
                break
    return tuple(tris), tuple(cross)


def _trim(ix: SurfaceIndex, tris, cross, p: PathPoint, q: PathPoint):
    """Drop end triangles when the endpoint already lies in the next one (it sits on the portal)."""
    tris, cross = _simplify(tuple(tris), tuple(cross))
    while len(tris) > 1:
        t = transfer(ix.c, p, tris[1])
        if t is None:
            break
        p, tris, cross = t, tris[1:], cross[1:]
        tris, cross = _simplify(tris, cross)
    while len(tris) > 1:
        t = transfer(ix.c, q, tris[-2])
        if t is None:
            break
        q, tris, cross = t, tris[:-1], cross[:-1]
        tris, cross = _simplify(tris, cross)
    return tris, cross, p, q


def straighten_corridor(ix: SurfaceIndex, tris, cross, p: PathPoint, q: PathPoint,
                        max_iters: int = 200, tol: float = ANGLE_TOL) -> Straight:
    tris, cross, p, q = _trim(ix, tris, cross, p, q)
    history = []
    flips = 0
    for it in range(max_iters + 1):
        nodes, portals, length = solve_corridor(ix, tris, cross, p, q)
        history.append(length)
        pos, occ = ix.unfold(tris, cross)
        best = None
        worst_deficit = 0.0
        for i in range(1, len(nodes) - 1):
            nd = nodes[i]
            corridor, cands, v = _side_angles(ix, tris, cross, pos, occ, nd, nodes[i - 1], nodes[i + 1])
            for ang, walk in cands:
                if ang < math.pi - tol:
                    worst_deficit = max(worst_deficit, math.pi - ang)
                    if best is None or ang < best[0]:
                        best = (ang, i, walk)
            if best is not None:
                break
        if best is None:
            return Straight(tris, cross, nodes, length, flips, history, p, q)
        if it == max_iters:
            raise NonConvergenceError(f"straightening did not converge in {max_iters} flips", worst_deficit)
        _, i, walk = best
        nd = nodes[i]
        new_tris = tris[:nd.entry + 1] + tuple(t for _, t in walk) + tris[nd.exit + 1:]
        new_cross = cross[:nd.entry] + tuple(e for e, _ in walk) + cross[nd.exit:]
        if not walk:
            new_tris = tris[:nd.entry + 1] + tris[nd.exit + 1:]
            new_cross = cross[:nd.entry] + cross[nd.exit:]
        tris, cross, p, q = _trim(ix, new_tris, new_cross, p, q)
        flips += 1
    raise NonConvergenceError("straightening did not converge", float("nan"))


def straight_to_path(ix: SurfaceIndex, st: Straight, p: PathPoint, q: PathPoint) -> ComplexPath:
    """Waypoints of a solved corridor path, with a waypoint pair at every face crossing."""
    pos, occ = ix.unfold(st.tris, st.cross)
    portals = _portal_data(ix, st.tris, st.cross, pos, occ)
    m = len(portals)

    def vertex_in(j, o):
        b = [0.0, 0.0, 0.0]
        b[occ[j].index(o)] = 1.0
        return PathPoint(st.tris[j], tuple(b))

    nodes = st.nodes
    wps, virt = [p], [False]
    if st.p is not None and st.p != p:
        wps.append(st.p)
        virt.append(False)
    tail = [q] if st.q is None or st.q == q else [st.q, q]
    q = tail[0]
    for a, b in zip(nodes[:-1], nodes[1:]):
        if a.exit > a.entry:
            wps.append(vertex_in(a.exit, a.occ))
            virt.append(a.bend)
        for jj in range(a.exit + 1, b.entry + 1):
            (Lv, Lc, Lo), (Rv, Rc, Ro) = portals[jj - 1]
            u = _intersect_param(a.pt, b.pt, Lc, Rc)
            w0, w1 = (1.0 - u) / Lv[0], u / Rv[0]
            s = w0 + w1
            for t in (jj - 1, jj):
                bb = [0.0, 0.0, 0.0]
                bb[occ[t].index(Lo)] = w0 / s
                bb[occ[t].index(Ro)] = w1 / s
                wps.append(PathPoint(st.tris[t], tuple(bb)))
                virt.append(False)
        # when the runs of a and b overlap the leg runs along a shared portal edge
        arrive = min(max(b.entry, a.exit), b.exit)
        if b is nodes[-1]:
            if arrive < m:
                wps.append(vertex_in(arrive, b.occ))
                virt.append(False)
            wps.extend(tail)
            virt.extend([False] * len(tail))
        else:
            wps.append(vertex_in(arrive, b.occ))
            virt.append(True)
            b.entry = arrive
    clean_w, clean_v = [], []
    for w, f in zip(wps, virt):
        if clean_w and clean_w[-1] == w:
            clean_v[-1] = clean_v[-1] or f
            continue
        clean_w.append(w)
        clean_v.append(f)
    return ComplexPath(ix.c, tuple(clean_w), tuple(clean_v))


def _bary_place(kappa, P, vec):
    b = np.linalg.solve(P.T, vec)
    b = np.clip(b, 0.0, None)
    return tuple(float(x) for x in b / b.sum())


def _intersect_param(a, b, L, R):
    """Parameter u along the portal L->R where segment a->b crosses it, clamped to [0,1]."""
    d1 = (b[0] - a[0], b[1] - a[1])
    d2 = (R[0] - L[0], R[1] - L[1])
    den = d1[0] * d2[1] - d1[1] * d2[0]
    if den == 0.0:
        return 0.5
    u = ((L[0] - a[0]) * d1[1] - (L[1] - a[1]) * d1[0]) / den
    return min(max(u, 0.0), 1.0)
