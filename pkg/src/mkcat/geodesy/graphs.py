"""Geodesics in metric graphs (pure 1-complexes)."""
from __future__ import annotations

import heapq
import math

from ..complexcore import MkComplex
from .paths import ComplexPath, DisconnectedError, GeodesyError, PathPoint


def _edge_data(complex: MkComplex):
    key = "graph_edges"
    cache = complex.cache()
    if key not in cache:
        if not complex.is_pure(1):
            raise GeodesyError("metric-graph geodesics need a pure 1-complex")
        adj = {}
        for s in complex.simplices:
            a, b = s.vertex_labels
            u, w = complex.vertex_of(s.id, a), complex.vertex_of(s.id, b)
            l = s.length(a, b)
            adj.setdefault(u, []).append((w, l, s.id))
            adj.setdefault(w, []).append((u, l, s.id))
        cache[key] = adj
    return cache[key]


def _anchors(complex, p: PathPoint):
    """(vertex class, distance, label index) pairs from p to the ends of its 1-simplex."""
    s = complex.simplex(p.sid)
    if s.dim != 1:
        raise GeodesyError("points of a metric graph lie on 1-simplices")
    l = s.length(*s.vertex_labels)
    return [(complex.vertex_of(s.id, s.vertex_labels[0]), p.bary[1] * l, 0),
            (complex.vertex_of(s.id, s.vertex_labels[1]), p.bary[0] * l, 1)]


def _dijkstra(adj, sources):
    best = {}
    prev = {}
    heap = []
    for v, d, tag in sources:
        if d < best.get(v, math.inf):
            best[v] = d
            prev[v] = ("src", tag)
            heap.append((d, v))
    heapq.heapify(heap)
    while heap:
        d, v = heapq.heappop(heap)
        if d > best[v]:
            continue
        for w, l, sid in sorted(adj.get(v, ()), key=lambda t: (t[0], t[2])):
            nd = d + l
            if nd < best.get(w, math.inf):
                best[w] = nd
                prev[w] = (v, sid)
                heapq.heappush(heap, (nd, w))
    return best, prev


def graph_distance(complex: MkComplex, p: PathPoint, q: PathPoint) -> float:
    return graph_geodesic(complex, p, q).length


def graph_geodesic(complex: MkComplex, p: PathPoint, q: PathPoint) -> ComplexPath:
    """Shortest path between two points of a metric graph."""
    adj = _edge_data(complex)
    direct = math.inf
    if p.sid == q.sid:
        s = complex.simplex(p.sid)
        direct = abs(p.bary[1] - q.bary[1]) * s.length(*s.vertex_labels)
    best, prev = _dijkstra(adj, _anchors(complex, p))
    around, end_v = math.inf, None
    for v, d, _ in _anchors(complex, q):
        if v in best and best[v] + d < around:
            around, end_v = best[v] + d, v
    if direct <= around:
        return ComplexPath(complex, (p, q) if p != q else (p,))
    if end_v is None:
        raise DisconnectedError("points lie in different components")
    # walk back to the source side
    chain = []
    v = end_v
    while prev[v][0] != "src":
        u, sid = prev[v]
        chain.append((sid, u, v))
        v = u
    start_tag = prev[v][1]
    wps = [p]
    ps = complex.simplex(p.sid)
    b = [0.0, 0.0]
    b[start_tag] = 1.0
    wps.append(PathPoint(p.sid, tuple(b)))
    for sid, u, w in reversed(chain):
        s = complex.simplex(sid)
        for x in (u, w):
            lab = [y for y in s.vertex_labels if complex.vertex_of(sid, y) == x][0]
            bb = [0.0, 0.0]
            bb[s.vertex_labels.index(lab)] = 1.0
            wps.append(PathPoint(sid, tuple(bb)))
    qs = complex.simplex(q.sid)
    lab = [y for y in qs.vertex_labels if complex.vertex_of(q.sid, y) == end_v][0]
    bb = [0.0, 0.0]
    bb[qs.vertex_labels.index(lab)] = 1.0
    wps += [PathPoint(q.sid, tuple(bb)), q]
    del ps
    clean = [wps[0]]
    for w in wps[1:]:
        if w != clean[-1]:
            clean.append(w)
    return ComplexPath(complex, tuple(clean))


def graph_distance_to_path(complex: MkComplex, x: PathPoint, path: ComplexPath) -> float:
    """Exact distance from a point to a path in a metric graph.

    Along any edge the distance to x is a minimum of linear functions (concave),
    so the minimum over a piece is attained at its ends unless x lies on it.
    """
    best = math.inf
    for sid, a, b in path.pieces():
        if sid == x.sid:
            lo, hi = sorted((a.bary[1], b.bary[1]))
            if lo <= x.bary[1] <= hi:
                return 0.0
    for w in path.waypoints:
        best = min(best, graph_distance(complex, x, w))
    return best
