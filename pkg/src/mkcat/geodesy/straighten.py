"""Local geodesics: straightening, shortest geodesics between points, and closed-loop tightening."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import networkx as nx
import numpy as np

from ..complexcore import MkComplex
from ..hypgeom import normalize_model, raw_dist, raw_geodesic_points, raw_segment_distances
from .corridors import (
    ANGLE_TOL,
    SurfaceIndex,
    index_of,
    straight_to_path,
    straighten_corridor,
)
from .paths import (
    ComplexPath,
    DisconnectedError,
    GeodesyError,
    NonConvergenceError,
    PathPoint,
    combine,
    point_vector,
    same_point,
    simplex_vectors,
    support_face,
    transfer,
)


def _require_surface_like(complex: MkComplex):
    if not complex.is_pure(2):
        raise GeodesyError("geodesy needs a pure 2-complex")
    ix = index_of(complex)
    for e, ts in ix.edge_tris.items():
        if len(ts) > 2:
            raise GeodesyError(f"edge {e} lies in {len(ts)} triangles; geodesy supports at most two")
    return ix


def _fan_walk(ix: SurfaceIndex, v, a, b):
    """Shortest walk of (edge, triangle) steps around vertex v from triangle a to b, or None."""
    lo = ix.link_of(v, a)
    if b not in lo.index:
        return None
    i, j = lo.index[a], lo.index[b]
    n = len(lo.corners)
    ups = (j - i) % n if lo.kind == "cycle" else (j - i if j >= i else None)
    downs = (i - j) % n if lo.kind == "cycle" else (i - j if i >= j else None)
    use_up = downs is None or (ups is not None and ups <= downs)
    walk, c = [], i
    for _ in range(ups if use_up else downs):
        if use_up:
            e = lo.high[c]
            c = (c + 1) % n
        else:
            e = lo.low[c]
            c = (c - 1) % n
        walk.append((e, lo.corners[c][0]))
    return walk


def _corridor_segments(ix: SurfaceIndex, path: ComplexPath):
    """Split a path into corridors; a split happens at vertices whose link pieces are disconnected."""
    wps = path.waypoints
    segs = []
    tris, cross = [wps[0].sid], []
    start = wps[0]
    for a, b in zip(wps[:-1], wps[1:]):
        if a.sid == b.sid:
            continue
        kind, cid = support_face(ix.c, a)
        if kind == "edge":
            cross.append(cid)
            tris.append(b.sid)
            continue
        if kind != "vertex":
            raise GeodesyError("consecutive waypoints in different triangles must share a face point")
        walk = _fan_walk(ix, cid, a.sid, b.sid)
        if walk is None:
            segs.append((tuple(tris), tuple(cross), start, a))
            tris, cross, start = [b.sid], [], b
            continue
        for e, t in walk:
            cross.append(e)
            tris.append(t)
    segs.append((tuple(tris), tuple(cross), start, wps[-1]))
    return segs


def straighten_path(path: ComplexPath, max_iters: int = 200, tol: float = ANGLE_TOL,
                    history: list | None = None) -> ComplexPath:
    """Local geodesic with the same endpoints, homotopic to the input.

    Each interior breakpoint ends with angle at least pi - tol on both sides.
    Lengths after each vertex flip are appended to ``history`` when given.
    """
    ix = _require_surface_like(path.complex)
    if len(path.waypoints) == 1:
        return path
    out = None
    for tris, cross, p, q in _corridor_segments(ix, path):
        st = straighten_corridor(ix, tris, cross, p, q, max_iters=max_iters, tol=tol)
        if history is not None:
            history.extend(st.history)
        piece = straight_to_path(ix, st, p, q)
        if out is None:
            out = piece
        else:
            out = ComplexPath(ix.c, out.waypoints + piece.waypoints,
                              out.virtual[:-1] + (True,) + piece.virtual)
    return out


@dataclass
class GeodesicSearch:
    """Result of a shortest-geodesic search: the best path and every straightened seed."""
    path: ComplexPath
    candidates: list

    @property
    def length(self) -> float:
        return self.path.length


def _containing(ix: SurfaceIndex, p: PathPoint):
    out = []
    for sid in sorted(ix.labels):
        t = transfer(ix.c, p, sid)
        if t is not None:
            out.append(t)
    return out


def geodesic_candidates(complex: MkComplex, p: PathPoint, q: PathPoint, k: int = 5,
                        max_iters: int = 200) -> GeodesicSearch:
    """Straighten the k shortest dual-graph corridors from p to q and keep the shortest result."""
    ix = _require_surface_like(complex)
    if same_point(complex, p, q, 0.0):
        z = ComplexPath(complex, (p,))
        return GeodesicSearch(z, [z])
    G = ix.dual_graph().copy()
    kap = complex.kappa
    starts, ends = _containing(ix, p), _containing(ix, q)
    if not starts or not ends:
        raise GeodesyError("endpoints must lie in 2-simplices")
    for tag, pts in (("__src__", starts), ("__dst__", ends)):
        for x in pts:
            V = simplex_vectors(complex, x.sid)
            c = combine(kap, V, (1 / 3, 1 / 3, 1 / 3))
            G.add_edge(tag, x.sid, w=raw_dist(kap, combine(kap, V, x.bary), c))
    smap = {x.sid: x for x in starts}
    emap = {x.sid: x for x in ends}
    try:
        gen = nx.shortest_simple_paths(G, "__src__", "__dst__", weight="w")
        seeds = list(itertools.islice(gen, k))
    except nx.NetworkXNoPath:
        raise DisconnectedError("endpoints lie in different components") from None
    cands = []
    for route in seeds:
        tris = tuple(route[1:-1])
        cross = tuple(G[a][b]["e"] for a, b in zip(tris[:-1], tris[1:]))
        st = straighten_corridor(ix, tris, cross, smap[tris[0]], emap[tris[-1]], max_iters=max_iters)
        cands.append((st.length, straight_to_path(ix, st, smap[tris[0]], emap[tris[-1]])))
    best = min(cands, key=lambda c: c[0])[1]
    return GeodesicSearch(best, [c[1] for c in cands])


def shortest_geodesic(complex: MkComplex, p: PathPoint, q: PathPoint, k: int = 5) -> ComplexPath:
    return geodesic_candidates(complex, p, q, k).path


def distance(complex: MkComplex, p: PathPoint, q: PathPoint, k: int = 5) -> float:
    return geodesic_candidates(complex, p, q, k).length


def _frames(ix: SurfaceIndex, sid):
    """Triangles sharing a vertex with sid, unfolded into sid's frame: {nb: 3x3 positions}."""
    key = ("frames", sid)
    cache = ix.c.cache()
    if key in cache:
        return cache[key]
    out = {sid: ix.unfold((sid,), ())[0][0]}
    for v in ix.vcls[sid]:
        for lo in ix.link_orders(v):
            if sid not in lo.index or lo.kind == "graph":
                continue
            for nb, _ in lo.corners:
                if nb in out:
                    continue
                walk = _fan_walk(ix, v, sid, nb)
                tris = (sid,) + tuple(t for _, t in walk)
                cross = tuple(e for e, _ in walk)
                out[nb] = ix.unfold(tris, cross)[0][-1]
    cache[key] = out
    return out


def hausdorff(a: ComplexPath, b: ComplexPath, samples: int = 100) -> float:
    """Symmetric Hausdorff distance between two paths of a 2-complex.

    Sample points of one path are compared with the straight pieces of the other
    lying in the same or a vertex-adjacent triangle, unfolded into a common frame;
    inf is returned when a sample has no such piece nearby.
    """
    ix = index_of(a.complex)
    k = a.complex.kappa

    def one_way(P, Q):
        by_sid = {}
        for sid, u, w in Q.pieces():
            by_sid.setdefault(sid, []).append((u, w))
        if not by_sid:
            qv = Q.waypoints[0]
            by_sid[qv.sid] = [(qv, qv)]
        worst = 0.0
        for sid, C in _sample_coefficients(P, samples).items():
            fr = _frames(ix, sid)
            X = C @ fr[sid]
            X = X / X[:, :1] if k == 0 else normalize_model(k, X)
            best = np.full(len(X), math.inf)
            for nb, pos in fr.items():
                for u, w in by_sid.get(nb, ()):
                    d = raw_segment_distances(k, X, combine(k, pos, u.bary), combine(k, pos, w.bary))
                    best = np.minimum(best, d)
            worst = max(worst, float(best.max()))
        return worst
    return max(one_way(a, b), one_way(b, a))


def _sample_coefficients(P: ComplexPath, samples: int) -> dict:
    """Evenly spaced points of P as {sid: rows of vertex coefficients in that simplex}."""
    k = P.complex.kappa
    pcs, lens = P.pieces(), P.piece_lengths()
    if not pcs:
        p = P.waypoints[0]
        return {p.sid: np.array([p.bary], dtype=float)}
    cum = np.concatenate([[0.0], np.cumsum(lens)])
    s = np.linspace(0.0, cum[-1], samples)
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(pcs) - 1)
    out = {}
    for i in np.unique(idx):
        sid, u, w = pcs[i]
        l = lens[i]
        t = np.zeros(int(np.sum(idx == i))) if l == 0 else np.clip((s[idx == i] - cum[i]) / l, 0.0, 1.0)
        V = simplex_vectors(P.complex, sid)
        X = raw_geodesic_points(k, combine(k, V, u.bary), combine(k, V, w.bary), t)
        # coefficients c with c @ V proportional to X; combine() renormalizes
        C = np.linalg.lstsq(V.T, X.T, rcond=None)[0].T
        out.setdefault(sid, []).append(C)
    return {sid: np.vstack(v) for sid, v in out.items()}


def tighten_closed(loop: ComplexPath, max_iters: int = 200, tol: float = 1e-9,
                   max_rounds: int = 50, history: list | None = None) -> ComplexPath:
    """Closed geodesic freely homotopic to the loop, or a contracted report.

    The loop is straightened as a path from a base point back to itself, then
    re-based at its midpoint so the old base point is free to move; this repeats
    until the length settles.
    """
    _require_surface_like(loop.complex)
    if not same_point(loop.complex, loop.start, loop.end, 1e-7):
        raise GeodesyError("loop must start and end at the same point")
    cur = _close(loop)
    L = cur.length
    hist = history if history is not None else []
    hist.append(L)
    for _ in range(max_rounds):
        if L < tol:
            return ComplexPath(loop.complex, (cur.start,), closed=True, contracted=True)
        cur = straighten_path(_close(cur), max_iters=max_iters)
        cur = _rebase(cur, cur.length / 2.0)
        cur = straighten_path(_close(cur), max_iters=max_iters)
        newL = cur.length
        hist.append(newL)
        if newL < tol:
            return ComplexPath(loop.complex, (cur.start,), closed=True, contracted=True)
        if L - newL <= 1e-12 * max(L, 1.0):
            return ComplexPath(loop.complex, cur.waypoints, cur.virtual, closed=True)
        L = newL
    raise NonConvergenceError("closed loop did not settle", L)


def _close(path: ComplexPath) -> ComplexPath:
    """Make sure the last waypoint is expressed in the first simplex (so the corridor is cyclic)."""
    wps = list(path.waypoints)
    virt = list(path.virtual)
    if wps[-1].sid != wps[0].sid:
        t = transfer(path.complex, wps[-1], wps[0].sid)
        if t is not None and t != wps[-1]:
            wps.append(t)
            virt.append(False)
    return ComplexPath(path.complex, tuple(wps), tuple(virt))


def _rebase(path: ComplexPath, s: float) -> ComplexPath:
    """Rotate a closed path so it starts at arclength s."""
    L = path.length
    first = path.subpath(s, L)
    second = path.subpath(0.0, s)
    w = list(first.waypoints)
    w2 = list(second.waypoints)
    if w[-1].sid != w2[0].sid and not same_point(path.complex, w[-1], w2[0], 1e-7):
        t = transfer(path.complex, w2[0], w[-1].sid)
        if t is not None:
            w.append(t)
    return ComplexPath(path.complex, tuple(w + w2))
