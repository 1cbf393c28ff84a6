"""Command-line front end.

Exit codes: 0 everything passed, 1 a check failed or the input is invalid,
2 usage, parse or I/O error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, corpus, polygons
from . import fileformat as ff
from .catcheck import (
    convexity_report,
    link_condition,
    shortest_link_loops,
    slimness_report,
    triangle_sides,
    cat_inequality_report,
)
from .complexcore import ComplexError, NotASurfaceError
from .crescent2d import CrescentError, IncompressibilityError, find_crescents, two_convex_hull
from .geodesy import GeodesyError, PathPoint, geodesic_candidates, path_through, tighten_closed, vertex_point
from .geodesy.surfaces import SingularSurface, gauss_bonnet_terms
from .hypgeom import hyperbolic_from_klein, raw_dist
from .vertexclass import SphericalPolygon, VertexClassError, classify_vertex, two_convexity_decision

CHECKS = ("link", "cat", "convexity", "slim", "classify", "two-convex")
COMPLEX_CHECKS = ("link", "cat", "convexity", "slim")
LINK_CHECKS = ("classify", "two-convex")
CAT_TOL = 1e-7
GB_TOL = 1e-9


class UsageError(Exception):
    """Bad arguments or input that cannot be processed (exit 2)."""


# ---------------------------------------------------------------- reports

def _plain(x):
    """JSON-safe copy with numpy scalars and arrays turned into Python values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def _digest(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, separators=(",", ":")).encode()).hexdigest()


class Report:
    def __init__(self, command: str, source: bytes | None, seed=None, samples=None):
        self.body = {"tool": "mkcat", "version": __version__, "command": command}
        if source is not None:
            self.body["input_sha256"] = hashlib.sha256(source).hexdigest()
        if seed is not None:
            self.body["seed"] = seed
        if samples is not None:
            self.body["samples"] = samples
        self.results = []
        self.extra = {}

    def add(self, name: str, status: str, magnitude=None, **details):
        r = {"name": name, "status": status}
        if magnitude is not None:
            r["magnitude"] = magnitude
        r.update(details)
        self.results.append(r)

    @property
    def failed(self) -> bool:
        return any(r["status"] == "fail" for r in self.results)

    def payload(self) -> dict:
        out = dict(self.body)
        out["status"] = "fail" if self.failed else "pass"
        out["results"] = self.results
        out.update(self.extra)
        return _plain(out)

    def machine(self, wall_time=None) -> str:
        p = self.payload()
        p["digest"] = _digest(p)
        if wall_time is not None:
            p["wall_time"] = wall_time
        return json.dumps(p, indent=2) + "\n"

    def human(self, wall_time=None) -> str:
        p = self.payload()
        lines = [f"{p['command']}: {p['status']}"]
        for r in p["results"]:
            mag = f" (magnitude {r['magnitude']:.3e})" if isinstance(r.get("magnitude"), float) else ""
            note = f" - {r['note']}" if "note" in r else ""
            lines.append(f"  {r['name']}: {r['status']}{mag}{note}")
            for k, v in r.items():
                if k not in ("name", "status", "magnitude", "note") and isinstance(v, (bool, int, float, str)):
                    lines.append(f"    {k}: {v}")
        for k, v in self.extra.items():
            if k in ("trace",):
                for it in v:
                    lines.append(f"  level {it['level']}: {len(it['moves'])} move(s), {it['vertices']} vertices")
            elif isinstance(v, (int, float, str)):
                lines.append(f"  {k}: {v}")
        if wall_time is not None:
            lines.append(f"  wall time: {wall_time:.3f} s")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- input helpers

def _read(path: str):
    try:
        raw = Path(path).read_bytes()
    except OSError as err:
        raise UsageError(f"cannot read {path}: {err.strerror or err}") from None
    try:
        doc = ff.parse(raw.decode("utf-8"))
    except UnicodeDecodeError:
        raise UsageError(f"{path} is not UTF-8 text") from None
    except ff.FormatError as err:
        raise UsageError(f"{path}: {err}") from None
    return raw, doc


def _complex(doc, path):
    if not doc.has_complex:
        raise UsageError(f"{path} holds no complex")
    diags = doc.diagnostics()
    if diags:
        raise UsageError(f"{path} is invalid: " + "; ".join(str(d) for d in diags))
    return doc.build()


def _point(complex, text: str) -> PathPoint:
    """``sid:label`` for a vertex or ``sid:b0,b1,b2`` for barycentric coordinates."""
    sid, sep, rest = text.partition(":")
    if not sep:
        raise UsageError(f"point {text!r} must look like sid:label or sid:b0,b1,b2")
    try:
        s = complex.simplex(sid)
    except (KeyError, ComplexError):
        raise UsageError(f"unknown simplex {sid!r}") from None
    if rest in s.vertex_labels:
        return vertex_point(complex, sid, rest)
    try:
        bary = tuple(float(x) for x in rest.split(","))
        if len(bary) != s.dim + 1:
            raise ValueError
        return PathPoint(sid, bary)
    except (ValueError, GeodesyError):
        raise UsageError(f"bad point {text!r}") from None


def _random_points(complex, rng, k):
    top = max(s.dim for s in complex.simplices)
    sids = sorted(s.id for s in complex.simplices if s.dim == min(top, 2))
    out = []
    for _ in range(k):
        sid = sids[int(rng.integers(len(sids)))]
        dim = complex.simplex(sid).dim
        out.append(PathPoint(sid, tuple(float(x) for x in rng.dirichlet(np.ones(dim + 1)))))
    return out


# ---------------------------------------------------------------- commands

def cmd_validate(args):
    raw, doc = _read(args.file)
    rep = Report("validate", raw)
    diags = doc.diagnostics()
    if diags:
        for d in diags:
            rep.add(f"line {d.line}", "fail", note=f"{d.kind}: {d.message}")
    else:
        parts = []
        if doc.has_complex:
            parts.append(f"{len(doc.simplices)} simplices, {len(doc.gluings)} gluings")
        if doc.polygon is not None:
            parts.append(f"polygon with {len(doc.polygon)} vertices, {len(doc.marks)} marks")
        if doc.links:
            parts.append(f"{len(doc.links)} links")
        rep.add("structure", "pass", note="; ".join(parts) or "empty")
    return rep


def _links(doc):
    return [(name, SphericalPolygon(dirs), outward) for name, dirs, outward in doc.links]


def cmd_check(args):
    raw, doc = _read(args.file)
    wanted = [c.strip() for c in args.checks.split(",")] if args.checks else None
    if wanted is not None:
        unknown = [c for c in wanted if c not in CHECKS]
        if unknown:
            raise UsageError(f"unknown check(s): {', '.join(unknown)}; choose from {', '.join(CHECKS)}")
    else:
        wanted = (list(COMPLEX_CHECKS) if doc.has_complex else []) + (list(LINK_CHECKS) if doc.links else [])
    rep = Report("check", raw, seed=args.seed, samples=args.samples)
    complex = _complex(doc, args.file) if any(c in COMPLEX_CHECKS for c in wanted) else None
    if any(c in LINK_CHECKS for c in wanted):
        if not doc.links:
            raise UsageError(f"{args.file} holds no link records")
        diags = [d for d in doc.diagnostics() if d.kind == "bad-link"]
        if diags:
            raise UsageError("; ".join(str(d) for d in diags))
    for i, name in enumerate(wanted):
        seed = int(np.random.SeedSequence([args.seed, i]).generate_state(1)[0])
        rng = np.random.default_rng(seed)
        if name == "link":
            v = link_condition(complex)
            if v is None:
                rep.add("link", "pass")
            else:
                rep.add("link", "fail", v.magnitude, witness=v.witness)
            if args.figure:
                from .plotting import plot_link_lengths
                loops = shortest_link_loops(complex)
                plot_link_lengths({k: val[0] for k, val in loops.items()}, args.figure)
        elif name == "cat":
            worst = None
            for t in range(args.triangles):
                p, q, r = _random_points(complex, rng, 3)
                sides = triangle_sides(complex, p, q, r)
                v = cat_inequality_report(complex, sides, args.samples, seed + t)
                if v is not None and (worst is None or v.magnitude > worst.magnitude):
                    worst = v
            if worst is None or worst.magnitude <= CAT_TOL:
                rep.add("cat", "pass", 0.0 if worst is None else worst.magnitude, triangles=args.triangles)
            else:
                rep.add("cat", "fail", worst.magnitude, triangles=args.triangles, witness=worst.witness)
        elif name == "convexity":
            p1, q1, p2, q2 = _random_points(complex, rng, 4)
            c1 = geodesic_candidates(complex, p1, q1).path
            c2 = geodesic_candidates(complex, p2, q2).path
            v = convexity_report(complex, c1, c2, n_samples=min(args.samples, 50))
            if v is None or v.magnitude <= CAT_TOL:
                rep.add("convexity", "pass", 0.0 if v is None else v.magnitude)
            else:
                rep.add("convexity", "fail", v.magnitude, witness=v.witness)
        elif name == "slim":
            est = slimness_report(complex, n_triples=args.triangles, seed=seed)
            rep.add("slim", "info", est.delta, triples=est.n_triples,
                    note="sampled lower bound on the slimness constant")
        elif name == "classify":
            for lname, poly, outward in _links(doc):
                try:
                    vc = classify_vertex(poly, outward)
                except VertexClassError as err:
                    rep.add(f"classify {lname}", "fail", note=str(err))
                    continue
                rep.add(f"classify {lname}", "pass", vc.margin, vertex_class=vc.kind.value, h_vertex=vc.h_vertex)
        elif name == "two-convex":
            links = [(poly, outward) for _, poly, outward in _links(doc)]
            try:
                dec = two_convexity_decision(links)
            except VertexClassError as err:
                rep.add("two-convex", "fail", note=str(err))
                continue
            if dec.passed:
                rep.add("two-convex", "pass")
            else:
                rep.add("two-convex", "fail", failing_link=doc.links[dec.failing][0])
    return rep


def cmd_geodesic(args):
    raw, doc = _read(args.file)
    rep = Report("geodesic", raw)
    if not doc.has_complex and doc.polygon is not None:
        return _polygon_geodesic(args, doc, rep)
    complex = _complex(doc, args.file)
    try:
        if args.loop:
            pts = [_point(complex, s) for s in args.loop.split(";") if s.strip()]
            if len(pts) < 2:
                raise UsageError("a loop needs at least two points")
            loop = path_through(complex, pts + [pts[0]])
            hist = []
            res = tighten_closed(loop, history=hist)
            rep.add("loop", "pass", contracted=res.contracted, length=0.0 if res.contracted else res.length,
                    path=[[w.sid, list(w.bary)] for w in res.waypoints])
            if args.figure:
                from .plotting import plot_path_lengths
                plot_path_lengths(hist, args.figure)
        else:
            if not (args.from_ and args.to):
                raise UsageError("give --from and --to, or --loop")
            p, q = _point(complex, args.from_), _point(complex, args.to)
            res = geodesic_candidates(complex, p, q)
            rep.add("geodesic", "pass", length=res.length,
                    path=[[w.sid, list(w.bary)] for w in res.path.waypoints])
    except GeodesyError as err:
        rep.add("geodesic", "fail", note=str(err))
    return rep


def _polygon_geodesic(args, doc, rep):
    if args.loop:
        raise UsageError("--loop needs a complex")
    try:
        i, j = int(args.from_), int(args.to)
    except (TypeError, ValueError):
        raise UsageError("on polygon files --from and --to are vertex indices") from None
    P = doc.hpolygon()
    n = len(P)
    if not (0 <= i < n and 0 <= j < n):
        raise UsageError(f"vertex indices must lie in 0..{n - 1}")
    X = hyperbolic_from_klein(P.klein[[i, j]])
    from shapely.geometry import LineString
    inside = bool(P.shape().buffer(1e-12).covers(LineString(P.klein[[i, j]])))
    rep.add("geodesic", "pass", length=raw_dist(-1, X[0], X[1]), chord_inside=inside,
            path=P.klein[[i, j]])
    return rep


def cmd_gb_audit(args):
    raw, doc = _read(args.file)
    complex = _complex(doc, args.file)
    rep = Report("gb-audit", raw)
    try:
        terms = gauss_bonnet_terms(SingularSurface(complex))
    except NotASurfaceError as err:
        rep.add("surface", "fail", note=str(err))
        return rep
    ok = terms.residual <= GB_TOL
    rep.add("gauss-bonnet", "pass" if ok else "fail", terms.residual, area=terms.area,
            cone_defects=terms.interior, boundary_turning=terms.boundary, euler_characteristic=terms.chi,
            non_cat_vertices=list(terms.non_cat))
    if args.figure:
        from .plotting import plot_gauss_bonnet
        plot_gauss_bonnet(terms, args.figure)
    return rep


def cmd_crescent_hull(args):
    raw, doc = _read(args.file)
    if doc.polygon is None:
        raise UsageError(f"{args.file} holds no polygon section")
    diags = [d for d in doc.diagnostics() if d.kind in ("bad-polygon", "mark-outside")]
    if diags:
        rep = Report("crescent-hull", raw)
        for d in diags:
            rep.add(f"line {d.line}", "fail", note=f"{d.kind}: {d.message}")
        return rep
    if not args.epsilon > 0.0:
        raise UsageError("--epsilon must be positive")
    P, marks = doc.hpolygon(), doc.marked()
    rep = Report("crescent-hull", raw)
    rep.body["epsilon"] = args.epsilon
    try:
        cs = find_crescents(P)
        res = two_convex_hull(P, marks, args.epsilon)
    except IncompressibilityError as err:
        rep.add("hull", "fail", note=str(err), crescent=[err.crescent.start, err.crescent.end])
        return rep
    except CrescentError as err:
        rep.add("hull", "fail", note=str(err))
        return rep
    rep.add("hull", "pass", crescents=len(cs), moves=sum(len(it.moves) for it in res.trace),
            convex=res.polygon.is_convex())
    rep.extra["crescents"] = [{"arc": [c.start, c.end], "side": c.side, "depth": c.depth,
                               "folding_number": c.folding_number, "size": c.size} for c in cs]
    rep.extra["trace"] = [{"level": it.level, "moves": [list(m) for m in it.moves], "vertices": it.vertices}
                          for it in res.trace]
    rep.extra["hull"] = res.polygon.klein
    if args.figure:
        from .plotting import plot_hull_trace
        plot_hull_trace(P, res, args.figure, marks)
    return rep


def _gen_doc(args):
    k = args.kind
    if k == "cone":
        if args.triangles < 3 or not args.side > 0:
            raise UsageError("cone needs --triangles >= 3 and --side > 0")
        return ff.from_complex(corpus.cone(args.triangles, args.side, args.curvature))
    if k == "cylinder":
        if args.columns < 3 or args.rows < 1:
            raise UsageError("cylinder needs --columns >= 3 and --rows >= 1")
        return ff.from_complex(corpus.flat_cylinder(args.columns, args.rows, args.side))
    if k == "torus":
        return ff.from_complex(corpus.flat_torus7(args.side))
    if k == "notched-polygon":
        if not 0.0 < args.depth < 1.0:
            raise UsageError("--depth must lie in (0, 1)")
        return ff.from_polygon(polygons.notched_square(args.depth))
    if k == "spiral-polygon":
        if args.turns < 1 or args.turns > 3:
            raise UsageError("--turns must lie in 1..3")
        return ff.from_polygon(polygons.spiral_polygon(args.turns))
    raise UsageError(f"unknown kind {k!r}")


def cmd_gen(args):
    try:
        doc = _gen_doc(args)
    except (ValueError, ComplexError) as err:
        raise UsageError(str(err)) from None
    return ff.emit(doc)


# ---------------------------------------------------------------- wiring

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mkcat", description="Checks and constructions for metric complexes.")
    p.add_argument("--version", action="version", version=f"mkcat {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, figure=False):
        sp.add_argument("file")
        sp.add_argument("--format", choices=("human", "machine"), default="human")
        sp.add_argument("--output", help="write the report here instead of stdout")
        sp.add_argument("--timing", action="store_true", help="add wall time (not covered by the digest)")
        if figure:
            sp.add_argument("--figure", help="render a figure to this file (png, svg or pdf)")

    sp = sub.add_parser("validate", help="parse and validate a file")
    common(sp)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("check", help="run curvature and classification checks")
    common(sp, figure=True)
    sp.add_argument("--checks", help=f"comma-separated subset of {','.join(CHECKS)}")
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--triangles", type=int, default=2, help="random triangles for cat and slim")
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("geodesic", help="shortest geodesic between points, or tighten a closed loop")
    common(sp, figure=True)
    sp.add_argument("--from", dest="from_")
    sp.add_argument("--to")
    sp.add_argument("--loop", help="points sid:b0,b1,b2 separated by ';'")
    sp.set_defaults(func=cmd_geodesic)

    sp = sub.add_parser("gb-audit", help="Gauss-Bonnet residual of a surface")
    common(sp, figure=True)
    sp.set_defaults(func=cmd_gb_audit)

    sp = sub.add_parser("crescent-hull", help="2-convex hull of a polygon with marked geodesics")
    common(sp, figure=True)
    sp.add_argument("--epsilon", type=float, default=1e-6)
    sp.set_defaults(func=cmd_crescent_hull)

    sp = sub.add_parser("gen", help="write a fixture file")
    sp.add_argument("kind", choices=("cone", "cylinder", "torus", "notched-polygon", "spiral-polygon"))
    sp.add_argument("--triangles", type=int, default=7)
    sp.add_argument("--side", type=float, default=1.0)
    sp.add_argument("--curvature", type=int, choices=(-1, 0, 1), default=-1)
    sp.add_argument("--columns", type=int, default=4)
    sp.add_argument("--rows", type=int, default=2)
    sp.add_argument("--depth", type=float, default=0.4)
    sp.add_argument("--turns", type=int, default=1)
    sp.add_argument("--output")
    sp.add_argument("--seed", type=int, default=0, help="accepted for symmetry; generators are deterministic")
    sp.set_defaults(func=cmd_gen)
    return p


def _write(text: str, dest):
    if dest:
        try:
            Path(dest).write_text(text, encoding="utf-8")
        except OSError as err:
            raise UsageError(f"cannot write {dest}: {err.strerror or err}") from None
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    try:
        out = args.func(args)
        if isinstance(out, str):
            _write(out, args.output)
            return 0
        wall = time.perf_counter() - t0 if args.timing else None
        text = out.machine(wall) if args.format == "machine" else out.human(wall)
        _write(text, args.output)
        return 1 if out.failed else 0
    except UsageError as err:
        print(f"mkcat: error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
