"""Line-oriented text format for complexes, polygons and marked geodesics.

Example::

    mkcat 1
    curvature -1
    simplex t0 2 c r0 r1 | c-r0=1.0 c-r1=1.0 r0-r1=1.0
    glue t0 0 t1 0 | r0=r0 r1=r1
    polygon
    vertex -0.5 -0.5
    mark 0.0 0.0
    mark -0.1 0.2 0.3 0.1

Oriented vertex links for classification are ``link`` records listing unit
directions after the bar, with an outward vector (or ``-``) before it::

    link v7 0.0 0.0 -1.0 | 1.0 0.0 0.1 0.0 1.0 0.1 -1.0 0.0 0.1

Blank lines and lines starting with ``#`` are ignored.  Floats are written with
``repr`` so that emitting a parsed file reproduces every value bit for bit.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import LineString, Point
from shapely.ops import unary_union

from .complexcore import ComplexValidationError, Gluing, MetricSimplex, build_complex
from .crescent2d import HPolygon, MarkedGeodesics, find_crescents
from .vertexclass import SphericalPolygon

VERSION = 1
MAGIC = "mkcat"
_LABEL = re.compile(r"^[A-Za-z0-9_.:]+$")


class FormatError(ValueError):
    """Parse failure anchored at a 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


@dataclass(frozen=True)
class Diagnostic:
    line: int
    kind: str
    message: str

    def __str__(self):
        return f"line {self.line}: {self.kind}: {self.message}"


@dataclass(eq=False)
class ComplexFile:
    kappa: int
    simplices: list = field(default_factory=list)
    gluings: list = field(default_factory=list)
    polygon: np.ndarray | None = None
    marks: list = field(default_factory=list)
    links: list = field(default_factory=list)  # (name, directions (n, 3), outward vector or None)
    version: int = VERSION
    lines: dict = field(default_factory=dict)  # (record kind, index) -> line number

    def __eq__(self, other):
        if not isinstance(other, ComplexFile):
            return NotImplemented
        same_poly = (self.polygon is None and other.polygon is None) or (
            self.polygon is not None and other.polygon is not None and np.array_equal(self.polygon, other.polygon))
        return (self.version == other.version and self.kappa == other.kappa and same_poly
                and self.simplices == other.simplices and self.gluings == other.gluings
                and len(self.marks) == len(other.marks)
                and all(np.array_equal(a, b) for a, b in zip(self.marks, other.marks))
                and len(self.links) == len(other.links)
                and all(a[0] == b[0] and np.array_equal(a[1], b[1])
                        and ((a[2] is None and b[2] is None) or (a[2] is not None and b[2] is not None
                                                                 and np.array_equal(a[2], b[2])))
                        for a, b in zip(self.links, other.links)))

    @property
    def has_complex(self) -> bool:
        return bool(self.simplices)

    def build(self, allow_degenerate: bool = False):
        return build_complex(self.kappa, self.simplices, self.gluings, allow_degenerate=allow_degenerate)

    def hpolygon(self) -> HPolygon:
        if self.polygon is None:
            raise ValueError("file has no polygon section")
        return HPolygon(self.polygon)

    def marked(self) -> MarkedGeodesics:
        return MarkedGeodesics.of(*self.marks)

    def diagnostics(self) -> list:
        """Validation problems of the whole file, each tied to a source line."""
        out = []
        if self.simplices:
            try:
                self.build()
            except ComplexValidationError as err:
                for v in err.violations:
                    out.append(Diagnostic(self.lines.get(v.record, 0), v.kind, v.message))
        if self.polygon is not None:
            try:
                HPolygon(self.polygon)
            except ValueError as err:
                out.append(Diagnostic(self.lines.get(("polygon", 0), 0), "bad-polygon", str(err)))
            else:
                P = HPolygon(self.polygon)
                # marks may also sit on a pocket chord (the closed side of a crescent)
                chords = [LineString(c.i_part) for c in find_crescents(P, size_samples=2) if c.side == "outer"]
                allowed = unary_union([P.shape(), *chords]).buffer(1e-12)
                for i, m in enumerate(self.marks):
                    pts = MarkedGeodesics.of(m).samples(0, 8)
                    if not all(allowed.covers(Point(p)) for p in pts):
                        out.append(Diagnostic(self.lines.get(("mark", i), 0), "mark-outside",
                                              f"marked element {i} leaves the polygon"))
        elif self.marks:
            out.append(Diagnostic(self.lines.get(("mark", 0), 0), "orphan-mark", "marks need a polygon section"))
        for i, (name, dirs, _) in enumerate(self.links):
            try:
                SphericalPolygon(dirs)
            except ValueError as err:
                out.append(Diagnostic(self.lines.get(("link", i), 0), "bad-link", f"{name}: {err}"))
        return out


def _float(tok: str, line: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise FormatError(line, f"not a number: {tok!r}") from None


def _int(tok: str, line: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise FormatError(line, f"not an integer: {tok!r}") from None


def _label(tok: str, line: int) -> str:
    if not _LABEL.match(tok):
        raise FormatError(line, f"bad label {tok!r}")
    return tok


def _split_bar(parts, line):
    if "|" not in parts:
        raise FormatError(line, "missing '|' separator")
    i = parts.index("|")
    return parts[:i], parts[i + 1:]


def _pairs(tokens, line, sep):
    out = []
    for tok in tokens:
        if tok.count(sep) != 1:
            raise FormatError(line, f"expected x{sep}y, got {tok!r}")
        out.append(tuple(tok.split(sep)))
    return out


def parse(text: str) -> ComplexFile:
    """Parse a document; raises :class:`FormatError` on the first malformed line."""
    doc = None
    in_polygon = False
    poly = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        head = parts[0]
        if doc is None:
            if head != MAGIC or len(parts) != 2:
                raise FormatError(no, f"expected header '{MAGIC} {VERSION}'")
            if _int(parts[1], no) != VERSION:
                raise FormatError(no, f"unsupported version {parts[1]}")
            doc = ComplexFile(kappa=None)
            continue
        if head == "curvature":
            if doc.kappa is not None:
                raise FormatError(no, "curvature given twice")
            if len(parts) != 2:
                raise FormatError(no, "curvature takes one value")
            doc.kappa = _int(parts[1], no)
            if doc.kappa not in (-1, 0, 1):
                raise FormatError(no, "curvature must be -1, 0 or 1")
            continue
        if doc.kappa is None:
            raise FormatError(no, "curvature line must come before records")
        if head == "simplex":
            if in_polygon:
                raise FormatError(no, "simplex records must precede the polygon section")
            left, right = _split_bar(parts[1:], no)
            if len(left) < 3:
                raise FormatError(no, "simplex needs id, dimension and labels")
            sid, dim, labels = _label(left[0], no), _int(left[1], no), [_label(x, no) for x in left[2:]]
            lengths = {}
            for key, val in _pairs(right, no, "="):
                ab = _pairs([key], no, "-")[0]
                lengths[frozenset(ab)] = _float(val, no)
            try:
                s = MetricSimplex(sid, dim, tuple(labels), lengths)
            except (TypeError, ValueError) as err:
                raise FormatError(no, str(err)) from None
            doc.lines[("simplex", len(doc.simplices))] = no
            doc.simplices.append(s)
        elif head == "glue":
            if in_polygon:
                raise FormatError(no, "gluing records must precede the polygon section")
            left, right = _split_bar(parts[1:], no)
            if len(left) != 4:
                raise FormatError(no, "glue needs: simplex face simplex face")
            vm = dict(_pairs(right, no, "="))
            g = Gluing((_label(left[0], no), _int(left[1], no)), (_label(left[2], no), _int(left[3], no)), vm)
            doc.lines[("gluing", len(doc.gluings))] = no
            doc.gluings.append(g)
        elif head == "link":
            if in_polygon:
                raise FormatError(no, "link records must precede the polygon section")
            left, right = _split_bar(parts[1:], no)
            if len(left) not in (2, 4) or (len(left) == 2 and left[1] != "-"):
                raise FormatError(no, "link needs a name and an outward vector (3 numbers) or '-'")
            name = _label(left[0], no)
            outward = None if len(left) == 2 else np.array([_float(x, no) for x in left[1:]])
            vals = [_float(x, no) for x in right]
            if len(vals) % 3 or not vals:
                raise FormatError(no, "link directions come in triples")
            doc.lines[("link", len(doc.links))] = no
            doc.links.append((name, np.array(vals).reshape(-1, 3), outward))
        elif head == "polygon":
            if in_polygon or len(parts) != 1:
                raise FormatError(no, "one bare 'polygon' line opens the section")
            in_polygon = True
            doc.lines[("polygon", 0)] = no
        elif head == "vertex":
            if not in_polygon:
                raise FormatError(no, "vertex outside the polygon section")
            if len(parts) != 3:
                raise FormatError(no, "vertex takes two Klein coordinates")
            poly.append((_float(parts[1], no), _float(parts[2], no)))
        elif head == "mark":
            if not in_polygon:
                raise FormatError(no, "mark outside the polygon section")
            if len(parts) not in (3, 5):
                raise FormatError(no, "mark takes a point (2 numbers) or a chord (4 numbers)")
            vals = [_float(x, no) for x in parts[1:]]
            doc.lines[("mark", len(doc.marks))] = no
            doc.marks.append(np.array(vals).reshape(-1, 2))
        else:
            raise FormatError(no, f"unknown record {head!r}")
    if doc is None:
        raise FormatError(1, "empty document")
    if doc.kappa is None:
        raise FormatError(len(text.splitlines()) or 1, "missing curvature line")
    if in_polygon:
        doc.polygon = np.array(poly, dtype=float).reshape(-1, 2)
    return doc


def _num(x: float) -> str:
    return repr(float(x))


def emit(doc: ComplexFile) -> str:
    out = [f"{MAGIC} {doc.version}", f"curvature {doc.kappa}"]
    for s in doc.simplices:
        lens = " ".join(f"{a}-{b}={_num(s.length(a, b))}" for a, b in itertools.combinations(s.vertex_labels, 2))
        out.append(f"simplex {s.id} {s.dim} {' '.join(s.vertex_labels)} | {lens}")
    for g in doc.gluings:
        (sa, fa), (sb, fb) = g.side_a, g.side_b
        vm = " ".join(f"{k}={v}" for k, v in g.vertex_map.items())
        out.append(f"glue {sa} {fa} {sb} {fb} | {vm}")
    for name, dirs, outward in doc.links:
        o = "-" if outward is None else " ".join(_num(v) for v in outward)
        out.append(f"link {name} {o} | " + " ".join(_num(v) for v in np.asarray(dirs).ravel()))
    if doc.polygon is not None:
        out.append("polygon")
        out.extend(f"vertex {_num(x)} {_num(y)}" for x, y in doc.polygon)
        for m in doc.marks:
            out.append("mark " + " ".join(_num(v) for v in np.asarray(m).ravel()))
    return "\n".join(out) + "\n"


def from_complex(complex, polygon=None, marks=(), links=()) -> ComplexFile:
    return ComplexFile(complex.kappa, list(complex.simplices), list(complex.gluings),
                       None if polygon is None else np.asarray(polygon, float), [np.atleast_2d(m) for m in marks],
                       [(n, np.asarray(d, float), None if o is None else np.asarray(o, float)) for n, d, o in links])


def from_links(links, kappa: int = 1) -> ComplexFile:
    """A file holding only oriented links; ``links`` is a list of (name, directions, outward or None)."""
    return ComplexFile(kappa, links=[(n, np.asarray(d, float), None if o is None else np.asarray(o, float))
                                     for n, d, o in links])


def from_polygon(poly: HPolygon, marked: MarkedGeodesics | None = None) -> ComplexFile:
    marks = list(marked.items) if marked is not None else []
    return ComplexFile(-1, [], [], np.array(poly.klein), marks)


def load(path) -> ComplexFile:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


def save(doc: ComplexFile, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit(doc))
