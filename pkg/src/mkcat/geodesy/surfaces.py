"""Singular surfaces, h-map surfaces, and Gauss-Bonnet bookkeeping."""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..complexcore import ComplexError, MkComplex, NotASurfaceError, check_surface, euler_characteristic
from .corridors import index_of

H_TOL = 1e-9


class HMapInvariantError(ComplexError):
    def __init__(self, message, vertices):
        super().__init__(message)
        self.vertices = vertices


def _triangle_area(complex: MkComplex, sid) -> float:
    """Area of one simplex: angle defect, angle excess, or Heron's formula."""
    s = complex.simplex(sid)
    angles = [complex.corner_angle(sid, x) for x in s.vertex_labels]
    if complex.kappa == -1:
        return math.pi - math.fsum(angles)
    if complex.kappa == 1:
        return math.fsum(angles) - math.pi
    a, b, c = sorted((s.length(*s.face(i)) for i in range(3)), reverse=True)
    # Kahan's stable form of Heron's formula
    q = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    return 0.25 * math.sqrt(max(q, 0.0))


@dataclass(frozen=True)
class SingularSurface:
    """Compact surface glued from model triangles, with cone and boundary data per vertex."""
    complex: MkComplex

    def __post_init__(self):
        c = self.complex
        check_surface(c)
        ix = index_of(c)
        for v in c.vertices():
            los = ix.link_orders(v)
            if len(los) != 1 or los[0].kind == "graph":
                raise NotASurfaceError(f"vertex {v} is not a surface point (link is not one cycle or path)")

    @property
    def kappa(self) -> int:
        return self.complex.kappa

    def angle_sum(self, v) -> float:
        return index_of(self.complex).link_orders(v)[0].total

    def is_boundary(self, v) -> bool:
        return index_of(self.complex).link_orders(v)[0].kind == "path"

    def interior_vertices(self) -> list:
        return [v for v in self.complex.vertices() if not self.is_boundary(v)]

    def boundary_vertices(self) -> list:
        return [v for v in self.complex.vertices() if self.is_boundary(v)]

    def cone_angle(self, v) -> float:
        if self.is_boundary(v):
            raise ValueError(f"{v} is a boundary vertex")
        return self.angle_sum(v)

    def bending(self, v) -> float:
        """pi minus the interior angle at a boundary vertex (negative at reflex corners)."""
        if not self.is_boundary(v):
            raise ValueError(f"{v} is an interior vertex")
        return math.pi - self.angle_sum(v)

    def area(self) -> float:
        return math.fsum(_triangle_area(self.complex, t) for t in self.complex.triangles())

    def euler_characteristic(self) -> int:
        return euler_characteristic(self.complex)

    def non_cat_vertices(self) -> list:
        """Interior cone points with angle below 2*pi (accepted, but the surface is not CAT)."""
        return [v for v in self.interior_vertices() if self.cone_angle(v) < 2.0 * math.pi - H_TOL]


@dataclass(frozen=True)
class GaussBonnetTerms:
    kappa: int
    area: float
    interior: float  # sum of 2*pi - cone angle
    boundary: float  # sum of bending angles
    chi: int
    non_cat: tuple

    @property
    def lhs(self) -> float:
        return math.fsum([self.kappa * self.area, self.interior, self.boundary])

    @property
    def residual(self) -> float:
        return abs(math.fsum([self.kappa * self.area, self.interior, self.boundary, -2.0 * math.pi * self.chi]))


def gauss_bonnet_terms(surface: SingularSurface) -> GaussBonnetTerms:
    inner_terms = [2.0 * math.pi - surface.cone_angle(v) for v in surface.interior_vertices()]
    bd_terms = [surface.bending(v) for v in surface.boundary_vertices()]
    return GaussBonnetTerms(surface.kappa, surface.area(), math.fsum(inner_terms), math.fsum(bd_terms),
                            surface.euler_characteristic(), tuple(surface.non_cat_vertices()))


def gauss_bonnet_audit(surface: SingularSurface) -> float:
    """|kappa*Area + sum(2*pi - cone angles) + sum(bending) - 2*pi*chi|; zero up to rounding."""
    return gauss_bonnet_terms(surface).residual


@dataclass(frozen=True)
class HMapSurface:
    """A singular surface whose vertices are h-vertices except for distinguished boundary vertices."""
    surface: SingularSurface
    distinguished: tuple = ()

    def __post_init__(self):
        s = self.surface
        dist = tuple(s.complex.resolve_vertex(v) for v in self.distinguished)
        object.__setattr__(self, "distinguished", dist)
        for v in dist:
            if not s.is_boundary(v):
                raise HMapInvariantError(f"distinguished vertex {v} is not on the boundary", [v])
        bad = [v for v, ok in self.h_flags().items() if not ok and v not in dist]
        if bad:
            raise HMapInvariantError(f"vertices {bad} are not h-vertices", bad)

    def h_flags(self) -> dict:
        s = self.surface
        out = {}
        for v in s.complex.vertices():
            need = math.pi if s.is_boundary(v) else 2.0 * math.pi
            out[v] = s.angle_sum(v) >= need - H_TOL
        return out

    def exterior_angles(self) -> dict:
        return {v: self.surface.bending(v) for v in self.distinguished}


def h_area_bound_check(h: HMapSurface) -> float:
    """sum(theta_i) - 2*pi*chi - (-kappa)*Area; non-negative for h-maps."""
    s = h.surface
    terms = list(h.exterior_angles().values())
    terms.append(-2.0 * math.pi * s.euler_characteristic())
    terms.append(s.kappa * s.area())
    return math.fsum(terms)


def polygon_area_slack(h: HMapSurface) -> float:
    """(n - 2)*pi - Area for a disk with n distinguished vertices."""
    s = h.surface
    if s.euler_characteristic() != 1:
        raise ValueError("polygon bound applies to disks")
    return (len(h.distinguished) - 2) * math.pi - s.area()
