"""Complex-plane geometry for disk tilings.

Points are plain Python/numpy complex numbers.  Reflection carriers are
lines or circles (`Line` / `Circle`, jointly `GenCircle`); rigid maps are
Mobius or anti-Mobius transformations (`Motion`); fundamental cells are
triangles or quadrilaterals with corner angles pi/n (`CellSpec`), either
Euclidean or realized in the unit Poincare disk with geodesic edges.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "GeometryError",
    "GeometryKind",
    "Line",
    "Circle",
    "GenCircle",
    "Motion",
    "CellSpec",
    "invert",
    "apply",
    "compose",
    "inverse",
    "mobius_from_three_points",
    "circle_through",
    "transform_carrier",
    "carrier_intersections",
    "euclidean_triangle",
    "euclidean_rectangle",
    "hyperbolic_triangle",
    "hyperbolic_quadrilateral",
    "QuadFamily",
    "quad_family",
    "geodesic_through",
    "cross_ratio",
    "hyperbolic_distance",
    "point_at_distance",
    "ray_direction",
]

# A circle this flat is treated as a straight line.
_LINE_RADIUS_CUTOFF = 1e8
_DET_EPS = 1e-12
_ON_EDGE_EPS = 1e-12


class GeometryError(ValueError):
    pass


class GeometryKind(Enum):
    EUCLIDEAN = "euclidean"
    HYPERBOLIC = "hyperbolic"


def _require_finite(*values: complex) -> None:
    for v in values:
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise GeometryError("non-finite coordinate")


# ---------------------------------------------------------------------------
# carriers: lines and circles


@dataclass(frozen=True)
class Line:
    """Straight carrier through `anchor`, oriented by a unit normal."""

    anchor: complex
    unit_normal: complex

    def __post_init__(self):
        _require_finite(self.anchor, self.unit_normal)
        n = abs(self.unit_normal)
        if n < _DET_EPS:
            raise GeometryError("degenerate line normal")
        object.__setattr__(self, "unit_normal", self.unit_normal / n)

    def offset(self, z):
        """Signed distance from the line; positive on the normal side."""
        d = z - self.anchor
        n = self.unit_normal
        return np.real(d) * n.real + np.imag(d) * n.imag

    def reflect(self, z):
        return z - 2.0 * self.offset(z) * self.unit_normal

    def reflection_motion(self) -> "Motion":
        # z -> -n^2 conj(z) + (a + n^2 conj(a)) fixes the line pointwise
        n, a = self.unit_normal, self.anchor
        return Motion.from_coefficients(
            -n * n, a + n * n * a.conjugate(), 0.0, 1.0, conjugating=True
        )

    def three_points(self) -> tuple[complex, complex, complex]:
        t = 1j * self.unit_normal  # tangent direction
        return (self.anchor - t, self.anchor, self.anchor + t)

    def tangent_at(self, z: complex) -> complex:
        return 1j * self.unit_normal


@dataclass(frozen=True)
class Circle:
    """Circular carrier; reflection across it is the circle inversion."""

    center: complex
    radius: float

    def __post_init__(self):
        _require_finite(self.center)
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise GeometryError("circle radius must be positive")

    def offset(self, z):
        """|z - center| - radius; positive outside the circle."""
        return np.abs(z - self.center) - self.radius

    def reflect(self, z):
        d = z - self.center
        if np.isscalar(z) or np.ndim(z) == 0:
            if abs(d) == 0.0:
                raise GeometryError("inversion pole")
        return self.center + self.radius * self.radius / np.conj(d)

    def reflection_motion(self) -> "Motion":
        m, r = self.center, self.radius
        return Motion.from_coefficients(
            m, r * r - abs(m) ** 2, 1.0, -m.conjugate(), conjugating=True
        )

    def three_points(self) -> tuple[complex, complex, complex]:
        m, r = self.center, self.radius
        return (m + r, m + 1j * r, m - r)

    def tangent_at(self, z: complex) -> complex:
        d = z - self.center
        return 1j * d / abs(d)

    def is_orthogonal_to_unit_circle(self, tol: float = 1e-10) -> bool:
        return abs(abs(self.center) ** 2 - self.radius**2 - 1.0) < tol * max(
            1.0, abs(self.center) ** 2
        )


GenCircle = Line | Circle


def invert(carrier: GenCircle, z):
    """Reflect `z` across the carrier (mirror image / circle inversion)."""
    return carrier.reflect(z)


# ---------------------------------------------------------------------------
# Mobius and anti-Mobius motions


@dataclass(frozen=True)
class Motion:
    """z -> (a u + b)/(c u + d) with u = conj(z) when `conjugating`.

    Coefficients are normalized to determinant 1, so long generator words
    do not drift in scale.
    """

    a: complex
    b: complex
    c: complex
    d: complex
    conjugating: bool = False

    @classmethod
    def from_coefficients(cls, a, b, c, d, conjugating=False) -> "Motion":
        a, b, c, d = complex(a), complex(b), complex(c), complex(d)
        _require_finite(a, b, c, d)
        det = a * d - b * c
        if abs(det) < _DET_EPS:
            raise GeometryError("singular motion (vanishing determinant)")
        s = cmath.sqrt(det)
        return cls(a / s, b / s, c / s, d / s, bool(conjugating))

    @classmethod
    def identity(cls) -> "Motion":
        return cls(1.0 + 0j, 0j, 0j, 1.0 + 0j, False)

    def apply(self, z):
        u = np.conj(z) if self.conjugating else z
        return (self.a * u + self.b) / (self.c * u + self.d)

    def __call__(self, z):
        return self.apply(z)

    def compose(self, other: "Motion") -> "Motion":
        """Motion acting as self after other: (self.compose(other))(z) = self(other(z))."""
        if self.conjugating:
            oa, ob, oc, od = (
                other.a.conjugate(),
                other.b.conjugate(),
                other.c.conjugate(),
                other.d.conjugate(),
            )
        else:
            oa, ob, oc, od = other.a, other.b, other.c, other.d
        return Motion.from_coefficients(
            self.a * oa + self.b * oc,
            self.a * ob + self.b * od,
            self.c * oa + self.d * oc,
            self.c * ob + self.d * od,
            self.conjugating != other.conjugating,
        )

    def inverse(self) -> "Motion":
        a, b, c, d = self.d, -self.b, -self.c, self.a
        if self.conjugating:
            a, b, c, d = a.conjugate(), b.conjugate(), c.conjugate(), d.conjugate()
        return Motion.from_coefficients(a, b, c, d, self.conjugating)

    @property
    def determinant(self) -> complex:
        return self.a * self.d - self.b * self.c

    def is_affine(self, tol: float = 1e-9) -> bool:
        return abs(self.c) <= tol * max(abs(self.a), abs(self.d))

    def affine_parts(self) -> tuple[complex, complex]:
        """(scale-rotation, shift) for an affine motion z -> r*u + s."""
        if not self.is_affine():
            raise GeometryError("motion is not affine")
        return self.a / self.d, self.b / self.d


def apply(m: Motion, z):
    return m.apply(z)


def compose(m1: Motion, m2: Motion) -> Motion:
    return m1.compose(m2)


def inverse(m: Motion) -> Motion:
    return m.inverse()


def _moebius_to_zero_one_inf(z1: complex, z2: complex, z3: complex):
    return (
        z2 - z3,
        -z1 * (z2 - z3),
        z2 - z1,
        -z3 * (z2 - z1),
    )


def mobius_from_three_points(
    src: Sequence[complex], dst: Sequence[complex]
) -> Motion:
    """The Mobius transformation sending src[i] to dst[i]."""
    if len(src) != 3 or len(dst) != 3:
        raise GeometryError("exactly three points required")
    for trip in (src, dst):
        if min(abs(trip[0] - trip[1]), abs(trip[0] - trip[2]), abs(trip[1] - trip[2])) < 1e-14:
            raise GeometryError("degenerate triple")
    sa, sb, sc, sd = _moebius_to_zero_one_inf(*src)
    ta, tb, tc, td = _moebius_to_zero_one_inf(*dst)
    # inverse of the dst map composed with the src map
    return Motion.from_coefficients(
        td * sa - tb * sc,
        td * sb - tb * sd,
        -tc * sa + ta * sc,
        -tc * sb + ta * sd,
    )


def cross_ratio(z1: complex, z2: complex, z3: complex, z4: complex) -> complex:
    """((z1-z3)(z2-z4)) / ((z1-z4)(z2-z3)); Mobius invariant."""
    pts = (z1, z2, z3, z4)
    for i in range(4):
        for j in range(i + 1, 4):
            if abs(pts[i] - pts[j]) < 1e-14:
                raise GeometryError("degenerate cross ratio")
    return ((z1 - z3) * (z2 - z4)) / ((z1 - z4) * (z2 - z3))


# ---------------------------------------------------------------------------
# carrier fitting and transforms


def circle_through(p1: complex, p2: complex, p3: complex) -> GenCircle:
    """Carrier through three distinct points; a Line when (nearly) collinear."""
    d = 2.0 * (
        p1.real * (p2.imag - p3.imag)
        + p2.real * (p3.imag - p1.imag)
        + p3.real * (p1.imag - p2.imag)
    )
    scale = max(abs(p1 - p2), abs(p2 - p3), abs(p1 - p3))
    if scale < 1e-14:
        raise GeometryError("degenerate carrier fit")
    if abs(d) < 1e-13 * scale * scale:
        t = (p2 - p1) / abs(p2 - p1)
        return Line(p1, 1j * t)
    q1, q2, q3 = abs(p1) ** 2, abs(p2) ** 2, abs(p3) ** 2
    ux = (q1 * (p2.imag - p3.imag) + q2 * (p3.imag - p1.imag) + q3 * (p1.imag - p2.imag)) / d
    uy = (q1 * (p3.real - p2.real) + q2 * (p1.real - p3.real) + q3 * (p2.real - p1.real)) / d
    center = complex(ux, uy)
    radius = abs(p1 - center)
    if radius > _LINE_RADIUS_CUTOFF:
        t = (p2 - p1) / abs(p2 - p1)
        return Line(p1, 1j * t)
    return Circle(center, radius)


def transform_carrier(m: Motion, carrier: GenCircle) -> GenCircle:
    """Image of a line/circle under a motion (Mobius maps preserve the family)."""
    imgs = [m.apply(p) for p in carrier.three_points()]
    return circle_through(*imgs)


def carrier_intersections(c1: GenCircle, c2: GenCircle) -> list[complex]:
    """Intersection points of two carriers (0, 1 or 2 points)."""
    if isinstance(c1, Circle) and isinstance(c2, Line):
        c1, c2 = c2, c1
    if isinstance(c1, Line) and isinstance(c2, Line):
        n1, n2 = c1.unit_normal, c2.unit_normal
        det = n1.real * n2.imag - n1.imag * n2.real
        if abs(det) < 1e-14:
            return []
        b1 = n1.real * c1.anchor.real + n1.imag * c1.anchor.imag
        b2 = n2.real * c2.anchor.real + n2.imag * c2.anchor.imag
        x = (b1 * n2.imag - b2 * n1.imag) / det
        y = (n1.real * b2 - n2.real * b1) / det
        return [complex(x, y)]
    if isinstance(c1, Line) and isinstance(c2, Circle):
        h = c1.offset(c2.center)
        if abs(h) > c2.radius:
            return []
        foot = c2.center - h * c1.unit_normal
        half = math.sqrt(max(c2.radius**2 - h * h, 0.0))
        t = 1j * c1.unit_normal
        if half == 0.0:
            return [foot]
        return [foot - half * t, foot + half * t]
    assert isinstance(c1, Circle) and isinstance(c2, Circle)
    d = abs(c2.center - c1.center)
    if d < 1e-15:
        return []
    r1, r2 = c1.radius, c2.radius
    if d > r1 + r2 or d < abs(r1 - r2):
        return []
    ex = (c2.center - c1.center) / d
    x = (d * d + r1 * r1 - r2 * r2) / (2.0 * d)
    y2 = r1 * r1 - x * x
    base = c1.center + x * ex
    if y2 <= 0.0:
        return [base]
    y = math.sqrt(y2)
    return [base + 1j * y * ex, base - 1j * y * ex]


# ---------------------------------------------------------------------------
# hyperbolic helpers (Poincare disk)


def hyperbolic_distance(a: complex, b: complex) -> float:
    w = (b - a) / (1.0 - a.conjugate() * b)
    return 2.0 * math.atanh(min(abs(w), 1.0 - 1e-16))


def point_at_distance(z: complex, theta: float, dist: float) -> complex:
    """Endpoint of the geodesic ray from z with initial direction theta."""
    w = math.tanh(dist / 2.0) * cmath.exp(1j * theta)
    return (w + z) / (1.0 + z.conjugate() * w)


def ray_direction(a: complex, b: complex) -> float:
    """Initial (Euclidean) tangent angle at a of the geodesic toward b."""
    return cmath.phase((b - a) / (1.0 - a.conjugate() * b))


def geodesic_through(v1: complex, v2: complex) -> GenCircle:
    """Geodesic carrier through two disk points: a diameter or an arc
    orthogonal to the unit circle."""
    if abs(v1 - v2) < 1e-14:
        raise GeometryError("degenerate geodesic")
    if abs(v1) >= 1.0 or abs(v2) >= 1.0:
        raise GeometryError("geodesic endpoints must lie in the open disk")
    # center m of the orthogonal circle satisfies 2 Re(conj(m) v) = |v|^2 + 1
    a1x, a1y, b1 = 2.0 * v1.real, 2.0 * v1.imag, abs(v1) ** 2 + 1.0
    a2x, a2y, b2 = 2.0 * v2.real, 2.0 * v2.imag, abs(v2) ** 2 + 1.0
    det = a1x * a2y - a1y * a2x
    if abs(det) < 1e-13:
        # collinear with the origin: the geodesic is a diameter
        t = (v2 - v1) / abs(v2 - v1)
        return Line(0j, 1j * t)
    mx = (b1 * a2y - b2 * a1y) / det
    my = (a1x * b2 - a2x * b1) / det
    m = complex(mx, my)
    r2 = abs(m) ** 2 - 1.0
    if r2 <= 0:
        raise GeometryError("geodesic fit failed")
    radius = math.sqrt(r2)
    if radius > _LINE_RADIUS_CUTOFF:
        t = (v2 - v1) / abs(v2 - v1)
        return Line(0j, 1j * t)
    return Circle(m, radius)


def _geodesic_from_ray(z: complex, theta: float) -> GenCircle:
    """Geodesic carrier through z whose tangent there has angle theta."""
    e = cmath.exp(1j * theta)
    cross = z.real * e.imag - z.imag * e.real
    if abs(cross) < 1e-13:
        return Line(0j, 1j * e)
    # 2 Re(conj(m) z) = |z|^2 + 1  and  Re(conj(m) e) = Re(conj(z) e)
    a1x, a1y, b1 = 2.0 * z.real, 2.0 * z.imag, abs(z) ** 2 + 1.0
    a2x, a2y, b2 = e.real, e.imag, z.real * e.real + z.imag * e.imag
    det = a1x * a2y - a1y * a2x
    if abs(det) < 1e-14:
        raise GeometryError("geodesic ray fit failed")
    mx = (b1 * a2y - b2 * a1y) / det
    my = (a1x * b2 - a2x * b1) / det
    m = complex(mx, my)
    radius = math.sqrt(max(abs(m) ** 2 - 1.0, 0.0))
    if radius > _LINE_RADIUS_CUTOFF or radius == 0.0:
        return Line(0j, 1j * e)
    return Circle(m, radius)


# ---------------------------------------------------------------------------
# fundamental cells


def _angle_between(d1: complex, d2: complex) -> float:
    c = (d1.real * d2.real + d1.imag * d2.imag) / (abs(d1) * abs(d2))
    return math.acos(min(1.0, max(-1.0, c)))


@dataclass(frozen=True)
class CellSpec:
    """A fundamental cell: CCW vertices, one carrier per edge (edge i joins
    vertex i to vertex i+1), corner angle pi/corner_orders[i] at vertex i."""

    vertices: tuple[complex, ...]
    edges: tuple[GenCircle, ...]
    corner_orders: tuple[int, ...]
    kind: GeometryKind
    # per-edge sign that makes `offset * sign` positive on the inside
    _edge_signs: tuple[float, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        n = len(self.vertices)
        if n not in (3, 4) or len(self.edges) != n or len(self.corner_orders) != n:
            raise GeometryError("cell must have 3 or 4 vertices with matching edges/orders")
        if not self._edge_signs:
            object.__setattr__(self, "_edge_signs", self._compute_edge_signs())
        self._validate()

    # -- construction-time checks -------------------------------------

    def _compute_edge_signs(self) -> tuple[float, ...]:
        n = len(self.vertices)
        signs = []
        for i, edge in enumerate(self.edges):
            others = [self.vertices[k] for k in range(n) if k not in (i, (i + 1) % n)]
            offs = [edge.offset(v) for v in others]
            ref = max(offs, key=abs)
            if abs(ref) < 1e-13:
                raise GeometryError("cannot orient cell edge (degenerate cell)")
            signs.append(1.0 if ref > 0 else -1.0)
        return tuple(signs)

    def _validate(self):
        n = len(self.vertices)
        for i in range(n):
            v = self.vertices[i]
            _require_finite(v)
            for e in (self.edges[i], self.edges[(i - 1) % n]):
                if abs(e.offset(v)) > 1e-10:
                    raise GeometryError("vertex does not lie on its edge carriers")
            order = self.corner_orders[i]
            if order < 2:
                raise GeometryError("corner order must be at least 2")
            ang = self.interior_angle(i)
            if abs(ang - math.pi / order) > 1e-9:
                raise GeometryError(
                    f"interior angle at vertex {i} is {ang:.12f}, "
                    f"expected {math.pi / order:.12f}"
                )
        total = sum(math.pi / o for o in self.corner_orders)
        if self.kind is GeometryKind.EUCLIDEAN:
            if n == 3 and abs(total - math.pi) > 1e-9:
                raise GeometryError("Euclidean triangle angles must sum to pi")
            if n == 4 and abs(total - 2 * math.pi) > 1e-9:
                raise GeometryError("Euclidean quadrilateral angles must sum to 2 pi")
        else:
            limit = math.pi if n == 3 else 2 * math.pi
            if total >= limit - 1e-12:
                raise GeometryError("hyperbolic cell angle sum too large")
            for v in self.vertices:
                if abs(v) >= 1.0:
                    raise GeometryError("hyperbolic cell vertices must lie in the disk")
            for e in self.edges:
                if isinstance(e, Circle) and not e.is_orthogonal_to_unit_circle():
                    raise GeometryError("hyperbolic edge not orthogonal to the unit circle")
                if isinstance(e, Line) and abs(e.offset(0j)) > 1e-10:
                    raise GeometryError("hyperbolic line edge must be a diameter")

    # -- queries --------------------------------------------------------

    @property
    def size(self) -> int:
        return len(self.vertices)

    def interior_angle(self, i: int) -> float:
        n = self.size
        v = self.vertices[i]
        prev_edge = self.edges[(i - 1) % n]
        next_edge = self.edges[i]
        d_prev = self._tangent_toward(prev_edge, v, self.vertices[(i - 1) % n])
        d_next = self._tangent_toward(next_edge, v, self.vertices[(i + 1) % n])
        return _angle_between(d_prev, d_next)

    @staticmethod
    def _tangent_toward(edge: GenCircle, at: complex, toward: complex) -> complex:
        t = edge.tangent_at(at)
        chord = toward - at
        if t.real * chord.real + t.imag * chord.imag < 0:
            t = -t
        return t

    def clearances(self, z):
        """Signed clearance per edge, positive inside; shape (n_edges,) + z.shape."""
        z = np.asarray(z)
        out = np.empty((self.size,) + z.shape, dtype=float)
        for i, e in enumerate(self.edges):
            out[i] = e.offset(z) * self._edge_signs[i]
        return out

    def contains(self, z, tol: float = _ON_EDGE_EPS):
        """True where z is in the closed cell (within tol of it)."""
        return (self.clearances(z) >= -tol).all(axis=0)

    def diameter(self) -> float:
        vs = self.vertices
        return max(abs(a - b) for a in vs for b in vs)

    def transformed(self, m: Motion) -> "CellSpec":
        return CellSpec(
            tuple(m.apply(v) for v in self.vertices),
            tuple(transform_carrier(m, e) for e in self.edges),
            self.corner_orders,
            self.kind,
        )

    # -- serialization ----------------------------------------------------

    def to_json(self) -> dict:
        edges = []
        for e in self.edges:
            if isinstance(e, Line):
                edges.append(
                    {"type": "line", "anchor": [e.anchor.real, e.anchor.imag],
                     "normal": [e.unit_normal.real, e.unit_normal.imag]}
                )
            else:
                edges.append(
                    {"type": "circle", "center": [e.center.real, e.center.imag],
                     "radius": e.radius}
                )
        return {
            "vertices": [[v.real, v.imag] for v in self.vertices],
            "edges": edges,
            "corner_orders": list(self.corner_orders),
            "kind": self.kind.value,
        }

    @classmethod
    def from_json(cls, data: dict) -> "CellSpec":
        edges: list[GenCircle] = []
        for e in data["edges"]:
            if e["type"] == "line":
                edges.append(Line(complex(*e["anchor"]), complex(*e["normal"])))
            else:
                edges.append(Circle(complex(*e["center"]), float(e["radius"])))
        return cls(
            tuple(complex(x, y) for x, y in data["vertices"]),
            tuple(edges),
            tuple(int(o) for o in data["corner_orders"]),
            GeometryKind(data["kind"]),
        )


# ---------------------------------------------------------------------------
# Euclidean cells


def _euclidean_edges(vertices: Sequence[complex]) -> tuple[Line, ...]:
    n = len(vertices)
    edges = []
    for i in range(n):
        a, b = vertices[i], vertices[(i + 1) % n]
        t = (b - a) / abs(b - a)
        edges.append(Line(a, 1j * t))
    return tuple(edges)


def euclidean_triangle(p: int, q: int, r: int) -> CellSpec:
    """Euclidean mirror-cell triangle with angles pi/p, pi/q, pi/r.

    Only (3,3,3), (4,4,2) and (6,3,2) close up; the longest edge is placed
    on the real axis from 0 to 1, interior above.
    """
    orders = (int(p), int(q), int(r))
    if min(orders) < 2:
        raise GeometryError("not a Euclidean signature")
    from fractions import Fraction

    if sum(Fraction(1, o) for o in orders) != 1:
        raise GeometryError("not a Euclidean signature")
    k = orders.index(min(orders))  # largest angle here, longest edge opposite
    base_edge = (k + 1) % 3
    i0, i1 = base_edge, (base_edge + 1) % 3
    ang0 = math.pi / orders[i0]
    ang_apex = math.pi / orders[k]
    side = math.sin(math.pi / orders[i1]) / math.sin(ang_apex)
    verts = [0j, 0j, 0j]
    verts[i0] = 0j
    verts[i1] = 1.0 + 0j
    verts[k] = side * cmath.exp(1j * ang0)
    return CellSpec(tuple(verts), _euclidean_edges(verts), orders, GeometryKind.EUCLIDEAN)


def euclidean_rectangle(aspect: float = 1.0) -> CellSpec:
    """Rectangle mirror cell (all corner orders 2) with width/height = aspect."""
    if not (math.isfinite(aspect) and aspect > 0):
        raise GeometryError("aspect must be positive")
    w = float(aspect)
    verts = (0j, complex(w, 0.0), complex(w, 1.0), 1j)
    return CellSpec(verts, _euclidean_edges(verts), (2, 2, 2, 2), GeometryKind.EUCLIDEAN)


# ---------------------------------------------------------------------------
# hyperbolic cells


def _triangle_side(a_here: float, a_there: float, a_opp: float) -> float:
    """Hyperbolic length of the side joining corners with angles a_here and
    a_there, opposite the corner with angle a_opp."""
    num = math.cos(a_here) * math.cos(a_there) + math.cos(a_opp)
    den = math.sin(a_here) * math.sin(a_there)
    return math.acosh(num / den)


def hyperbolic_triangle(p: int, q: int, r: int, placement: Motion | None = None) -> CellSpec:
    """Hyperbolic triangle with angles pi/p, pi/q, pi/r (sum < pi).

    First vertex at the origin, first edge along the positive real axis;
    `placement` is applied afterwards.
    """
    orders = (int(p), int(q), int(r))
    if min(orders) < 2:
        raise GeometryError("not hyperbolic")
    if 1.0 / orders[0] + 1.0 / orders[1] + 1.0 / orders[2] >= 1.0 - 1e-15:
        raise GeometryError("not hyperbolic")
    a0, a1, a2 = (math.pi / o for o in orders)
    len01 = _triangle_side(a0, a1, a2)
    len02 = _triangle_side(a0, a2, a1)
    v0 = 0j
    v1 = complex(math.tanh(len01 / 2.0), 0.0)
    v2 = math.tanh(len02 / 2.0) * cmath.exp(1j * a0)
    edges = (
        Line(0j, 1j),  # real-axis diameter
        geodesic_through(v1, v2),
        Line(0j, 1j * cmath.exp(1j * a0)),  # diameter at angle a0
    )
    cell = CellSpec((v0, v1, v2), edges, orders, GeometryKind.HYPERBOLIC)
    if placement is not None:
        cell = cell.transformed(placement)
    return cell


# -- quadrilateral family ----------------------------------------------------


def _shoot_quad(orders: tuple[int, int, int, int], length1: float):
    """Try to close a hyperbolic quadrilateral with prescribed corner angles
    whose edge v1->v2 lies on the real axis, centered at the origin, with
    hyperbolic length `length1`.  Returns vertices or None."""
    a0, a1, a2, a3 = (math.pi / o for o in orders)
    x = math.tanh(length1 / 4.0)
    v1, v2 = complex(-x, 0.0), complex(x, 0.0)
    dir_v1 = a1          # ray v1 -> v0
    dir_v2 = math.pi - a2  # ray v2 -> v3

    def attempt(u: float):
        v3 = point_at_distance(v2, dir_v2, u)
        if abs(v3) >= 1.0 - 1e-12 or v3.imag <= 0:
            return None
        back = ray_direction(v3, v2)
        dir_v3 = back - a3  # ray v3 -> v0
        try:
            ray1 = _geodesic_from_ray(v1, dir_v1)
            ray3 = _geodesic_from_ray(v3, dir_v3)
        except GeometryError:
            return None
        best = None
        for cand in carrier_intersections(ray1, ray3):
            if abs(cand) >= 1.0 - 1e-12 or cand.imag <= 1e-14:
                continue
            d1 = ray_direction(v1, cand) - dir_v1
            d3 = ray_direction(v3, cand) - dir_v3
            if math.cos(d1) < 0.5 or math.cos(d3) < 0.5:
                continue
            if best is None or abs(cand) < abs(best):
                best = cand
        if best is None:
            return None
        v0 = best
        ang = (ray_direction(v0, v3) - ray_direction(v0, v1)) % (2.0 * math.pi)
        return v0, v3, ang - a0

    def residual(u: float):
        res = attempt(u)
        return None if res is None else res[2]

    # bracket a sign change of the closing-angle residual in u
    grid = np.geomspace(0.02, 10.0, 120)
    prev_u, prev_r = None, None
    bracket = None
    for u in grid:
        rv = residual(float(u))
        if rv is None:
            prev_u, prev_r = None, None
            continue
        if prev_r is not None and prev_r * rv <= 0.0 and abs(prev_r) < 2.0 and abs(rv) < 2.0:
            bracket = (prev_u, float(u))
            break
        prev_u, prev_r = float(u), rv
    if bracket is None:
        return None
    u_star = brentq(residual, bracket[0], bracket[1], xtol=1e-15, rtol=8.9e-16, maxiter=200)
    out = attempt(float(u_star))
    if out is None or abs(out[2]) > 1e-9:
        return None
    v0, v3, _ = out
    return (v0, v1, v2, v3)


@dataclass(frozen=True)
class QuadFamily:
    """One-parameter family of hyperbolic quadrilaterals with fixed corner
    angles; t in (0,1) sets the length of edge 1 inside the feasible range."""

    orders: tuple[int, int, int, int]
    length_min: float
    length_max: float

    def edge_length(self, t: float) -> float:
        return self.length_min + t * (self.length_max - self.length_min)

    def cell(self, t: float) -> CellSpec:
        if not 0.0 < t < 1.0:
            raise GeometryError("family parameter t must lie in (0, 1)")
        verts = _shoot_quad(self.orders, self.edge_length(t))
        if verts is None:
            raise GeometryError("quadrilateral construction failed inside feasible range")
        v0, v1, v2, v3 = verts
        edges = (
            geodesic_through(v0, v1),
            Line(0j, 1j),
            geodesic_through(v2, v3),
            geodesic_through(v3, v0),
        )
        return CellSpec(verts, edges, self.orders, GeometryKind.HYPERBOLIC)


@lru_cache(maxsize=32)
def quad_family(orders: tuple[int, int, int, int]) -> QuadFamily:
    """Bracket the feasible edge-1 lengths for the given corner orders."""
    orders = tuple(int(o) for o in orders)
    if len(orders) != 4 or min(orders) < 2:
        raise GeometryError("quadrilateral orders must be four integers >= 2")
    if sum(1.0 / o for o in orders) >= 2.0 - 1e-15:
        raise GeometryError("not hyperbolic")
    lengths = np.geomspace(0.05, 8.0, 64)
    feasible = np.array([_shoot_quad(orders, float(l)) is not None for l in lengths])
    runs = []
    start = None
    for i, ok in enumerate(feasible):
        if ok and start is None:
            start = i
        if not ok and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(feasible) - 1))
    if not runs:
        raise GeometryError("no feasible quadrilateral found for these orders")
    i0, i1 = max(runs, key=lambda r: r[1] - r[0])
    if i1 - i0 < 3:
        raise GeometryError("feasible quadrilateral range too narrow")
    # back off one grid step from each end to stay safely inside
    return QuadFamily(orders, float(lengths[i0 + 1]), float(lengths[i1 - 1]))


def hyperbolic_quadrilateral(orders: Sequence[int], t: float) -> CellSpec:
    """Hyperbolic quadrilateral with corner angles pi/orders[i]; t in (0,1)
    selects the member of the one-parameter family (conformal modulus)."""
    fam = quad_family(tuple(int(o) for o in orders))
    return fam.cell(float(t))
