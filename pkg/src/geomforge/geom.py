"""Constraint-based quadrilateral construction and validation.

Every shape kind is built so that its defining constraint holds by
construction; validation only rejects numerically degenerate draws
(rejection-resampling, never coordinate nudging). All sampling goes
through an explicit numpy Generator so results are a pure function of
(kind, stream).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DegenerateAngle,
    GenerationExhausted,
    NotTangential,
    ParamOutOfRange,
)

# Sampling ranges. The trapezoid ranges are the published ones; the rest
# follow the same scale so kinds stay visually comparable.
SIDE_RANGE = (3.0, 10.0)
HEIGHT_RANGE = (3.0, 10.0)
K_RANGE = (0.5, 0.95)
DELTA_RANGE = (-5.0, 5.0)
ANGLE_RANGE_DEG = (35.0, 145.0)
ANGLE_EXCLUDED_DEG = (85.0, 95.0)  # keeps parallelograms visibly non-rectangular
INCIRCLE_RADIUS_RANGE = (1.5, 4.0)
INCIRCLE_CENTER_RANGE = (-2.0, 2.0)
TANGENT_GAP_MIN_DEG = 30.0
TANGENT_GAP_MAX_DEG = 135.0  # bounds tangent intersections to ~2.6 r from center

# Generation bounds in world units; shapes that escape are resampled.
GENERATION_BOUNDS = (-20.0, -20.0, 20.0, 20.0)

MAX_ATTEMPTS = 100
COLLINEARITY_AREA = 1e-6  # world-units^2
RESIDUAL_TOL = 1e-9

DEFAULT_LABELS = ("A", "B", "C", "D")


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __iter__(self):
        yield self.x
        yield self.y

    def __add__(self, other: "Point2") -> "Point2":
        return Point2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "Point2") -> "Point2":
        return Point2(self.x - other.x, self.y - other.y)


def dot(u: Point2, v: Point2) -> float:
    return u.x * v.x + u.y * v.y


def cross(u: Point2, v: Point2) -> float:
    return u.x * v.y - u.y * v.x


def norm(u: Point2) -> float:
    return math.hypot(u.x, u.y)


def unit(u: Point2) -> Point2:
    n = norm(u)
    if n == 0.0:
        raise ZeroDivisionError("zero-length vector has no direction")
    return Point2(u.x / n, u.y / n)


@dataclass(frozen=True)
class LineEq:
    """Line a*x + b*y = c with unit normal (a, b)."""

    a: float
    b: float
    c: float

    def __post_init__(self):
        if self.a == 0.0 and self.b == 0.0:
            raise ValueError("degenerate line: zero normal")

    @staticmethod
    def normalized(a: float, b: float, c: float) -> "LineEq":
        n = math.hypot(a, b)
        if n == 0.0:
            raise ValueError("degenerate line: zero normal")
        return LineEq(a / n, b / n, c / n)

    @staticmethod
    def through(p: Point2, direction: Point2) -> "LineEq":
        # normal is the direction rotated by 90 degrees
        return LineEq.normalized(-direction.y, direction.x,
                                 -direction.y * p.x + direction.x * p.y)

    def signed_distance(self, p: Point2) -> float:
        return self.a * p.x + self.b * p.y - self.c


class ShapeKind(enum.Enum):
    PARALLELOGRAM = "parallelogram"
    RECTANGLE = "rectangle"
    TRAPEZOID = "trapezoid"
    ISOSCELES_TRAPEZOID = "isosceles_trapezoid"
    RHOMBUS = "rhombus"
    SQUARE = "square"
    TANGENTIAL_QUAD = "tangential_quad"


KINDS: tuple[ShapeKind, ...] = tuple(ShapeKind)

# Noun used by language templates ("trapezoid ABCD").
KIND_NOUN = {
    ShapeKind.PARALLELOGRAM: "parallelogram",
    ShapeKind.RECTANGLE: "rectangle",
    ShapeKind.TRAPEZOID: "trapezoid",
    ShapeKind.ISOSCELES_TRAPEZOID: "isosceles trapezoid",
    ShapeKind.RHOMBUS: "rhombus",
    ShapeKind.SQUARE: "square",
    ShapeKind.TANGENTIAL_QUAD: "quadrilateral",
}


@dataclass(frozen=True)
class TrapezoidParams:
    base_len: float
    ratio: float
    height: float
    offset: float

    def __post_init__(self):
        if not (SIDE_RANGE[0] <= self.base_len <= SIDE_RANGE[1]):
            raise ParamOutOfRange(f"base_len {self.base_len} outside {SIDE_RANGE}")
        if not (K_RANGE[0] <= self.ratio <= K_RANGE[1]):
            raise ParamOutOfRange(f"ratio {self.ratio} outside {K_RANGE}")
        if not (HEIGHT_RANGE[0] <= self.height <= HEIGHT_RANGE[1]):
            raise ParamOutOfRange(f"height {self.height} outside {HEIGHT_RANGE}")
        if not (DELTA_RANGE[0] <= self.offset <= DELTA_RANGE[1]):
            raise ParamOutOfRange(f"offset {self.offset} outside {DELTA_RANGE}")


@dataclass(frozen=True)
class Incircle:
    center: Point2
    radius: float


@dataclass(frozen=True)
class ShapeInstance:
    kind: ShapeKind
    vertices: tuple[Point2, Point2, Point2, Point2]
    labels: tuple[str, str, str, str] = DEFAULT_LABELS
    incircle: Optional[Incircle] = None

    def sides(self) -> list[tuple[Point2, Point2]]:
        v = self.vertices
        return [(v[i], v[(i + 1) % 4]) for i in range(4)]


@dataclass(frozen=True)
class ValidationReport:
    convex: bool
    min_triple_area: float
    in_bounds: bool
    constraint_residual: float

    @property
    def accept(self) -> bool:
        return (self.convex
                and self.min_triple_area > COLLINEARITY_AREA
                and self.in_bounds
                and self.constraint_residual < RESIDUAL_TOL)


def sample_length(rng: np.random.Generator,
                  lo: float = SIDE_RANGE[0],
                  hi: float = SIDE_RANGE[1]) -> float:
    return float(rng.uniform(lo, hi))


def make_trapezoid(p: TrapezoidParams) -> tuple[Point2, Point2, Point2, Point2]:
    """Base construction: A=(0,0), B=(B,0), C=(delta,h), D=(delta+kB,h).

    Returned in that literal naming order; CD is parallel to AB with
    |CD| = k * |AB|. Callers wanting a simple polygon must traverse
    A, B, D, C.
    """
    a = Point2(0.0, 0.0)
    b = Point2(p.base_len, 0.0)
    c = Point2(p.offset, p.height)
    d = Point2(p.offset + p.ratio * p.base_len, p.height)
    return a, b, c, d


def line_intersection(l1: LineEq, l2: LineEq) -> Optional[Point2]:
    """Solve the 2x2 system; None when parallel/coincident (|det| <= 1e-12)."""
    det = l1.a * l2.b - l2.a * l1.b
    if abs(det) <= 1e-12:
        return None
    sol = np.linalg.solve(np.array([[l1.a, l1.b], [l2.a, l2.b]]),
                          np.array([l1.c, l2.c]))
    return Point2(float(sol[0]), float(sol[1]))


def angle_bisector(prev: Point2, vertex: Point2, nxt: Point2) -> LineEq:
    """Interior bisector at vertex: direction = unit(prev-v) + unit(next-v)."""
    u = prev - vertex
    v = nxt - vertex
    if abs(cross(u, v)) / 2.0 <= COLLINEARITY_AREA:
        raise DegenerateAngle(f"collinear arms at {vertex}")
    direction = unit(u) + unit(v)
    return LineEq.through(vertex, direction)


def _side_lines(vertices: Sequence[Point2]) -> list[LineEq]:
    return [LineEq.through(vertices[i], vertices[(i + 1) % 4] - vertices[i])
            for i in range(4)]


def incenter(shape: ShapeInstance) -> Point2:
    """Intersection of interior angle bisectors; the incircle center.

    Raises NotTangential when the four point-to-side distances disagree
    by more than 1e-6 (the bisectors of a generic quadrilateral are not
    concurrent).
    """
    v = shape.vertices
    b0 = angle_bisector(v[3], v[0], v[1])
    b1 = angle_bisector(v[0], v[1], v[2])
    p = line_intersection(b0, b1)
    if p is None:
        raise NotTangential("adjacent bisectors are parallel")
    dists = [abs(line.signed_distance(p)) for line in _side_lines(v)]
    if max(dists) - min(dists) > 1e-6:
        raise NotTangential(
            f"bisectors not concurrent: distance spread {max(dists) - min(dists):.3g}")
    return p


def _hull_size(vertices: Sequence[Point2]) -> int:
    """Number of extreme points of the convex hull (monotone chain)."""
    pts = sorted(set((p.x, p.y) for p in vertices))
    if len(pts) <= 2:
        return len(pts)

    def build(points):
        chain: list[tuple[float, float]] = []
        for q in points:
            while len(chain) >= 2:
                ox, oy = chain[-2]
                ax, ay = chain[-1]
                if (ax - ox) * (q[1] - oy) - (ay - oy) * (q[0] - ox) <= 0:
                    chain.pop()
                else:
                    break
            chain.append(q)
        return chain

    lower = build(pts)
    upper = build(list(reversed(pts)))
    return len(lower) + len(upper) - 2


def signed_area(vertices: Sequence[Point2]) -> float:
    total = 0.0
    n = len(vertices)
    for i in range(n):
        p, q = vertices[i], vertices[(i + 1) % n]
        total += p.x * q.y - q.x * p.y
    return total / 2.0


def min_triple_area(vertices: Sequence[Point2]) -> float:
    areas = []
    for i in range(4):
        p = vertices[(i - 1) % 4]
        q = vertices[i]
        r = vertices[(i + 1) % 4]
        areas.append(abs(cross(q - p, r - q)) / 2.0)
    return min(areas)


def constraint_residual(kind: ShapeKind, vertices: Sequence[Point2],
                        incircle_: Optional[Incircle] = None) -> float:
    """Max deviation from the kind's defining constraint (world units)."""
    a, b, c, d = vertices
    ab, bc, cd, da = b - a, c - b, d - c, a - d
    dc = c - d
    ad = d - a

    def parallelogram() -> float:
        return max(abs(cross(ab, dc)), abs(cross(ad, bc)))

    def right_angles() -> float:
        sides = [ab, bc, cd, da]
        return max(abs(dot(sides[i], sides[(i + 1) % 4])) for i in range(4))

    def equal_sides() -> float:
        lengths = [norm(s) for s in (ab, bc, cd, da)]
        m = sum(lengths) / 4.0
        return max(abs(l - m) for l in lengths)

    def trapezoid() -> float:
        # at least one opposite pair parallel
        return min(abs(cross(ab, dc)), abs(cross(ad, bc)))

    if kind is ShapeKind.PARALLELOGRAM:
        return parallelogram()
    if kind is ShapeKind.RECTANGLE:
        return max(parallelogram(), right_angles())
    if kind is ShapeKind.TRAPEZOID:
        return trapezoid()
    if kind is ShapeKind.ISOSCELES_TRAPEZOID:
        base = trapezoid()
        # legs are the non-parallel pair
        if abs(cross(ab, dc)) <= abs(cross(ad, bc)):
            legs = (norm(bc), norm(da))
        else:
            legs = (norm(ab), norm(cd))
        return max(base, abs(legs[0] - legs[1]))
    if kind is ShapeKind.RHOMBUS:
        return max(parallelogram(), equal_sides())
    if kind is ShapeKind.SQUARE:
        return max(parallelogram(), right_angles(), equal_sides())
    if kind is ShapeKind.TANGENTIAL_QUAD:
        return pitot_residual(vertices)
    raise ValueError(f"unknown kind {kind}")


def pitot_residual(vertices: Sequence[Point2]) -> float:
    """|(|AB| + |CD|) - (|BC| + |DA|)|: zero iff an incircle exists."""
    a, b, c, d = vertices
    return abs((norm(b - a) + norm(d - c)) - (norm(c - b) + norm(a - d)))


def parallel_exclusivity(vertices: Sequence[Point2]) -> float:
    """Cross-product magnitude of the *less* parallel opposite pair."""
    a, b, c, d = vertices
    return max(abs(cross(b - a, c - d)), abs(cross(d - a, c - b)))


def validate(vertices: Sequence[Point2],
             bounds: tuple[float, float, float, float] = GENERATION_BOUNDS,
             kind: Optional[ShapeKind] = None,
             incircle_: Optional[Incircle] = None) -> ValidationReport:
    x0, y0, x1, y1 = bounds
    convex = (_hull_size(vertices) == 4) and signed_area(vertices) > 0
    area = min_triple_area(vertices)
    in_bounds = all(x0 <= p.x <= x1 and y0 <= p.y <= y1 for p in vertices)
    residual = 0.0
    if kind is not None:
        residual = constraint_residual(kind, vertices, incircle_)
    return ValidationReport(convex=convex, min_triple_area=area,
                            in_bounds=in_bounds, constraint_residual=residual)


# ---------------------------------------------------------------------------
# sampling

def _sample_angle_deg(rng: np.random.Generator) -> float:
    # uniform over [35, 85) u [95, 145)
    span = (ANGLE_EXCLUDED_DEG[0] - ANGLE_RANGE_DEG[0]) + \
        (ANGLE_RANGE_DEG[1] - ANGLE_EXCLUDED_DEG[1])
    theta = ANGLE_RANGE_DEG[0] + float(rng.uniform(0.0, span))
    if theta >= ANGLE_EXCLUDED_DEG[0]:
        theta += ANGLE_EXCLUDED_DEG[1] - ANGLE_EXCLUDED_DEG[0]
    return theta


def _construct(kind: ShapeKind, rng: np.random.Generator
               ) -> tuple[list[Point2], Optional[Incircle]]:
    """One draw: CCW vertex cycle in the construction frame, plus incircle."""
    if kind in (ShapeKind.PARALLELOGRAM, ShapeKind.RHOMBUS):
        b_len = sample_length(rng)
        d_len = b_len if kind is ShapeKind.RHOMBUS else sample_length(rng)
        theta = math.radians(_sample_angle_deg(rng))
        b = Point2(b_len, 0.0)
        d = Point2(d_len * math.cos(theta), d_len * math.sin(theta))
        return [Point2(0.0, 0.0), b, b + d, d], None

    if kind in (ShapeKind.RECTANGLE, ShapeKind.SQUARE):
        w = sample_length(rng)
        h = w if kind is ShapeKind.SQUARE else sample_length(rng)
        return [Point2(0.0, 0.0), Point2(w, 0.0), Point2(w, h), Point2(0.0, h)], None

    if kind in (ShapeKind.TRAPEZOID, ShapeKind.ISOSCELES_TRAPEZOID):
        b_len = sample_length(rng)
        k = float(rng.uniform(*K_RANGE))
        h = float(rng.uniform(*HEIGHT_RANGE))
        if kind is ShapeKind.ISOSCELES_TRAPEZOID:
            delta = (b_len - k * b_len) / 2.0
        else:
            delta = float(rng.uniform(*DELTA_RANGE))
        a, b, c, d = make_trapezoid(TrapezoidParams(b_len, k, h, delta))
        return [a, b, d, c], None  # simple CCW traversal of the construction

    if kind is ShapeKind.TANGENTIAL_QUAD:
        cx = float(rng.uniform(*INCIRCLE_CENTER_RANGE))
        cy = float(rng.uniform(*INCIRCLE_CENTER_RANGE))
        r = float(rng.uniform(*INCIRCLE_RADIUS_RANGE))
        phase = float(rng.uniform(0.0, 360.0))
        free = 360.0 - 4 * TANGENT_GAP_MIN_DEG
        gaps = TANGENT_GAP_MIN_DEG + rng.dirichlet(np.ones(4)) * free
        if float(np.max(gaps)) > TANGENT_GAP_MAX_DEG:
            return [], None  # reject: a tangent intersection would fly far out
        angles = np.radians(phase + np.concatenate(([0.0], np.cumsum(gaps[:-1]))))
        center = Point2(cx, cy)
        normals = [Point2(math.cos(t), math.sin(t)) for t in angles]
        verts = []
        for i in range(4):
            n1, n2 = normals[i], normals[(i + 1) % 4]
            denom = 1.0 + dot(n1, n2)  # = 2 cos^2(gap/2) > 0 for gap < 180 deg
            verts.append(Point2(center.x + r * (n1.x + n2.x) / denom,
                                center.y + r * (n1.y + n2.y) / denom))
        return verts, Incircle(center, r)

    raise ValueError(f"unknown kind {kind}")


def _start_at_lex_min(cycle: list[Point2]) -> list[Point2]:
    start = min(range(4), key=lambda i: (cycle[i].x, cycle[i].y))
    return cycle[start:] + cycle[:start]


def _rotate_about_centroid(cycle: list[Point2], phi: float,
                           incircle_: Optional[Incircle]
                           ) -> tuple[list[Point2], Optional[Incircle]]:
    cx = sum(p.x for p in cycle) / 4.0
    cy = sum(p.y for p in cycle) / 4.0
    cphi, sphi = math.cos(phi), math.sin(phi)

    def rot(p: Point2) -> Point2:
        dx, dy = p.x - cx, p.y - cy
        return Point2(cx + cphi * dx - sphi * dy, cy + sphi * dx + cphi * dy)

    out = [rot(p) for p in cycle]
    if incircle_ is not None:
        incircle_ = Incircle(rot(incircle_.center), incircle_.radius)
    return out, incircle_


def sample_shape(kind: ShapeKind, rng: np.random.Generator) -> ShapeInstance:
    """Draw one valid ShapeInstance; resample on validation failure.

    Per attempt the stream is consumed in a fixed order: construction
    parameters, then a rotation angle. Labels follow CCW order starting
    from the lexicographically smallest vertex of the construction frame;
    the whole shape is then rotated uniformly about its centroid (diagram
    diversity; every constraint is rotation-invariant).
    """
    for _ in range(MAX_ATTEMPTS):
        cycle, inc = _construct(kind, rng)
        phi = float(rng.uniform(0.0, 2.0 * math.pi))
        if not cycle:
            continue
        cycle = _start_at_lex_min(cycle)
        cycle, inc = _rotate_about_centroid(cycle, phi, inc)
        report = validate(cycle, GENERATION_BOUNDS, kind, inc)
        if not report.accept:
            continue
        if kind in (ShapeKind.TRAPEZOID, ShapeKind.ISOSCELES_TRAPEZOID) \
                and parallel_exclusivity(cycle) <= COLLINEARITY_AREA:
            continue
        if inc is not None:
            lines = _side_lines(cycle)
            if max(abs(abs(l.signed_distance(inc.center)) - inc.radius)
                   for l in lines) > 1e-6:
                continue
        return ShapeInstance(kind=kind, vertices=tuple(cycle),
                            labels=DEFAULT_LABELS, incircle=inc)
    raise GenerationExhausted(kind.value, MAX_ATTEMPTS)
