"""Geometry-core tests.

Derived expected values are computed by independent oracles inside each
test (hand-solved systems, rotating-arm bisectors, midpoint identities,
scipy hulls) rather than by re-calling the code under test.
"""

import math

import numpy as np
import pytest
from scipy.spatial import ConvexHull

from geomforge import geom
from geomforge.errors import (
    DegenerateAngle,
    NotTangential,
    ParamOutOfRange,
)
from geomforge.geom import (
    Incircle,
    LineEq,
    Point2,
    ShapeInstance,
    ShapeKind,
    TrapezoidParams,
    angle_bisector,
    constraint_residual,
    cross,
    incenter,
    line_intersection,
    make_trapezoid,
    min_triple_area,
    norm,
    parallel_exclusivity,
    pitot_residual,
    sample_shape,
    signed_area,
    validate,
)


def rng_for(seed):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


# ---------------------------------------------------------------------------
# make_trapezoid

def test_make_trapezoid_literal_example():
    a, b, c, d = make_trapezoid(TrapezoidParams(8.0, 0.5, 4.0, 2.0))
    assert (a.x, a.y) == (0.0, 0.0)
    assert (b.x, b.y) == (8.0, 0.0)
    assert (c.x, c.y) == (2.0, 4.0)
    assert (d.x, d.y) == (6.0, 4.0)


def test_make_trapezoid_rejects_out_of_range_params():
    with pytest.raises(ParamOutOfRange):
        TrapezoidParams(1.0, 0.999, 1.0, 0.0)
    with pytest.raises(ParamOutOfRange):
        TrapezoidParams(8.0, 0.5, 4.0, 9.0)
    TrapezoidParams(8.0, 0.5, 4.0, 5.0)  # k = 0.5 itself is in range


def test_make_trapezoid_cd_length():
    # oracle: |CD| must equal k*B = 9; direct distance computation
    a, b, c, d = make_trapezoid(TrapezoidParams(10.0, 0.9, 3.0, -5.0))
    assert abs(norm(d - c) - 9.0) < 1e-12
    assert abs(cross(d - c, b - a)) < 1e-12  # CD parallel AB


# ---------------------------------------------------------------------------
# line_intersection / angle_bisector

def test_line_intersection_axes():
    x_axis = LineEq.normalized(0.0, 1.0, 0.0)
    y_axis = LineEq.normalized(1.0, 0.0, 0.0)
    p = line_intersection(x_axis, y_axis)
    assert p is not None and abs(p.x) < 1e-15 and abs(p.y) < 1e-15


def test_line_intersection_parallel_returns_none():
    l1 = LineEq.normalized(0.0, 1.0, 0.0)
    l2 = LineEq.normalized(0.0, 1.0, 1.0)
    assert line_intersection(l1, l2) is None


def test_line_intersection_hand_solved():
    # x + y = 2 and x - y = 0 meet at (1, 1): hand-solved 2x2 system
    l1 = LineEq.normalized(1.0, 1.0, 2.0)
    l2 = LineEq.normalized(1.0, -1.0, 0.0)
    p = line_intersection(l1, l2)
    assert p is not None
    assert abs(p.x - 1.0) < 1e-12 and abs(p.y - 1.0) < 1e-12


def _line_contains(line, p, tol=1e-12):
    return abs(line.signed_distance(p)) < tol


def test_angle_bisector_symmetric_right_angle():
    line = angle_bisector(Point2(1, 0), Point2(0, 0), Point2(0, 1))
    # bisector of the first quadrant: passes through origin and (1,1)
    assert _line_contains(line, Point2(0, 0))
    assert _line_contains(line, Point2(1, 1))
    # arm lengths must not matter
    line2 = angle_bisector(Point2(2, 0), Point2(0, 0), Point2(0, 2))
    assert _line_contains(line2, Point2(0, 0)) and _line_contains(line2, Point2(1, 1))


def test_angle_bisector_against_rotating_arm_oracle():
    # oracle: rotate the first arm by half the interior angle
    rng = rng_for(11)
    for _ in range(50):
        v = Point2(*rng.uniform(-5, 5, 2))
        a1 = rng.uniform(0, 2 * math.pi)
        opening = rng.uniform(0.2, math.pi - 0.2)
        a2 = a1 + opening
        p_prev = Point2(v.x + 3 * math.cos(a1), v.y + 3 * math.sin(a1))
        p_next = Point2(v.x + 5 * math.cos(a2), v.y + 5 * math.sin(a2))
        half = a1 + opening / 2.0
        on_bisector = Point2(v.x + math.cos(half), v.y + math.sin(half))
        line = angle_bisector(p_prev, v, p_next)
        assert _line_contains(line, v, 1e-9)
        assert _line_contains(line, on_bisector, 1e-9)


def test_angle_bisector_collinear_rejected():
    with pytest.raises(DegenerateAngle):
        angle_bisector(Point2(-1, 0), Point2(0, 0), Point2(1, 0))


# ---------------------------------------------------------------------------
# incenter

def _square_instance():
    verts = (Point2(0, 0), Point2(1, 0), Point2(1, 1), Point2(0, 1))
    return ShapeInstance(kind=ShapeKind.SQUARE, vertices=verts)


def test_incenter_unit_square():
    p = incenter(_square_instance())
    assert abs(p.x - 0.5) < 1e-12 and abs(p.y - 0.5) < 1e-12


def test_incenter_rhombus_diagonals_2_and_4():
    # rhombus with diagonals 2 (x) and 4 (y) centered at origin
    verts = (Point2(-1, 0), Point2(0, -2), Point2(1, 0), Point2(0, 2))
    inst = ShapeInstance(kind=ShapeKind.RHOMBUS, vertices=verts)
    p = incenter(inst)
    assert abs(p.x) < 1e-12 and abs(p.y) < 1e-12


def test_incenter_not_tangential_generic_trapezoid():
    a, b, c, d = make_trapezoid(TrapezoidParams(8.0, 0.5, 4.0, 2.0))
    inst = ShapeInstance(kind=ShapeKind.TRAPEZOID, vertices=(a, b, d, c))
    with pytest.raises(NotTangential):
        incenter(inst)


def test_incenter_matches_stored_circle_and_distances():
    rng = rng_for(42)
    for _ in range(25):
        inst = sample_shape(ShapeKind.TANGENTIAL_QUAD, rng)
        p = incenter(inst)
        assert inst.incircle is not None
        assert norm(p - inst.incircle.center) < 1e-7
        # oracle: recompute the four point-to-side distances directly
        v = inst.vertices
        dists = []
        for i in range(4):
            e = v[(i + 1) % 4] - v[i]
            w = p - v[i]
            dists.append(abs(cross(e, w)) / norm(e))
        assert max(dists) - min(dists) < 1e-6
        assert abs(sum(dists) / 4 - inst.incircle.radius) < 1e-6


def test_incenter_concurrency_of_other_bisector_pair():
    # intersection of the bisectors at vertices 2 and 3 must agree
    rng = rng_for(7)
    for _ in range(10):
        inst = sample_shape(ShapeKind.TANGENTIAL_QUAD, rng)
        v = inst.vertices
        b2 = angle_bisector(v[1], v[2], v[3])
        b3 = angle_bisector(v[2], v[3], v[0])
        q = line_intersection(b2, b3)
        assert q is not None
        assert norm(q - incenter(inst)) < 1e-9


# ---------------------------------------------------------------------------
# validate

def test_validate_unit_square_accepts():
    report = validate([Point2(0, 0), Point2(1, 0), Point2(1, 1), Point2(0, 1)])
    assert report.accept


def test_validate_collinear_rejects():
    report = validate([Point2(0, 0), Point2(1, 0), Point2(2, 0), Point2(0, 1)])
    assert not report.accept
    assert report.min_triple_area <= 1e-6


def test_validate_concave_rejects_and_matches_hull_oracle():
    pts = [Point2(0, 0), Point2(4, 0), Point2(1, 1), Point2(0, 4)]
    report = validate(pts)
    assert not report.convex and not report.accept
    hull = ConvexHull([(p.x, p.y) for p in pts])
    assert len(hull.vertices) == 3


def test_validate_out_of_bounds():
    report = validate([Point2(0, 0), Point2(50, 0), Point2(50, 5), Point2(0, 5)])
    assert not report.in_bounds and not report.accept


def test_validate_convexity_agrees_with_scipy_hull():
    rng = rng_for(3)
    for _ in range(200):
        pts = [Point2(*rng.uniform(-5, 5, 2)) for _ in range(4)]
        report = validate(pts)
        hull = ConvexHull(np.array([(p.x, p.y) for p in pts]), qhull_options="QJ Pp")
        hull_is_quad = len(hull.vertices) == 4
        if report.min_triple_area > 1e-6:
            # hull oracle: convex simple CCW quad <-> all 4 points extreme
            # and traversal order matches hull order
            assert (report.convex and signed_area(pts) > 0) <= hull_is_quad
            if report.convex and signed_area(pts) > 0:
                assert hull_is_quad


# ---------------------------------------------------------------------------
# sample_shape

ALL_KINDS = list(ShapeKind)


@pytest.mark.parametrize("kind", ALL_KINDS, ids=[k.value for k in ALL_KINDS])
def test_sampled_shapes_satisfy_their_constraints(kind):
    rng = rng_for(100)
    for _ in range(200):
        inst = sample_shape(kind, rng)
        assert inst.kind is kind
        assert signed_area(inst.vertices) > 0  # CCW
        assert min_triple_area(inst.vertices) > 1e-6
        res = constraint_residual(kind, inst.vertices, inst.incircle)
        tol = 1e-6 if kind is ShapeKind.TANGENTIAL_QUAD else 1e-9
        assert res < tol, f"{kind}: residual {res}"
        if kind in (ShapeKind.TRAPEZOID, ShapeKind.ISOSCELES_TRAPEZOID):
            assert parallel_exclusivity(inst.vertices) > 1e-6
        if kind is ShapeKind.TANGENTIAL_QUAD:
            assert inst.incircle is not None
            assert pitot_residual(inst.vertices) < 1e-6
        else:
            assert inst.incircle is None


def test_square_sample_right_angles_and_equal_sides():
    rng = rng_for(5)
    inst = sample_shape(ShapeKind.SQUARE, rng)
    v = inst.vertices
    sides = [v[(i + 1) % 4] - v[i] for i in range(4)]
    lengths = [norm(s) for s in sides]
    assert max(lengths) - min(lengths) < 1e-9
    for i in range(4):
        assert abs(geom.dot(sides[i], sides[(i + 1) % 4])) < 1e-9


def test_parallelogram_diagonal_midpoints_coincide():
    # oracle: midpoint characterization of parallelograms
    rng = rng_for(6)
    for _ in range(100):
        v = sample_shape(ShapeKind.PARALLELOGRAM, rng).vertices
        m1 = Point2((v[0].x + v[2].x) / 2, (v[0].y + v[2].y) / 2)
        m2 = Point2((v[1].x + v[3].x) / 2, (v[1].y + v[3].y) / 2)
        assert norm(m1 - m2) < 1e-9


def test_trapezoid_exactly_one_parallel_pair():
    rng = rng_for(8)
    for _ in range(100):
        v = sample_shape(ShapeKind.TRAPEZOID, rng).vertices
        c1 = abs(cross(v[1] - v[0], v[2] - v[3]))
        c2 = abs(cross(v[3] - v[0], v[2] - v[1]))
        assert min(c1, c2) < 1e-9
        assert max(c1, c2) > 1e-6


def test_isosceles_trapezoid_equal_legs():
    rng = rng_for(9)
    for _ in range(100):
        v = sample_shape(ShapeKind.ISOSCELES_TRAPEZOID, rng).vertices
        c1 = abs(cross(v[1] - v[0], v[2] - v[3]))
        c2 = abs(cross(v[3] - v[0], v[2] - v[1]))
        if c1 < c2:  # AB || DC, legs BC and DA
            legs = (norm(v[2] - v[1]), norm(v[0] - v[3]))
        else:
            legs = (norm(v[1] - v[0]), norm(v[3] - v[2]))
        assert abs(legs[0] - legs[1]) < 1e-9


def test_tangential_quad_incircle_tangency():
    rng = rng_for(10)
    for _ in range(100):
        inst = sample_shape(ShapeKind.TANGENTIAL_QUAD, rng)
        c, r = inst.incircle.center, inst.incircle.radius
        v = inst.vertices
        for i in range(4):
            e = v[(i + 1) % 4] - v[i]
            w = c - v[i]
            dist = abs(cross(e, w)) / norm(e)
            assert abs(dist - r) < 1e-6


def test_sample_shape_deterministic():
    a = sample_shape(ShapeKind.TRAPEZOID, rng_for(1234))
    b = sample_shape(ShapeKind.TRAPEZOID, rng_for(1234))
    assert a.vertices == b.vertices  # bit-identical


def test_labels_start_at_lex_min_of_construction_frame():
    # rectangles are built with (0,0) as the lexicographic minimum, so
    # label A always lands on the rotated image of the origin corner
    rng = rng_for(12)
    inst = sample_shape(ShapeKind.RECTANGLE, rng)
    assert inst.labels == ("A", "B", "C", "D")


def test_kind_frequencies_uniform_over_seven():
    # equal-probability sampling over the 7 kinds: expect ~1/7 = 14.29%
    rng = rng_for(2024)
    counts = {k: 0 for k in ShapeKind}
    n = 10_000
    draws = rng.integers(0, len(geom.KINDS), size=n)
    for i in draws:
        counts[geom.KINDS[int(i)]] += 1
    for k, c in counts.items():
        assert 0.133 <= c / n <= 0.153, f"{k}: {c / n:.4f}"
