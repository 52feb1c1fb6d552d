"""Planar geometry primitives: intrinsic volumes, Steiner points, clipping."""

import numpy as np
import pytest

from tessperc.geom2d import (
    FaceGeometry,
    Window,
    clip_polygon,
    clip_segment,
    convex_polygons_intersect,
    intrinsic_volumes,
    is_strictly_convex_ccw,
    point_in_convex,
    polygon_area,
    polygon_steiner,
    segment_intersects_convex,
    steiner_point,
    unit_square_window,
)

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def regular_polygon(m, radius=1.0, phase=0.0):
    th = phase + 2.0 * np.pi * np.arange(m) / m
    return radius * np.column_stack([np.cos(th), np.sin(th)])


def random_convex_polygon(rng, m=8):
    """Convex hull of random points, as a CCW polygon."""
    from scipy.spatial import ConvexHull

    pts = rng.normal(size=(m + 6, 2))
    hull = ConvexHull(pts)
    return pts[hull.vertices]


class TestIntrinsicVolumes:
    def test_point(self):
        v = intrinsic_volumes(FaceGeometry(0, np.array([[2.0, 3.0]])))
        assert v == (1.0, 0.0, 0.0)

    def test_segment_length(self):
        g = FaceGeometry(1, np.array([[0.0, 0.0], [3.0, 4.0]]))
        assert intrinsic_volumes(g) == (1.0, 5.0, 0.0)

    def test_unit_square(self):
        v = intrinsic_volumes(FaceGeometry(2, SQUARE))
        assert np.allclose(v, (1.0, 2.0, 1.0))

    def test_equilateral_triangle(self):
        tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])
        v = intrinsic_volumes(FaceGeometry(2, tri))
        assert np.allclose(v, (1.0, 1.5, np.sqrt(3) / 4))

    def test_regular_hexagon_side_one(self):
        hexa = regular_polygon(6, radius=1.0)
        v = intrinsic_volumes(FaceGeometry(2, hexa))
        assert np.allclose(v, (1.0, 3.0, 3.0 * np.sqrt(3) / 2))

    def test_degenerate_polygon_rejected(self):
        flat = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        with pytest.raises(ValueError):
            intrinsic_volumes(FaceGeometry(2, flat))


class TestSteinerPoint:
    def test_segment_midpoint(self):
        g = FaceGeometry(1, np.array([[0.0, 0.0], [2.0, 4.0]]))
        assert np.allclose(steiner_point(g), [1.0, 2.0])

    def test_center_of_symmetric_bodies(self):
        for m in (3, 4, 6, 9):
            poly = regular_polygon(m, phase=0.37) + np.array([5.0, -2.0])
            assert np.allclose(polygon_steiner(poly), [5.0, -2.0], atol=1e-12)

    def test_translation_covariance(self):
        rng = np.random.default_rng(5)
        poly = random_convex_polygon(rng)
        shift = np.array([3.25, -1.5])
        assert np.allclose(polygon_steiner(poly + shift),
                           polygon_steiner(poly) + shift, atol=1e-12)

    def test_support_function_quadrature_oracle(self):
        """The Steiner point equals (1/pi) * integral of h(u) u over the
        unit circle; compare the exterior-angle formula against a dense
        trapezoidal quadrature of the support function."""
        rng = np.random.default_rng(11)
        th = np.linspace(0.0, 2.0 * np.pi, 200001)[:-1]
        u = np.column_stack([np.cos(th), np.sin(th)])
        for _ in range(5):
            poly = random_convex_polygon(rng)
            h = (u @ poly.T).max(axis=1)
            quad = (h[:, None] * u).mean(axis=0) * 2.0  # (1/pi) * integral
            assert np.allclose(polygon_steiner(poly), quad, atol=1e-6)


class TestClipping:
    def test_polygon_no_overlap(self):
        assert clip_polygon(SQUARE, SQUARE + 5.0) is None

    def test_polygon_contained(self):
        inner = SQUARE * 0.4 + 0.2
        out = clip_polygon(inner, SQUARE)
        assert abs(polygon_area(out) - 0.16) < 1e-12

    def test_polygon_half_overlap(self):
        out = clip_polygon(SQUARE, SQUARE + np.array([0.5, 0.0]))
        assert abs(polygon_area(out) - 0.5) < 1e-12

    def test_polygon_area_against_monte_carlo(self):
        rng = np.random.default_rng(17)
        for trial in range(2):
            pa = random_convex_polygon(rng)
            pb = random_convex_polygon(rng) * 0.8 + rng.normal(scale=0.3, size=2)
            out = clip_polygon(pa, pb)
            area = 0.0 if out is None else polygon_area(out)
            lo = np.minimum(pa.min(0), pb.min(0)) - 0.01
            hi = np.maximum(pa.max(0), pb.max(0)) + 0.01
            m = 100000
            pts = rng.uniform(lo, hi, size=(m, 2))
            inside = np.fromiter(
                (point_in_convex(q, pa) and point_in_convex(q, pb)
                 for q in pts), bool, m)
            box = np.prod(hi - lo)
            est = inside.mean() * box
            se = box * np.sqrt(inside.mean() * (1 - inside.mean()) / m) + 1e-9
            assert abs(est - area) < 4 * se, f"trial {trial}: {est} vs {area}"

    def test_segment_cases(self):
        a, b = np.array([-1.0, 0.5]), np.array([2.0, 0.5])
        res = clip_segment(a, b, SQUARE)
        assert np.allclose(res[0], [0.0, 0.5]) and np.allclose(res[1], [1.0, 0.5])
        assert clip_segment(np.array([-1.0, 2.0]), np.array([2.0, 2.0]), SQUARE) is None

    def test_predicates(self):
        assert point_in_convex(np.array([0.5, 0.5]), SQUARE)
        assert not point_in_convex(np.array([1.5, 0.5]), SQUARE)
        assert segment_intersects_convex(np.array([-1.0, 0.5]),
                                         np.array([0.2, 0.5]), SQUARE)
        assert not segment_intersects_convex(np.array([-1.0, 0.5]),
                                             np.array([-0.2, 0.5]), SQUARE)
        assert convex_polygons_intersect(SQUARE, SQUARE + 0.5)
        assert not convex_polygons_intersect(SQUARE, SQUARE + 2.0)

    def test_convexity_predicate(self):
        assert is_strictly_convex_ccw(SQUARE)
        assert not is_strictly_convex_ccw(SQUARE[::-1])  # clockwise
        notch = np.array([[0, 0], [2, 0], [1, 0.1], [1, 2]], dtype=float)
        assert not is_strictly_convex_ccw(notch)


class TestWindow:
    def test_area_scales_linearly_in_t(self):
        assert abs(unit_square_window(400.0).area - 400.0) < 1e-9

    def test_shift_preserves_area(self):
        w = unit_square_window(25.0)
        assert abs(w.shifted([3.0, -2.0]).area - w.area) < 1e-12
        assert np.allclose(w.shifted([3.0, -2.0]).poly, w.poly + [3.0, -2.0])

    def test_as_rect(self):
        r = unit_square_window(100.0).as_rect()
        assert np.allclose(r, (-5.0, -5.0, 5.0, 5.0))
        tri = Window(np.array([[-1.0, -1.0], [1.0, -1.0], [0.0, 1.0]]))
        assert tri.as_rect() is None

    def test_rejects_nonconvex(self):
        with pytest.raises(ValueError):
            Window(np.array([[0, 0], [2, 0], [1, 0.1], [1, 2]], dtype=float))
