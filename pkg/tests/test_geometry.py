import math

import numpy as np
import pytest

import mechsearch.geometry as geo
from tests.conftest import random_convex

SQ = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def test_area_and_centroid_known():
    assert geo.polygon_area(SQ) == pytest.approx(1.0)
    assert geo.polygon_centroid(SQ) == pytest.approx([0.5, 0.5])
    tri = np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]])
    assert geo.polygon_area(tri) == pytest.approx(2.0)
    assert geo.polygon_centroid(tri) == pytest.approx([2 / 3, 2 / 3])


def test_transform_rotates_then_translates():
    out = geo.transform(SQ, (1.0, 2.0, math.pi / 2))
    assert out[1] == pytest.approx([1.0, 3.0])  # (1,0) -> (0,1) -> +(1,2)


def test_point_queries():
    assert geo.point_in_convex(SQ, (0.5, 0.5))
    assert not geo.point_in_convex(SQ, (1.5, 0.5))
    assert geo.point_polygon_distance(SQ, (0.3, 0.7)) == 0.0
    assert geo.point_polygon_distance(SQ, (2.0, 0.5)) == pytest.approx(1.0)
    assert geo.point_polygon_distance(SQ, (2.0, 2.0)) == pytest.approx(math.sqrt(2))


def test_overlap_and_slack():
    b = SQ + np.array([0.5, 0.0])
    assert geo.polygons_overlap(SQ, b)
    c = SQ + np.array([1.0, 0.0])  # exactly touching
    assert not geo.polygons_overlap(SQ, c)
    assert not geo.polygons_overlap(SQ, b, slack=0.6)


def _separation_oracle(a, b, d, hi=10.0, iters=80):
    lo, cur = 0.0, hi
    if geo.polygons_overlap(a, b + hi * d):
        return math.inf
    for _ in range(iters):
        mid = 0.5 * (lo + cur)
        if geo.polygons_overlap(a, b + mid * d):
            lo = mid
        else:
            cur = mid
    return cur


def test_separation_along_axis_aligned():
    b = SQ + np.array([0.6, 0.0])
    t = geo.separation_along(SQ, b, np.array([1.0, 0.0]))
    assert t == pytest.approx(0.4, abs=1e-12)
    assert geo.separation_along(SQ, SQ + np.array([5.0, 0]), np.array([1.0, 0])) == 0.0


def test_separation_along_matches_bisection(rng):
    for _ in range(100):
        a = random_convex(rng, int(rng.integers(3, 8)), rng.uniform(0.5, 2))
        off = rng.uniform(-0.5, 0.5, 2)
        b = random_convex(rng, int(rng.integers(3, 8)), rng.uniform(0.5, 2),
                          center=off)
        if not geo.polygons_overlap(a, b):
            continue
        ang = rng.uniform(0, 2 * np.pi)
        d = np.array([math.cos(ang), math.sin(ang)])
        t = geo.separation_along(a, b, d)
        oracle = _separation_oracle(a, b, d)
        if math.isinf(t) or math.isinf(oracle):
            assert math.isinf(t) == math.isinf(oracle)
            continue
        assert t == pytest.approx(oracle, abs=1e-9)
        assert not geo.polygons_overlap(a, b + (t + 1e-9) * d)


def test_disc_separation_matches_gap_oracle(rng):
    for _ in range(120):
        poly = random_convex(rng, int(rng.integers(3, 8)), rng.uniform(0.3, 1.5))
        c = rng.uniform(-1.0, 1.0, 2)
        r = rng.uniform(0.05, 0.5)
        if geo.point_polygon_distance(poly, c) >= r:
            continue
        ang = rng.uniform(0, 2 * np.pi)
        d = np.array([math.cos(ang), math.sin(ang)])
        t = geo.disc_separation_along(c, r, poly, d)
        moved = poly + t * d
        assert geo.point_polygon_distance(moved, c) == pytest.approx(r, abs=1e-7)
        # strictly before t the disc still penetrates
        before = poly + 0.99 * t * d
        assert geo.point_polygon_distance(before, c) < r


def test_clip_and_intersection_area():
    b = SQ + np.array([0.5, 0.5])
    assert geo.intersection_area(SQ, b) == pytest.approx(0.25)
    assert geo.intersection_area(b, SQ) == pytest.approx(0.25)
    assert geo.intersection_area(SQ, SQ + np.array([5, 5])) == 0.0
    assert geo.intersection_area(SQ, SQ) == pytest.approx(1.0)


def test_intersection_area_bounded(rng):
    for _ in range(50):
        a = random_convex(rng, 5, 1.0)
        b = random_convex(rng, 6, 1.2, center=rng.uniform(-0.5, 0.5, 2))
        inter = geo.intersection_area(a, b)
        assert 0.0 <= inter <= min(abs(geo.polygon_area(a)),
                                   abs(geo.polygon_area(b))) + 1e-12


def test_width_and_rectangle():
    rect = geo.rectangle(np.array([0.0, 0.0]), 0.4, 0.1, 0.0)
    assert geo.polygon_width_along(rect, 0.0) == pytest.approx(0.4)
    assert geo.polygon_width_along(rect, math.pi / 2) == pytest.approx(0.1)
    assert geo.polygon_area(rect) == pytest.approx(0.04)
    rot = geo.rectangle(np.array([1.0, 1.0]), 0.4, 0.1, math.pi / 3)
    assert geo.polygon_width_along(rot, math.pi / 3) == pytest.approx(0.4)
