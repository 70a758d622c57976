import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sphereknn.geometry import (
    Aabb,
    Point3,
    QueryRay,
    Sphere,
    aabb_of_sphere,
    point_in_aabb,
    point_in_sphere,
    radius_sq,
    squared_distance,
)

coord = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
points = st.builds(Point3, coord, coord, coord)
radii = st.floats(min_value=0.0, max_value=1e3, allow_nan=False)

UNIT_BOX = Aabb(Point3(-1, -1, -1), Point3(1, 1, 1))


def test_squared_distance_trivial():
    assert squared_distance(Point3(0, 0, 0), Point3(0, 0, 0)) == 0
    assert squared_distance(Point3(0, 0, 0), Point3(3, 4, 0)) == 25


def test_squared_distance_random_matches_scalar(rng):
    a, b = rng.random(3), rng.random(3)
    expected = (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2
    assert squared_distance(Point3(*a), Point3(*b)) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize(
    "p, inside",
    [((0, 0, 0), True), ((1, 0, 0), True), ((1.0001, 0, 0), False), ((-1, -1, -1), True)],
)
def test_point_in_aabb(p, inside):
    assert point_in_aabb(Point3(*p), UNIT_BOX) is inside


def test_point_in_sphere_center_and_boundary():
    for r in (0.0, 0.5, 3.0):
        assert point_in_sphere(Point3(1, 2, 3), Sphere(Point3(1, 2, 3), r))
    assert point_in_sphere(Point3(3, 0, 0), Sphere(Point3(0, 0, 0), 3.0))
    assert point_in_sphere(Point3(0.6, 0.8, 0), Sphere(Point3(0, 0, 0), 1.0))
    assert not point_in_sphere(Point3(3.0000001, 0, 0), Sphere(Point3(0, 0, 0), 3.0))


def test_point_in_sphere_random(rng):
    for _ in range(100):
        p, c = rng.random(3), rng.random(3)
        r = rng.random() * 0.8
        expected = math.dist(p, c) <= r
        assert point_in_sphere(Point3(*p), Sphere(Point3(*c), r)) == expected


def test_aabb_of_sphere_examples():
    assert aabb_of_sphere(Sphere(Point3(0, 0, 0), 1)) == UNIT_BOX
    assert aabb_of_sphere(Sphere(Point3(2, 3, 4), 0)) == Aabb(Point3(2, 3, 4), Point3(2, 3, 4))
    assert aabb_of_sphere(Sphere(Point3(1, 1, 1), 0.5)) == Aabb(
        Point3(0.5, 0.5, 0.5), Point3(1.5, 1.5, 1.5)
    )


def test_invalid_shapes():
    with pytest.raises(ValueError):
        Sphere(Point3(0, 0, 0), -1.0)
    with pytest.raises(ValueError):
        Aabb(Point3(1, 0, 0), Point3(0, 0, 0))


def test_query_ray_is_degenerate():
    ray = QueryRay(Point3(1, 2, 3))
    assert ray.direction == Point3(0, 0, 1)
    assert 0 < ray.t_max < 1e-300


@given(p=points, c=points, r=radii)
def test_sphere_test_implies_box_test(p, c, r):
    s = Sphere(c, r)
    if point_in_sphere(p, s):
        assert point_in_aabb(p, aabb_of_sphere(s))


@given(a=points, b=points)
def test_squared_distance_symmetric(a, b):
    assert squared_distance(a, b) == squared_distance(b, a)
    assert squared_distance(a, a) == 0
    if a != b:
        assert squared_distance(a, b) > 0 or any(abs(u - v) < 1e-154 for u, v in zip(a, b))


@given(r=st.floats(min_value=0, max_value=1e100, allow_nan=False))
def test_radius_sq_matches_rooted_comparison(r):
    x = radius_sq(r)
    assert math.sqrt(x) <= r
    assert math.sqrt(np.nextafter(x, np.inf)) > r


@given(d2=st.floats(min_value=0, max_value=1e6, allow_nan=False))
def test_rooted_distance_at_radius_counts(d2):
    # a point whose reported distance equals r is inside the sphere of radius r
    assert d2 <= radius_sq(math.sqrt(d2))
