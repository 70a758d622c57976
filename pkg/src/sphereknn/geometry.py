"""Points, spheres, boxes and the containment predicates used everywhere else.

The scalar kernels (``sq_dist``, ``box_contains``) are numba-compiled so the
BVH traversal and the Python-level API evaluate exactly the same arithmetic.
Distances are kept squared; roots are taken only when results are reported.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

from numba import njit

__all__ = [
    "Point3",
    "Sphere",
    "Aabb",
    "QueryRay",
    "squared_distance",
    "point_in_aabb",
    "point_in_sphere",
    "aabb_of_sphere",
    "radius_sq",
    "sq_dist",
    "box_contains",
]


@njit(cache=True, inline="always")
def sq_dist(ax, ay, az, bx, by, bz):
    dx = ax - bx
    dy = ay - by
    dz = az - bz
    return dx * dx + dy * dy + dz * dz


@njit(cache=True, inline="always")
def box_contains(lo, hi, x, y, z):
    # lo/hi are length-3 views; boundary counts as inside
    return (
        lo[0] <= x <= hi[0]
        and lo[1] <= y <= hi[1]
        and lo[2] <= z <= hi[2]
    )


def radius_sq(r: float) -> float:
    """Largest double ``x`` with ``sqrt(x) <= r``.

    Comparing squared distances against this threshold gives the same answer
    as comparing the reported (rooted) distance against ``r``; plain ``r * r``
    can round below ``d * d`` when ``r`` is itself a rooted distance.
    """
    if r == math.inf:
        return math.inf
    x = r * r
    while math.sqrt(x) > r:
        x = math.nextafter(x, -math.inf)
    while math.sqrt(up := math.nextafter(x, math.inf)) <= r:
        x = up
    return x


@dataclass(frozen=True)
class Point3:
    x: float
    y: float
    z: float = 0.0

    def __iter__(self):
        yield self.x
        yield self.y
        yield self.z


@dataclass(frozen=True)
class Sphere:
    center: Point3
    radius: float

    def __post_init__(self):
        if not self.radius >= 0:
            raise ValueError(f"sphere radius must be >= 0, got {self.radius}")


@dataclass(frozen=True)
class Aabb:
    min: Point3
    max: Point3

    def __post_init__(self):
        for lo, hi in zip(self.min, self.max):
            if lo > hi:
                raise ValueError(f"invalid box: min {self.min} exceeds max {self.max}")

    def contains_box(self, other: Aabb) -> bool:
        return all(a <= b for a, b in zip(self.min, other.min)) and all(
            a >= b for a, b in zip(self.max, other.max)
        )


@dataclass(frozen=True)
class QueryRay:
    """A zero-length probe ray.

    Kept as vocabulary only: a ray of length ``FLOAT_MIN`` hits exactly the
    spheres that contain its origin, so queries are answered as point
    containment and the direction never matters.
    """

    origin: Point3
    direction: Point3 = Point3(0.0, 0.0, 1.0)
    t_min: float = 0.0
    t_max: float = sys.float_info.min


def squared_distance(a: Point3, b: Point3) -> float:
    return sq_dist(a.x, a.y, a.z, b.x, b.y, b.z)


def point_in_aabb(p: Point3, box: Aabb) -> bool:
    return (
        box.min.x <= p.x <= box.max.x
        and box.min.y <= p.y <= box.max.y
        and box.min.z <= p.z <= box.max.z
    )


def point_in_sphere(p: Point3, s: Sphere) -> bool:
    return squared_distance(p, s.center) <= radius_sq(s.radius)


def aabb_of_sphere(s: Sphere) -> Aabb:
    c, r = s.center, s.radius
    return Aabb(Point3(c.x - r, c.y - r, c.z - r), Point3(c.x + r, c.y + r, c.z + r))
