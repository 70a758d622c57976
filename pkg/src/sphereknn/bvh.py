"""Binary BVH over equal-radius spheres centred on the dataset points.

Topology is built once from the centers alone (median split on the longest
axis of the centroid bounds), stored as flat arrays with every child indexed
after its parent. Bounds are then filled by :func:`_refit_bounds`, walking the
node array backwards. Growing the radius later reruns only that pass, so a
refit tree is bit-identical to a fresh build at the same radius.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

from .geometry import Aabb, Point3, box_contains, radius_sq, sq_dist


@dataclass
class TraversalCounters:
    """Software stand-ins for the hardware intersection tests."""

    aabb_tests: int = 0
    sphere_tests: int = 0

    def add(self, aabb_tests: int, sphere_tests: int) -> None:
        self.aabb_tests += int(aabb_tests)
        self.sphere_tests += int(sphere_tests)

    def __iadd__(self, other: TraversalCounters) -> TraversalCounters:
        self.add(other.aabb_tests, other.sphere_tests)
        return self


@njit(cache=True)
def _build_topology(centers, leaf_capacity):
    n = centers.shape[0]
    cap = 2 * n
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    start = np.zeros(cap, dtype=np.int64)
    count = np.zeros(cap, dtype=np.int64)
    order = np.arange(n, dtype=np.int64)

    count[0] = n
    n_nodes = 1
    stack = np.empty(cap, dtype=np.int64)
    sp = 0
    stack[sp] = 0
    sp += 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        s = start[node]
        c = count[node]
        if c <= leaf_capacity:
            continue
        seg = order[s : s + c].copy()
        axis = 0
        best = -1.0
        for d in range(3):
            lo = np.inf
            hi = -np.inf
            for p in seg:
                v = centers[p, d]
                if v < lo:
                    lo = v
                if v > hi:
                    hi = v
            if hi - lo > best:
                best = hi - lo
                axis = d
        keys = np.empty(c, dtype=np.float64)
        for i in range(c):
            keys[i] = centers[seg[i], axis]
        perm = np.argsort(keys, kind="mergesort")
        for i in range(c):
            order[s + i] = seg[perm[i]]
        half = c // 2
        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        left[node] = lc
        right[node] = rc
        start[lc] = s
        count[lc] = half
        start[rc] = s + half
        count[rc] = c - half
        stack[sp] = rc
        stack[sp + 1] = lc
        sp += 2
    return (
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        start[:n_nodes].copy(),
        count[:n_nodes].copy(),
        order,
    )


@njit(cache=True)
def _refit_bounds(centers, order, left, right, start, count, radius, lo, hi):
    for node in range(left.shape[0] - 1, -1, -1):
        if left[node] < 0:
            for d in range(3):
                lo[node, d] = np.inf
                hi[node, d] = -np.inf
            for i in range(start[node], start[node] + count[node]):
                p = order[i]
                for d in range(3):
                    a = centers[p, d] - radius
                    b = centers[p, d] + radius
                    if a < lo[node, d]:
                        lo[node, d] = a
                    if b > hi[node, d]:
                        hi[node, d] = b
        else:
            l = left[node]
            r = right[node]
            for d in range(3):
                lo[node, d] = min(lo[l, d], lo[r, d])
                hi[node, d] = max(hi[l, d], hi[r, d])


@njit(cache=True)
def _collect(centers, order, left, right, start, count, lo, hi, r2, qx, qy, qz,
             out_idx, out_d2, stack):
    """Depth-first point query; returns (hits, aabb_tests, sphere_tests).

    Hits land in ``out_idx``/``out_d2`` in visit order (left subtree first).
    """
    n_hits = 0
    aabb_tests = 0
    sphere_tests = 0
    sp = 0
    stack[sp] = 0
    sp += 1
    while sp > 0:
        sp -= 1
        node = stack[sp]
        aabb_tests += 1
        if not box_contains(lo[node], hi[node], qx, qy, qz):
            continue
        if left[node] < 0:
            for i in range(start[node], start[node] + count[node]):
                p = order[i]
                sphere_tests += 1
                d2 = sq_dist(qx, qy, qz, centers[p, 0], centers[p, 1], centers[p, 2])
                if d2 <= r2:
                    out_idx[n_hits] = p
                    out_d2[n_hits] = d2
                    n_hits += 1
        else:
            stack[sp] = right[node]
            stack[sp + 1] = left[node]
            sp += 2
    return n_hits, aabb_tests, sphere_tests


def _as_centers(points) -> np.ndarray:
    coords = getattr(points, "coords", points)
    return np.ascontiguousarray(coords, dtype=np.float64)


class Bvh:
    """Flat-array BVH; see :func:`build`."""

    def __init__(self, centers: np.ndarray, radius: float, leaf_capacity: int = 4):
        if centers.ndim != 2 or centers.shape[1] != 3 or len(centers) == 0:
            raise ValueError("BVH needs a non-empty (n, 3) array of centers")
        if not radius >= 0:
            raise ValueError(f"radius must be >= 0, got {radius}")
        if leaf_capacity < 1:
            raise ValueError(f"leaf_capacity must be >= 1, got {leaf_capacity}")
        self.centers = centers
        self.leaf_capacity = int(leaf_capacity)
        self.left, self.right, self.start, self.count, self.order = _build_topology(
            centers, self.leaf_capacity
        )
        m = len(self.left)
        self.lo = np.empty((m, 3))
        self.hi = np.empty((m, 3))
        self.current_radius = float(radius)
        _refit_bounds(centers, self.order, self.left, self.right, self.start, self.count,
                      self.current_radius, self.lo, self.hi)
        self._stack = np.empty(m + 1, dtype=np.int64)

    @property
    def node_count(self) -> int:
        return len(self.left)

    @property
    def n(self) -> int:
        return len(self.centers)

    def is_leaf(self, node: int) -> bool:
        return self.left[node] < 0

    def bounds(self, node: int) -> Aabb:
        return Aabb(Point3(*map(float, self.lo[node])), Point3(*map(float, self.hi[node])))

    def primitives(self, node: int) -> np.ndarray:
        """Primitive indices under ``node`` (a leaf or a whole subtree)."""
        if self.is_leaf(node):
            s = self.start[node]
            return self.order[s : s + self.count[node]]
        return np.concatenate([self.primitives(self.left[node]), self.primitives(self.right[node])])

    def refit(self, new_radius: float) -> Bvh:
        """Grow every sphere to ``new_radius`` and recompute bounds bottom-up.

        Topology is untouched. Shrinking is rejected.
        """
        if not new_radius >= self.current_radius:
            raise ValueError(
                f"refit radius {new_radius} is below current radius {self.current_radius}"
            )
        self.current_radius = float(new_radius)
        _refit_bounds(self.centers, self.order, self.left, self.right, self.start, self.count,
                      self.current_radius, self.lo, self.hi)
        return self

    def collect(self, q, counters: TraversalCounters | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Indices and squared distances of every sphere containing ``q``, in visit order."""
        qx, qy, qz = (float(v) for v in q)
        out_idx = np.empty(self.n, dtype=np.int64)
        out_d2 = np.empty(self.n, dtype=np.float64)
        hits, a, s = _collect(self.centers, self.order, self.left, self.right, self.start,
                              self.count, self.lo, self.hi, radius_sq(self.current_radius),
                              qx, qy, qz,
                              out_idx, out_d2, self._stack)
        if counters is not None:
            counters.add(a, s)
        return out_idx[:hits], out_d2[:hits]

    def query_point(self, q, counters: TraversalCounters,
                    visit: Callable[[int, float], None]) -> None:
        """Call ``visit(index, squared_distance)`` once per sphere containing ``q``."""
        idx, d2 = self.collect(q, counters)
        for i, d in zip(idx.tolist(), d2.tolist()):
            visit(i, d)


def build(centers, radius: float, leaf_capacity: int = 4) -> Bvh:
    """Build a BVH over spheres of ``radius`` around each point of ``centers``.

    ``centers`` may be a :class:`~sphereknn.data.PointSet` or an (n, 3) array.
    Construction is deterministic for a fixed input order.
    """
    return Bvh(_as_centers(centers), radius, leaf_capacity)
