"""k-nearest-neighbor search by repeated fixed-radius sphere queries.

A fixed-radius pass finds, for each query, the k closest points among those
whose sphere (at the current radius) contains it. The unbounded search starts
from a small radius, keeps every query whose heap filled up, and re-runs the
rest at double the radius after refitting the BVH. A query that fills its heap
at radius r has seen every point within r, so its k best are final.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .bvh import Bvh, TraversalCounters, _collect, build
from .geometry import radius_sq
from .heap import heap_push, heap_sort_inplace

log = logging.getLogger(__name__)


class DegenerateDatasetError(ValueError):
    """All sampled neighbor distances are zero, so no start radius exists."""


class SearchAborted(RuntimeError):
    """``max_rounds`` ran out before every query resolved."""

    def __init__(self, message: str, rounds: list[SearchRound]):
        super().__init__(message)
        self.rounds = rounds


@dataclass(frozen=True)
class SearchConfig:
    k: int
    start_radius: float | None = None
    growth_factor: float = 2.0
    max_rounds: int | None = None
    radius_cap: float | None = None
    sample_size: int = 100
    sample_k: int = 4
    rng_seed: int = 0
    leaf_capacity: int = 4
    refit_mode: str = "refit"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not self.growth_factor > 1:
            raise ValueError(f"growth_factor must be > 1, got {self.growth_factor}")
        if self.start_radius is not None and not self.start_radius > 0:
            raise ValueError(f"start_radius must be > 0, got {self.start_radius}")
        if self.radius_cap is not None and not self.radius_cap > 0:
            raise ValueError(f"radius_cap must be > 0, got {self.radius_cap}")
        if self.max_rounds is not None and self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        if self.sample_size < 1 or self.sample_k < 1:
            raise ValueError("sample_size and sample_k must be >= 1")
        if self.refit_mode not in ("refit", "rebuild"):
            raise ValueError(f"refit_mode must be 'refit' or 'rebuild', got {self.refit_mode!r}")


@dataclass
class SearchRound:
    round_index: int
    radius: float
    active_queries: int
    resolved_this_round: int
    aabb_tests: int
    sphere_tests: int
    elapsed: float
    bvh_time: float = 0.0
    queries: np.ndarray | None = field(default=None, repr=False)

    def as_dict(self) -> dict:
        return {
            "round_index": self.round_index,
            "radius": self.radius,
            "active_queries": self.active_queries,
            "resolved_this_round": self.resolved_this_round,
            "aabb_tests": self.aabb_tests,
            "sphere_tests": self.sphere_tests,
            "elapsed": self.elapsed,
            "bvh_time": self.bvh_time,
        }


@dataclass
class KnnResult:
    """Per-query neighbor lists plus the round log.

    ``indices``/``distances`` are (n, k); unresolved rows (bounded or
    single-radius runs only) are padded with -1 / inf after their partial
    candidates.
    """

    indices: np.ndarray
    distances: np.ndarray
    resolved: np.ndarray
    rounds: list[SearchRound]
    start_radius: float
    final_radius: float
    totals: TraversalCounters = field(default_factory=TraversalCounters)

    @property
    def k(self) -> int:
        return self.indices.shape[1]

    @property
    def elapsed(self) -> float:
        return sum(r.elapsed + r.bvh_time for r in self.rounds)

    def all_resolved(self) -> bool:
        return bool(self.resolved.all())


@njit(cache=True)
def _fixed_radius_batch(centers, order, left, right, start, count, lo, hi, r2, queries,
                        out_d2, out_idx, out_size, out_aabb, out_sphere, stack):
    n = centers.shape[0]
    buf_idx = np.empty(n, dtype=np.int64)
    buf_d2 = np.empty(n, dtype=np.float64)
    for qi in range(queries.shape[0]):
        q = queries[qi]
        hits, a, s = _collect(centers, order, left, right, start, count, lo, hi, r2,
                              centers[q, 0], centers[q, 1], centers[q, 2],
                              buf_idx, buf_d2, stack)
        hd = out_d2[qi]
        hx = out_idx[qi]
        size = 0
        for h in range(hits):
            j = buf_idx[h]
            if j != q:
                size = heap_push(hd, hx, size, buf_d2[h], j)
        heap_sort_inplace(hd, hx, size)
        out_size[qi] = size
        out_aabb[qi] = a
        out_sphere[qi] = s


@dataclass
class FixedRadiusResult:
    """Sorted candidate rows for a batch of queries; row i belongs to ``queries[i]``."""

    queries: np.ndarray
    d2: np.ndarray
    indices: np.ndarray
    sizes: np.ndarray
    counters: TraversalCounters

    def full(self) -> np.ndarray:
        return self.sizes == self.d2.shape[1]


def fixed_radius_knns(points, queries, radius: float, k: int, bvh: Bvh | None = None) -> FixedRadiusResult:
    """k closest points within ``radius`` of each query point (self excluded).

    Queries with fewer than k points in range get every one of them. ``bvh``
    must already sit at ``radius``; one is built when omitted.
    """
    coords = np.ascontiguousarray(getattr(points, "coords", points), dtype=np.float64)
    if bvh is None:
        bvh = build(coords, radius)
    elif bvh.current_radius != radius:
        raise ValueError(f"BVH is at radius {bvh.current_radius}, query asked for {radius}")
    queries = np.ascontiguousarray(queries, dtype=np.int64)
    nq = len(queries)
    d2 = np.full((nq, k), np.inf)
    idx = np.full((nq, k), -1, dtype=np.int64)
    sizes = np.zeros(nq, dtype=np.int64)
    aabb = np.zeros(nq, dtype=np.int64)
    sph = np.zeros(nq, dtype=np.int64)
    _fixed_radius_batch(bvh.centers, bvh.order, bvh.left, bvh.right, bvh.start, bvh.count,
                        bvh.lo, bvh.hi, radius_sq(radius), queries, d2, idx, sizes, aabb, sph,
                        bvh._stack)
    # slots past each row's size hold stale heap data
    cols = np.arange(k)
    pad = cols[None, :] >= sizes[:, None]
    d2[pad] = np.inf
    idx[pad] = -1
    return FixedRadiusResult(queries, d2, idx, sizes,
                             TraversalCounters(int(aabb.sum()), int(sph.sum())))


def sample_start_radius(points, sample_size: int = 100, sample_k: int = 4, rng_seed: int = 0) -> float:
    """Smallest neighbor distance seen around a random sample of points.

    Draws ``min(sample_size, n)`` points without replacement, finds each one's
    ``sample_k`` nearest neighbors over the whole dataset by direct scan, and
    returns the minimum of those distances. Zero distances (duplicate points)
    are skipped in favour of the smallest positive one.
    """
    coords = np.asarray(getattr(points, "coords", points), dtype=np.float64)
    n = len(coords)
    if n < 2:
        raise ValueError("start radius sampling needs at least 2 points")
    rng = np.random.default_rng(rng_seed)
    picks = rng.choice(n, size=min(sample_size, n), replace=False)
    kk = min(sample_k, n - 1)
    found = []
    for s in picks:
        d2 = ((coords - coords[s]) ** 2).sum(axis=1)
        d2[s] = np.inf
        found.append(np.partition(d2, kk - 1)[:kk])
    dists = np.sqrt(np.concatenate(found))
    positive = dists[dists > 0]
    if not len(positive):
        raise DegenerateDatasetError("every sampled neighbor distance is zero")
    return float(positive.min())


def _run_rounds(coords: np.ndarray, config: SearchConfig, cap: float | None) -> KnnResult:
    n = len(coords)
    k = config.k
    if n <= k:
        raise ValueError(f"need more than k={k} points, dataset has n={n}")
    if config.start_radius is not None:
        start_radius = float(config.start_radius)
    else:
        start_radius = sample_start_radius(coords, config.sample_size, config.sample_k,
                                           config.rng_seed)

    out_idx = np.full((n, k), -1, dtype=np.int64)
    out_d2 = np.full((n, k), np.inf)
    resolved = np.zeros(n, dtype=bool)
    active = np.arange(n, dtype=np.int64)
    rounds: list[SearchRound] = []
    totals = TraversalCounters()
    bvh = None
    radius = start_radius

    for round_index in range(1, 10**9):
        last = False
        if cap is not None and radius >= cap:
            radius, last = float(cap), True

        t0 = time.perf_counter()
        if bvh is None or config.refit_mode == "rebuild":
            bvh = build(coords, radius, config.leaf_capacity)
        else:
            bvh.refit(radius)
        bvh_time = time.perf_counter() - t0

        t0 = time.perf_counter()
        res = fixed_radius_knns(coords, active, radius, k, bvh)
        elapsed = time.perf_counter() - t0

        done = res.full()
        keep = done | last
        out_idx[active[keep]] = res.indices[keep]
        out_d2[active[keep]] = res.d2[keep]
        resolved[active[done]] = True
        totals += res.counters
        rounds.append(SearchRound(round_index, radius, len(active), int(done.sum()),
                                  res.counters.aabb_tests, res.counters.sphere_tests,
                                  elapsed, bvh_time, queries=active))
        log.debug("round %d r=%.6g active=%d resolved=%d", round_index, radius,
                  len(active), int(done.sum()))
        active = active[~done]
        if not len(active) or last:
            break
        if config.max_rounds is not None and round_index >= config.max_rounds:
            raise SearchAborted(
                f"{len(active)} queries unresolved after {round_index} rounds "
                f"(radius {radius:.6g})", rounds)
        radius *= config.growth_factor

    return KnnResult(out_idx, np.sqrt(out_d2), resolved, rounds, start_radius, radius, totals)


def true_knn(points, config: SearchConfig) -> KnnResult:
    """Exact k nearest neighbors of every point, self excluded.

    Any ``radius_cap`` on ``config`` is ignored; see :func:`true_knn_bounded`.
    """
    coords = np.ascontiguousarray(getattr(points, "coords", points), dtype=np.float64)
    return _run_rounds(coords, config, None)


def true_knn_bounded(points, config: SearchConfig) -> KnnResult:
    """Same rounds as :func:`true_knn`, stopping once the radius reaches ``radius_cap``.

    The stopping round runs at exactly the cap. Queries still short of k
    neighbors keep their partial lists and are flagged unresolved.
    """
    if config.radius_cap is None:
        raise ValueError("true_knn_bounded needs config.radius_cap")
    coords = np.ascontiguousarray(getattr(points, "coords", points), dtype=np.float64)
    return _run_rounds(coords, config, config.radius_cap)


def baseline_fixed_radius(points, k: int, radius: float, leaf_capacity: int = 4) -> KnnResult:
    """One fixed-radius pass over every point at ``radius``."""
    if not radius >= 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    coords = np.ascontiguousarray(getattr(points, "coords", points), dtype=np.float64)
    n = len(coords)
    t0 = time.perf_counter()
    bvh = build(coords, radius, leaf_capacity)
    bvh_time = time.perf_counter() - t0
    queries = np.arange(n, dtype=np.int64)
    t0 = time.perf_counter()
    res = fixed_radius_knns(coords, queries, radius, k, bvh)
    elapsed = time.perf_counter() - t0
    done = res.full()
    rnd = SearchRound(1, float(radius), n, int(done.sum()), res.counters.aabb_tests,
                      res.counters.sphere_tests, elapsed, bvh_time, queries=queries)
    return KnnResult(res.indices, np.sqrt(res.d2), done, [rnd], float(radius), float(radius),
                     TraversalCounters(res.counters.aabb_tests, res.counters.sphere_tests))


def k_sqrt(n: int) -> int:
    """The ``k = sqrt(n)`` convention, rounded down."""
    return math.isqrt(n)
