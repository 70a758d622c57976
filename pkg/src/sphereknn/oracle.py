"""Brute-force reference answers.

Plain numpy scans over the full distance matrix, processed in row blocks.
Nothing here touches the BVH or the heap kernels, so agreement with the
search code is an independent check. Ties at equal distance go to the lower
index, the same rule the search uses.
"""

from __future__ import annotations

import math

import numpy as np

_BLOCK = 256


def _coords(points) -> np.ndarray:
    return np.asarray(getattr(points, "coords", points), dtype=np.float64)


def _sq_dists(block: np.ndarray, coords: np.ndarray) -> np.ndarray:
    # same term order as the search's scalar kernel: dx*dx + dy*dy + dz*dz
    dx = block[:, 0, None] - coords[None, :, 0]
    dy = block[:, 1, None] - coords[None, :, 1]
    dz = block[:, 2, None] - coords[None, :, 2]
    return dx * dx + dy * dy + dz * dz


def _check_k(n: int, k: int) -> None:
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if n <= k:
        raise ValueError(f"need more than k={k} points, dataset has n={n}")


def exact_knn(points, k: int) -> tuple[np.ndarray, np.ndarray]:
    """(indices, distances), each (n, k), ascending per row, self excluded."""
    coords = _coords(points)
    n = len(coords)
    _check_k(n, k)
    out_idx = np.empty((n, k), dtype=np.int64)
    out_d2 = np.empty((n, k), dtype=np.float64)
    for b0 in range(0, n, _BLOCK):
        d2 = _sq_dists(coords[b0 : b0 + _BLOCK], coords)
        rows = np.arange(len(d2))
        d2[rows, rows + b0] = np.inf
        kth = np.partition(d2, k - 1, axis=1)[:, k - 1]
        for r in range(len(d2)):
            cand = np.flatnonzero(d2[r] <= kth[r])  # ascending index
            pick = cand[np.argsort(d2[r, cand], kind="stable")[:k]]
            out_idx[b0 + r] = pick
            out_d2[b0 + r] = d2[r, pick]
    return out_idx, np.sqrt(out_d2)


def exact_fixed_radius(points, q: int, radius: float) -> set[int]:
    """Every index other than ``q`` within ``radius`` of point ``q`` (inclusive)."""
    if not radius >= 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    coords = _coords(points)
    d = np.sqrt(_sq_dists(coords[q : q + 1], coords)[0])
    hits = np.flatnonzero(d <= radius)
    return set(hits[hits != q].tolist())


def kth_distances(points, k: int) -> np.ndarray:
    """Distance from each point to its k-th nearest other point."""
    return exact_knn(points, k)[1][:, k - 1]


def max_knn_distance(points, k: int) -> float:
    """The smallest fixed radius that resolves every query (``maxDist``)."""
    return float(kth_distances(points, k).max())


def nearest_rank(values: np.ndarray, pct: float) -> float:
    """Nearest-rank percentile: the ceil(pct/100 * n)-th smallest value."""
    if not 0 < pct <= 100:
        raise ValueError(f"percentile must be in (0, 100], got {pct}")
    v = np.sort(np.asarray(values, dtype=np.float64))
    rank = max(1, math.ceil(pct * len(v) / 100.0))
    return float(v[rank - 1])


def percentile_knn_distance(points, k: int, pct: float) -> float:
    return nearest_rank(kth_distances(points, k), pct)
