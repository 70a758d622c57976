"""Bounded max-heap of (squared distance, point index) candidates.

The heap keeps the ``k`` smallest keys seen so far, with the largest at the
root so it can be evicted in O(log k). Keys compare lexicographically, so at
equal distance the lower point index wins. That makes the final contents
independent of insertion order.

The array kernels are numba-compiled and are what the search loop runs;
:class:`NeighborHeap` wraps the same kernels for use from Python.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _above(d_a, i_a, d_b, i_b):
    return d_a > d_b or (d_a == d_b and i_a > i_b)


@njit(cache=True)
def _sift_down(hd, hi, size, pos):
    while True:
        child = 2 * pos + 1
        if child >= size:
            return
        if child + 1 < size and _above(hd[child + 1], hi[child + 1], hd[child], hi[child]):
            child += 1
        if not _above(hd[child], hi[child], hd[pos], hi[pos]):
            return
        hd[pos], hd[child] = hd[child], hd[pos]
        hi[pos], hi[child] = hi[child], hi[pos]
        pos = child


@njit(cache=True)
def heap_push(hd, hi, size, d2, idx):
    """Offer a candidate to the heap stored in ``hd``/``hi``; return the new size."""
    cap = hd.shape[0]
    if size < cap:
        pos = size
        hd[pos] = d2
        hi[pos] = idx
        while pos > 0:
            parent = (pos - 1) // 2
            if not _above(hd[pos], hi[pos], hd[parent], hi[parent]):
                break
            hd[pos], hd[parent] = hd[parent], hd[pos]
            hi[pos], hi[parent] = hi[parent], hi[pos]
            pos = parent
        return size + 1
    if cap == 0 or not _above(hd[0], hi[0], d2, idx):
        return size
    hd[0] = d2
    hi[0] = idx
    _sift_down(hd, hi, size, 0)
    return size


@njit(cache=True)
def heap_sort_inplace(hd, hi, size):
    """Turn the first ``size`` slots into ascending order (destroys the heap)."""
    end = size
    while end > 1:
        end -= 1
        hd[0], hd[end] = hd[end], hd[0]
        hi[0], hi[end] = hi[end], hi[0]
        _sift_down(hd, hi, end, 0)


class NeighborHeap:
    """The ``k`` closest candidates for one query point.

    ``owner`` is the query's own index; offers of it are ignored so a point
    is never its own neighbor.
    """

    def __init__(self, k: int, owner: int = -1):
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        self.k = k
        self.owner = owner
        self._d2 = np.empty(k, dtype=np.float64)
        self._idx = np.empty(k, dtype=np.int64)
        self._size = 0

    def __len__(self) -> int:
        return self._size

    def full(self) -> bool:
        return self._size == self.k

    def push(self, d2: float, idx: int) -> None:
        if idx == self.owner:
            return
        self._size = heap_push(self._d2, self._idx, self._size, float(d2), int(idx))

    def worst(self) -> tuple[float, int]:
        if not self._size:
            raise IndexError("empty heap")
        return float(self._d2[0]), int(self._idx[0])

    def clear(self) -> None:
        self._size = 0

    def sorted(self) -> tuple[np.ndarray, np.ndarray]:
        """(squared distances, indices) in ascending order; the heap is left intact."""
        d2 = self._d2[: self._size].copy()
        idx = self._idx[: self._size].copy()
        heap_sort_inplace(d2, idx, self._size)
        return d2, idx
