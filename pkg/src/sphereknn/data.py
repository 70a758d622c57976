"""Point datasets: CSV loading, validation, 2D lifting and synthetic generators."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .geometry import Point3


class DataError(ValueError):
    """Raised for unreadable, empty or malformed datasets."""


@dataclass(frozen=True)
class PointSet:
    """An immutable (n, 3) float64 coordinate array plus provenance.

    2D inputs are stored with ``z = 0`` and tagged ``dim=2``.
    """

    coords: np.ndarray
    dim: int = 3
    source: str = "memory"

    def __post_init__(self):
        c = np.array(self.coords, dtype=np.float64, order="C", copy=True)
        if c.ndim == 2 and c.shape[1] == 2:
            c = np.column_stack([c, np.zeros(len(c))])
            object.__setattr__(self, "dim", 2)
        if c.ndim != 2 or c.shape[1] != 3:
            raise DataError(f"expected (n, 2) or (n, 3) coordinates, got shape {c.shape}")
        if len(c) == 0:
            raise DataError("dataset is empty")
        if not np.isfinite(c).all():
            bad = int(np.flatnonzero(~np.isfinite(c).all(axis=1))[0])
            raise DataError(f"non-finite coordinate at point {bad}")
        if self.dim not in (2, 3):
            raise DataError(f"dim must be 2 or 3, got {self.dim}")
        if self.dim == 2 and np.any(c[:, 2] != 0.0):
            raise DataError("2D point sets must have z == 0")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    def __len__(self) -> int:
        return len(self.coords)

    def __getitem__(self, i: int) -> Point3:
        x, y, z = self.coords[i]
        return Point3(float(x), float(y), float(z))

    def head(self, d: int) -> PointSet:
        """First ``d`` points, keeping the provenance tag."""
        return PointSet(self.coords[:d], dim=self.dim, source=self.source)

    def describe(self) -> dict:
        return {"source": self.source, "n": len(self), "dim": self.dim}


def _resolve_column(spec, header: list[str] | None, width: int) -> int:
    if isinstance(spec, int) or (isinstance(spec, str) and spec.lstrip("-").isdigit()):
        idx = int(spec)
        if not 0 <= idx < width:
            raise DataError(f"column index {idx} out of range for {width} columns")
        return idx
    if header is None:
        raise DataError(f"column {spec!r} given by name but the file has no header")
    try:
        return header.index(spec)
    except ValueError:
        raise DataError(f"column {spec!r} not found in header {header}") from None


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(
    path: str | Path,
    columns: Sequence[int | str] | None = None,
    limit: int | None = None,
) -> PointSet:
    """Load points from a comma-delimited file.

    ``columns`` selects x, y and optionally z, by 0-based index or header
    name; by default the first two or three columns are used, depending on
    the width of the first row. A header is detected when no field of the
    first row parses as a number. Only the first ``limit`` data rows are read.

    Errors cite 1-based file line numbers and 1-based column positions.
    """
    path = Path(path)
    if limit is not None and limit < 1:
        raise DataError(f"limit must be >= 1, got {limit}")
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc

    rows: list[tuple[float, ...]] = []
    with fh:
        reader = csv.reader(fh)
        header = None
        cols = None
        for line_no, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            row = [cell.strip() for cell in row]
            if cols is None:
                if not rows and header is None and not any(_is_number(c) for c in row):
                    header = row
                    continue
                width = len(row)
                wanted = list(columns) if columns is not None else list(range(min(width, 3)))
                if len(wanted) not in (2, 3):
                    raise DataError(f"need 2 or 3 columns, got {wanted}")
                cols = [_resolve_column(c, header, width) for c in wanted]
            values = []
            for c in cols:
                if c >= len(row):
                    raise DataError(f"row {line_no}, column {c + 1}: missing value")
                try:
                    v = float(row[c])
                except ValueError:
                    raise DataError(
                        f"row {line_no}, column {c + 1}: non-numeric value {row[c]!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(f"row {line_no}, column {c + 1}: non-finite value {row[c]!r}")
                values.append(v)
            rows.append(tuple(values))
            if limit is not None and len(rows) >= limit:
                break

    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.asarray(rows, dtype=np.float64)
    dim = arr.shape[1]
    return PointSet(arr, dim=dim, source=str(path))


def gen_uniform(n: int, seed: int = 0) -> PointSet:
    """``n`` points with i.i.d. uniform coordinates on [0, 1]."""
    if n < 1:
        raise DataError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)
    return PointSet(rng.random((n, 3)), source=f"uniform:{n}:seed={seed}")


def gen_clustered(
    n: int,
    cluster_count: int = 5,
    cluster_spread: float = 0.01,
    outlier_fraction: float = 0.001,
    seed: int = 0,
) -> PointSet:
    """Gaussian blobs around uniformly placed centers, plus sparse outliers.

    Outliers are drawn uniformly from the box that is 10x the bounding box of
    the clustered points (same center). Their count is
    ``round(outlier_fraction * n)``; the result is shuffled so outliers are
    spread through the file order.
    """
    if n < 1:
        raise DataError(f"n must be >= 1, got {n}")
    if cluster_count < 1:
        raise DataError("cluster_count must be >= 1")
    if not 0.0 <= outlier_fraction < 1.0:
        raise DataError("outlier_fraction must be in [0, 1)")
    rng = np.random.default_rng(seed)
    n_out = int(round(outlier_fraction * n))
    n_in = n - n_out
    centers = rng.random((cluster_count, 3))
    labels = rng.integers(0, cluster_count, size=n_in)
    inliers = centers[labels] + rng.normal(0.0, cluster_spread, size=(n_in, 3))
    parts = [inliers]
    if n_out:
        if n_in:
            lo, hi = inliers.min(axis=0), inliers.max(axis=0)
        else:
            lo, hi = centers.min(axis=0), centers.max(axis=0)
        mid, half = (lo + hi) / 2, np.maximum((hi - lo) / 2, cluster_spread)
        parts.append(mid + (rng.random((n_out, 3)) * 2 - 1) * half * 10)
    coords = np.concatenate(parts)[rng.permutation(n)]
    src = f"clustered:{n},{cluster_count},{cluster_spread},{outlier_fraction}:seed={seed}"
    return PointSet(coords, source=src)
