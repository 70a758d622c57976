"""Run reports: JSON assembly, result digests, oracle comparison, atomic writes."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from importlib import resources
from pathlib import Path

import numpy as np

from .search import KnnResult

SCHEMA_VERSION = 1


def result_digest(result: KnnResult) -> str:
    """sha256 over the sorted neighbor lists, distances and resolved flags."""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(result.indices, dtype="<i8").tobytes())
    h.update(np.ascontiguousarray(result.distances, dtype="<f8").tobytes())
    h.update(np.ascontiguousarray(result.resolved, dtype="u1").tobytes())
    return "sha256:" + h.hexdigest()


def totals_block(result: KnnResult) -> dict:
    return {
        "rounds": len(result.rounds),
        "sphere_tests": sum(r.sphere_tests for r in result.rounds),
        "aabb_tests": sum(r.aabb_tests for r in result.rounds),
        "wall_time": sum(r.elapsed + r.bvh_time for r in result.rounds),
        "start_radius": result.start_radius,
        "final_radius": result.final_radius,
        "resolved": int(result.resolved.sum()),
        "unresolved": int((~result.resolved).sum()),
    }


def _ratio(a: float, b: float) -> float | None:
    return a / b if b else None


def comparison_block(baseline: KnnResult, radius_kind: str, search: KnnResult) -> dict:
    base = totals_block(baseline)
    ours = totals_block(search)
    return {
        "baseline": {
            "radius": baseline.final_radius,
            "radius_kind": radius_kind,
            "sphere_tests": base["sphere_tests"],
            "aabb_tests": base["aabb_tests"],
            "wall_time": base["wall_time"],
            "resolved": base["resolved"],
        },
        "ratios": {
            "sphere_tests": _ratio(base["sphere_tests"], ours["sphere_tests"]),
            "aabb_tests": _ratio(base["aabb_tests"], ours["aabb_tests"]),
            "wall_time": _ratio(base["wall_time"], ours["wall_time"]),
        },
    }


def run_report(command: str, config: dict, dataset: dict, result: KnnResult,
               comparison: dict | None = None, verification: dict | None = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "dataset": dataset,
        "rounds": [r.as_dict() for r in result.rounds],
        "totals": totals_block(result),
        "comparison": comparison,
        "verification": verification,
        "digest": result_digest(result),
    }


def compare_knn(indices: np.ndarray, distances: np.ndarray, ref_indices: np.ndarray,
                ref_distances: np.ndarray, rtol: float = 1e-9,
                queries: np.ndarray | None = None) -> list[int]:
    """Queries whose neighbor lists disagree with the reference.

    Row i belongs to point ``queries[i]`` (default: point i); the returned
    values are those point indices.

    Distance lists must match within ``rtol``. Index sets must match exactly
    for neighbors strictly closer than the reference k-th distance; beyond
    that, ties at the k-th distance may legitimately pick different points.
    """
    indices = np.asarray(indices)
    ref_indices = np.asarray(ref_indices)
    if indices.shape != ref_indices.shape:
        raise ValueError(f"shape mismatch {indices.shape} vs {ref_indices.shape}")
    bad = []
    close = np.isclose(distances, ref_distances, rtol=rtol, atol=0.0).all(axis=1)
    ids = np.arange(len(indices)) if queries is None else np.asarray(queries)
    for r, q in enumerate(ids.tolist()):
        row = indices[r]
        if not close[r] or q in row or len(set(row.tolist())) != len(row):
            bad.append(q)
            continue
        kth = ref_distances[r, -1] * (1 - rtol)
        mine = set(row[distances[r] < kth].tolist())
        theirs = set(ref_indices[r][ref_distances[r] < kth].tolist())
        if mine != theirs:
            bad.append(q)
    return bad


def write_json_atomic(path: str | Path, payload: dict) -> None:
    """Write JSON via a temp file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=False)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def write_text_atomic(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def load_schema(name: str = "run_report") -> dict:
    text = resources.files("sphereknn").joinpath("schemas", f"{name}.json").read_text()
    return json.loads(text)
