"""Command-line entry point.

Subcommands: ``knn``, ``compare``, ``sweep``, ``oracle``. Exit codes are
0 success, 1 usage error, 2 data error, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import oracle
from .data import DataError, PointSet, gen_clustered, gen_uniform, load_csv
from .report import (
    comparison_block,
    compare_knn,
    run_report,
    write_json_atomic,
    write_text_atomic,
)
from .search import (
    DegenerateDatasetError,
    SearchAborted,
    SearchConfig,
    baseline_fixed_radius,
    k_sqrt,
    true_knn,
    true_knn_bounded,
)

log = logging.getLogger("sphereknn")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3
DEFAULT_ORACLE_CAP = 20000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# -- dataset specifiers -------------------------------------------------------

def parse_gen(spec: str, seed: int) -> PointSet:
    """``uniform:<n>`` or ``clustered:<n>[,clusters,spread,outlier_frac]``."""
    kind, _, rest = spec.partition(":")
    parts = [p for p in rest.split(",") if p]
    try:
        if kind == "uniform" and len(parts) == 1:
            return gen_uniform(int(parts[0]), seed=seed)
        if kind == "clustered" and 1 <= len(parts) <= 4:
            n = int(parts[0])
            clusters = int(parts[1]) if len(parts) > 1 else 5
            spread = float(parts[2]) if len(parts) > 2 else 0.01
            frac = float(parts[3]) if len(parts) > 3 else 0.001
            return gen_clustered(n, clusters, spread, frac, seed=seed)
    except ValueError as exc:
        if isinstance(exc, DataError):
            raise
        raise UsageError(f"bad generator spec {spec!r}: {exc}") from None
    raise UsageError(f"bad generator spec {spec!r}; use uniform:<n> or clustered:<n>[,c,s,f]")


def parse_csv_spec(spec: str) -> tuple[str, list[str] | None]:
    """``path[:xcol,ycol[,zcol]]``; a trailing ``:a,b`` is read as a column list."""
    path, sep, cols = spec.rpartition(":")
    if sep and "," in cols and "/" not in cols:
        names = [c for c in cols.split(",") if c]
        if len(names) not in (2, 3):
            raise UsageError(f"need 2 or 3 columns in {spec!r}")
        return path, names
    return spec, None


def load_dataset(args) -> PointSet:
    if bool(args.csv) == bool(args.gen):
        raise UsageError("give exactly one of --csv or --gen")
    if args.csv:
        path, cols = parse_csv_spec(args.csv)
        return load_csv(path, cols, limit=args.limit)
    points = parse_gen(args.gen, args.seed)
    if args.limit is not None:
        points = points.head(args.limit)
    return points


def resolve_k(text: str, n: int) -> int:
    if text == "sqrt":
        return k_sqrt(n)
    try:
        k = int(text)
    except ValueError:
        raise UsageError(f"--k must be an integer or 'sqrt', got {text!r}") from None
    if k < 1:
        raise UsageError(f"--k must be >= 1, got {k}")
    return k


def check_k(k: int, n: int) -> None:
    if n <= k:
        raise DataError(f"k={k} needs more than k points; dataset has n={n}")


def search_config(args, k: int, radius_cap: float | None = None) -> SearchConfig:
    return SearchConfig(
        k=k,
        start_radius=args.start_radius,
        growth_factor=args.growth,
        max_rounds=args.max_rounds,
        radius_cap=radius_cap,
        sample_size=args.sample_size,
        sample_k=args.sample_k,
        rng_seed=args.seed,
        leaf_capacity=args.leaf_capacity,
        refit_mode=args.refit_mode,
    )


def config_echo(cfg: SearchConfig, **extra) -> dict:
    out = {
        "k": cfg.k,
        "start_radius": cfg.start_radius,
        "growth_factor": cfg.growth_factor,
        "max_rounds": cfg.max_rounds,
        "radius_cap": cfg.radius_cap,
        "sample_size": cfg.sample_size,
        "sample_k": cfg.sample_k,
        "seed": cfg.rng_seed,
        "leaf_capacity": cfg.leaf_capacity,
        "refit_mode": cfg.refit_mode,
    }
    out.update(extra)
    return out


def emit(payload: dict, out: str | None) -> None:
    if out:
        write_json_atomic(out, payload)
    else:
        json.dump(payload, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")


def _oracle_allowed(n: int, cap: int) -> None:
    if n > cap:
        raise DataError(f"oracle refused: n={n} exceeds the oracle cap of {cap}")


# -- subcommands --------------------------------------------------------------

def cmd_knn(args) -> int:
    points = load_dataset(args)
    k = resolve_k(args.k, len(points))
    check_k(k, len(points))
    cfg = search_config(args, k)
    result = true_knn(points, cfg)

    verification = None
    code = EXIT_OK
    if args.verify or args.fixture:
        if args.fixture:
            ref = json.loads(Path(args.fixture).read_text())
            if ref.get("k") != k or ref.get("dataset", {}).get("n") != len(points):
                raise DataError(f"fixture {args.fixture} was made for a different k or n")
            ref_idx = np.asarray(ref["indices"], dtype=np.int64)
            ref_d = np.asarray(ref["distances"], dtype=np.float64)
            reference = str(args.fixture)
        else:
            _oracle_allowed(len(points), args.oracle_cap)
            ref_idx, ref_d = oracle.exact_knn(points, k)
            reference = "live-oracle"
        bad = compare_knn(result.indices, result.distances, ref_idx, ref_d)
        verification = {"reference": reference, "passed": not bad, "mismatches": len(bad)}
        if bad:
            log.error("verification failed for %d queries (first: %s)", len(bad), bad[:10])
            code = EXIT_VERIFY

    report = run_report("knn", config_echo(cfg), points.describe(), result,
                        verification=verification)
    emit(report, args.out)
    t = report["totals"]
    log.info("knn: n=%d k=%d rounds=%d sphere_tests=%d digest=%s", len(points), k,
             t["rounds"], t["sphere_tests"], report["digest"])
    return code


def run_compare(points: PointSet, args, k: int, k_mode: str) -> dict:
    check_k(k, len(points))
    if len(points) <= args.oracle_cap:
        kth = oracle.kth_distances(points, k)
    else:
        # search results are exact, so their k-th distances stand in for the oracle's
        log.warning("n=%d above oracle cap; taking k-th distances from the search", len(points))
        kth = true_knn(points, search_config(args, k)).distances[:, -1]
    if args.percentile is not None:
        radius = oracle.nearest_rank(kth, args.percentile)
        kind = f"p{args.percentile:g}"
        cfg = search_config(args, k, radius_cap=radius)
        result = true_knn_bounded(points, cfg)
    else:
        radius = float(kth.max())
        kind = "maxDist"
        cfg = search_config(args, k)
        result = true_knn(points, cfg)
    baseline = baseline_fixed_radius(points, k, radius, args.leaf_capacity)
    comparison = comparison_block(baseline, kind, result)
    return run_report("compare", config_echo(cfg, k_mode=k_mode, percentile=args.percentile),
                      points.describe(), result, comparison=comparison)


def cmd_compare(args) -> int:
    points = load_dataset(args)
    k = resolve_k(args.k, len(points))
    report = run_compare(points, args, k, args.k)
    emit(report, args.out)
    log.info("compare: n=%d k=%d sphere-test ratio=%s", len(points), k,
             report["comparison"]["ratios"]["sphere_tests"])
    return EXIT_OK


def _sweep_dataset(name: str, size: int, seed: int) -> PointSet:
    if name.startswith("csv:"):
        path, cols = parse_csv_spec(name[4:])
        return load_csv(path, cols, limit=size)
    if name == "uniform":
        return gen_uniform(size, seed=seed)
    if name.startswith("clustered"):
        _, _, params = name.partition(":")
        return parse_gen(f"clustered:{size}" + (f",{params}" if params else ""), seed)
    raise UsageError(f"unknown sweep dataset {name!r}")


AGGREGATE_FIELDS = [
    "dataset", "size", "k", "status", "rounds", "sphere_tests", "aabb_tests",
    "baseline_sphere_tests", "baseline_aabb_tests", "sphere_ratio", "wall_time",
    "baseline_wall_time", "digest",
]


def cmd_sweep(args) -> int:
    sizes = [s for s in (args.sizes or "").split(",") if s.strip()]
    datasets = [d for d in (args.datasets or "").split(",") if d.strip()]
    if not sizes:
        raise UsageError("--sizes must list at least one size")
    if not datasets:
        raise UsageError("--datasets must list at least one dataset")
    try:
        sizes = [int(s) for s in sizes]
    except ValueError:
        raise UsageError(f"--sizes must be integers, got {args.sizes!r}") from None
    out = Path(args.out)

    rows = []
    failed = 0
    for name in datasets:
        for size in sizes:
            label = f"{name.replace(':', '_').replace('/', '_').replace(',', '_')}_{size}"
            row = {"dataset": name, "size": size, "k": None, "status": "ok"}
            try:
                points = _sweep_dataset(name, size, args.seed)
                k = resolve_k(args.k_mode, len(points))
                row["k"] = k
                report = run_compare(points, args, k, args.k_mode)
                write_json_atomic(out / f"{label}.json", report)
                t, c = report["totals"], report["comparison"]
                row.update(
                    rounds=t["rounds"], sphere_tests=t["sphere_tests"], aabb_tests=t["aabb_tests"],
                    baseline_sphere_tests=c["baseline"]["sphere_tests"],
                    baseline_aabb_tests=c["baseline"]["aabb_tests"],
                    sphere_ratio=c["ratios"]["sphere_tests"], wall_time=t["wall_time"],
                    baseline_wall_time=c["baseline"]["wall_time"], digest=report["digest"],
                )
            except (DataError, ValueError, SearchAborted, UsageError) as exc:
                failed += 1
                row["status"] = f"error: {exc}"
                log.error("sweep cell %s failed: %s", label, exc)
            rows.append(row)

    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=AGGREGATE_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({f: row.get(f) for f in AGGREGATE_FIELDS})
    write_text_atomic(out / "aggregate.csv", buf.getvalue())

    trends = {}
    for name in datasets:
        ratios = [r.get("sphere_ratio") for r in rows if r["dataset"] == name]
        ok = all(v is not None for v in ratios)
        trends[name] = {
            "sphere_ratios": ratios,
            "non_decreasing": ok and all(a <= b for a, b in zip(ratios, ratios[1:])),
        }
    write_json_atomic(out / "summary.json", {
        "sizes": sizes, "datasets": datasets, "k_mode": args.k_mode,
        "percentile": args.percentile, "cells": len(rows), "failed": failed, "trends": trends,
    })
    return EXIT_DATA if failed else EXIT_OK


def cmd_oracle(args) -> int:
    points = load_dataset(args)
    k = resolve_k(args.k, len(points))
    check_k(k, len(points))
    _oracle_allowed(len(points), args.oracle_cap)
    idx, dist = oracle.exact_knn(points, k)
    kth = dist[:, -1]
    payload = {
        "kind": "oracle",
        "dataset": points.describe(),
        "k": k,
        "seed": args.seed,
        "max_dist": float(kth.max()),
        "p99_radius": oracle.nearest_rank(kth, 99),
        "indices": idx.tolist(),
        "distances": dist.tolist(),
    }
    emit(payload, args.out)
    return EXIT_OK


# -- argument wiring ----------------------------------------------------------

def _dataset_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--csv", help="path[:xcol,ycol[,zcol]] (index or header name)")
    p.add_argument("--gen", help="uniform:<n> | clustered:<n>[,clusters,spread,outlier_frac]")
    p.add_argument("--limit", type=int, help="use only the first N points")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output file (stdout when omitted)")
    p.add_argument("--oracle-cap", type=int, default=DEFAULT_ORACLE_CAP)


def _search_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--start-radius", type=float, help="skip sampling and start here")
    p.add_argument("--growth", type=float, default=2.0, help="radius multiplier per round")
    p.add_argument("--max-rounds", type=int)
    p.add_argument("--sample-size", type=int, default=100)
    p.add_argument("--sample-k", type=int, default=4)
    p.add_argument("--leaf-capacity", type=int, default=4)
    p.add_argument("--refit-mode", choices=["refit", "rebuild"], default="refit")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sphereknn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    verbose = _Parser(add_help=False)
    verbose.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = sub.add_parser("knn", parents=[verbose], help="run the multi-round search")
    _dataset_flags(p)
    _search_flags(p)
    p.add_argument("--k", default="5", help="neighbor count or 'sqrt'")
    p.add_argument("--verify", action="store_true", help="check against the brute-force oracle")
    p.add_argument("--fixture", help="check against an oracle file written by 'oracle'")
    p.set_defaults(func=cmd_knn)

    p = sub.add_parser("compare", parents=[verbose], help="multi-round search vs single fixed-radius pass")
    _dataset_flags(p)
    _search_flags(p)
    p.add_argument("--k", default="5", help="neighbor count or 'sqrt'")
    p.add_argument("--percentile", type=float, help="bound both runs at this k-th distance percentile")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", parents=[verbose], help="compare across sizes and datasets")
    _search_flags(p)
    p.add_argument("--sizes", required=True, help="comma-separated dataset sizes")
    p.add_argument("--datasets", default="uniform,clustered",
                   help="comma list of uniform | clustered[:c,s,f] | csv:<path>")
    p.add_argument("--k-mode", default="5", help="neighbor count or 'sqrt'")
    p.add_argument("--percentile", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--oracle-cap", type=int, default=DEFAULT_ORACLE_CAP)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", parents=[verbose], help="write brute-force reference results")
    _dataset_flags(p)
    p.add_argument("--k", default="5", help="neighbor count or 'sqrt'")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"sphereknn: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DegenerateDatasetError, SearchAborted, OSError, ValueError) as exc:
        print(f"sphereknn: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
