"""Per-round time and remaining-query counts for one multi-round search.

    python scripts/round_profile.py --gen clustered:50000 --k 5
    python scripts/round_profile.py --csv 3D_spatial_network.txt --cols 1,2,3 \
        --limit 400000 --k 5 --start-radius 0.001
"""

import argparse
import sys

from sphereknn.cli import parse_gen
from sphereknn.data import load_csv
from sphereknn.search import SearchConfig, true_knn


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gen", default="clustered:50000")
    ap.add_argument("--csv")
    ap.add_argument("--cols", help="comma list of column indices or names")
    ap.add_argument("--limit", type=int)
    ap.add_argument("--k", type=int, default=5)
    ap.add_argument("--start-radius", type=float)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if args.csv:
        cols = args.cols.split(",") if args.cols else None
        points = load_csv(args.csv, cols, limit=args.limit)
    else:
        points = parse_gen(args.gen, args.seed)
    res = true_knn(points, SearchConfig(k=args.k, start_radius=args.start_radius,
                                        rng_seed=args.seed))

    print(f"# {points.source}  n={len(points)}  k={args.k}  start_radius={res.start_radius:.6g}")
    print("round,radius,active,left_after,sphere_tests,aabb_tests,seconds")
    for r in res.rounds:
        left = r.active_queries - r.resolved_this_round
        print(f"{r.round_index},{r.radius:.6g},{r.active_queries},{left},"
              f"{r.sphere_tests},{r.aabb_tests},{r.elapsed + r.bvh_time:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
