"""Run the search from several sampled start radii and compare the cost.

    python scripts/start_radius_sensitivity.py --gen clustered:20000 --draws 10
"""

import argparse
import math
import sys

import numpy as np

from sphereknn.cli import parse_gen
from sphereknn.search import SearchConfig, sample_start_radius, true_knn


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--gen", default="clustered:20000")
    ap.add_argument("--k", default="sqrt")
    ap.add_argument("--draws", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    points = parse_gen(args.gen, args.seed)
    k = math.isqrt(len(points)) if args.k == "sqrt" else int(args.k)
    reference = None
    print("draw,start_radius,rounds,sphere_tests,seconds,same_result")
    tests = []
    for draw in range(args.draws):
        r0 = sample_start_radius(points, rng_seed=draw)
        res = true_knn(points, SearchConfig(k=k, start_radius=r0))
        if reference is None:
            reference = res.indices
        tests.append(res.totals.sphere_tests)
        print(f"{draw},{r0:.6g},{len(res.rounds)},{res.totals.sphere_tests},"
              f"{res.elapsed:.4f},{np.array_equal(res.indices, reference)}")
    print(f"# sphere-test spread best/worst: {max(tests) / min(tests):.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
