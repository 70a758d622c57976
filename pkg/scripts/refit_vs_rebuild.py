"""Time BVH refit against a full rebuild while the sphere radius doubles.

    python scripts/refit_vs_rebuild.py --n 200000 --rounds 8
"""

import argparse
import sys
import time

from sphereknn.bvh import build
from sphereknn.data import gen_uniform


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000)
    ap.add_argument("--rounds", type=int, default=8)
    ap.add_argument("--start-radius", type=float, default=1e-3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    pts = gen_uniform(args.n, args.seed).coords
    build(pts[:64], args.start_radius)  # compile outside the timed region

    bvh = build(pts, args.start_radius)
    radius = args.start_radius
    print("round,radius,refit_ms,rebuild_ms,refit/rebuild")
    for i in range(1, args.rounds + 1):
        radius *= 2
        t0 = time.perf_counter()
        bvh.refit(radius)
        refit = time.perf_counter() - t0
        t0 = time.perf_counter()
        build(pts, radius)
        rebuild = time.perf_counter() - t0
        print(f"{i},{radius:.6g},{refit * 1e3:.2f},{rebuild * 1e3:.2f},{refit / rebuild:.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
