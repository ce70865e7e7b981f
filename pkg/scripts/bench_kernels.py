#!/usr/bin/env python3
"""Kernel-size scaling sweep.

Times the incremental engine for every catalog kernel on one random
stream and prints ns/event against the nonzero tap count, checking the
linear-complexity behaviour of the per-event update.
"""

import argparse
import math

import numpy as np

from evconv.cli import run_bench
from evconv.events import SensorGeometry
from evconv.kernels import KERNEL_NAMES, make_kernel


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--events", type=int, default=500_000)
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--reps", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    geom = SensorGeometry(args.size, args.size)
    rng = np.random.default_rng(args.seed)
    n = args.events
    arrays = (
        np.sort(rng.uniform(0.0, 2.0, n)),
        rng.integers(0, geom.width, n),
        rng.integers(0, geom.height, n),
        rng.choice(np.array([-1, 1], dtype=np.int64), n),
    )
    rows = run_bench(arrays, geom, list(KERNEL_NAMES), 2 * math.pi, 0.1, args.reps)
    best = {}
    for row in rows:
        k = row["kernel"]
        if k not in best or row["ns_per_event"] < best[k]["ns_per_event"]:
            best[k] = row

    print(f"{'kernel':<12} {'nnz':>4} {'ns/event':>10} {'ns/event/nnz':>14} {'Mev/s':>8}")
    for name in sorted(best, key=lambda k: make_kernel(k).nnz):
        row = best[name]
        print(
            f"{name:<12} {row['nnz']:>4} {row['ns_per_event']:>10.1f} "
            f"{row['ns_per_event_per_nnz']:>14.1f} {row['events_per_s'] / 1e6:>8.1f}"
        )
    if best["identity"]["ns_per_event"] > 0:
        r = best["gaussian3"]["ns_per_event"] / best["identity"]["ns_per_event"]
        print(f"\ngaussian3/identity ratio: {r:.2f} (nonzero-count ratio 9)")


if __name__ == "__main__":
    main()
