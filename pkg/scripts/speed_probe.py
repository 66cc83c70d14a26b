#!/usr/bin/env python3
"""Wall-clock comparison of the three refinement engines on shared blocks.

Times each engine at its default iteration budget over the same set of
noisy textured working areas and prints totals, per-block means and the
ratios relative to the multi-selection engine.
"""

import argparse
import sys
import time

import numpy as np

from mcrefine.basis import projection_context
from mcrefine.extrapolate import ExtrapolationParams, run
from mcrefine.frame import BlockRef, build_layout


def make_windows(count, area, seed):
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:area, 0:area].astype(np.float64)
    out = []
    for _ in range(count):
        a, b = rng.integers(0, 7, size=2)
        amp = rng.uniform(10.0, 40.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        sigma = rng.uniform(2.0, 20.0)
        w = 128.0 + amp * np.cos(2.0 * np.pi * (a * yy + b * xx) / area + phase)
        out.append(w + rng.normal(0.0, sigma, size=(area, area)))
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--blocks", type=int, default=100)
    ap.add_argument("--block-size", type=int, default=16)
    ap.add_argument("--seed", type=int, default=31)
    ap.add_argument("--mode", choices=("fft", "matrix"), default="fft")
    ap.add_argument("--repeat", type=int, default=1,
                    help="best-of-N timing repeats")
    args = ap.parse_args(argv)

    s = args.block_size
    layout = build_layout((10 * s, 10 * s), BlockRef(4 * s, 4 * s, size=s))
    ctx = projection_context(layout, mode=args.mode)
    windows = make_windows(args.blocks, 3 * s, args.seed)

    results = {}
    for algorithm in ("fsa", "rba", "msa"):
        params = ExtrapolationParams.defaults(algorithm)
        best = float("inf")
        iters = 0
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            iters = sum(run(w, layout, params, context=ctx)
                        .diagnostics.iterations for w in windows)
            best = min(best, time.perf_counter() - t0)
        results[algorithm] = (best, params.iterations, iters)

    print(f"{args.blocks} blocks, {3 * s}x{3 * s} working areas, "
          f"{args.mode} projections")
    print(f"{'engine':8s} {'budget':>6s} {'total s':>9s} {'ms/block':>9s} "
          f"{'vs msa':>7s}")
    msa_total = results["msa"][0]
    for algorithm, (total, budget, iters) in results.items():
        print(f"{algorithm:8s} {budget:6d} {total:9.3f} "
              f"{1000.0 * total / args.blocks:9.3f} {total / msa_total:6.2f}x"
              f"   ({iters} iterations run)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
