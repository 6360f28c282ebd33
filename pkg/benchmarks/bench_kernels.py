#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy twins.

The library dispatches through fundus_prep._fast; this script calls both
implementations of each hot kernel directly, after a warmup pass so JIT
compilation does not pollute the numbers.

Usage:
    python3 benchmarks/bench_kernels.py [--size 2048] [--repeat 5] [--scale 8]
"""

import argparse
import time

import numpy as np

from fundus_prep import _fast
from fundus_prep.kernels import BILINEAR, build_taps, lanczos_kernel


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=2048, help="square test image side")
    parser.add_argument("--repeat", type=int, default=5, help="timing repetitions (best-of)")
    parser.add_argument("--scale", type=int, default=8, help="downscale factor")
    args = parser.parse_args()

    if not _fast.NUMBA_AVAILABLE:
        raise SystemExit("numba is not importable; nothing to compare")

    rng = np.random.default_rng(0)
    size, scale = args.size, args.scale
    plane = rng.random((size, size))
    out = -(-size // scale)

    cases = []

    idx, wts = build_taps(size, out, float(scale), lanczos_kernel(4), float(scale))
    cases.append(
        (
            f"resample rows lanczos4 {size}->{out}",
            lambda: _fast._resample_rows_np(plane, idx, wts),
            lambda: _fast._resample_rows_nb(plane, idx, wts),
        )
    )
    bidx, bwts = build_taps(size, out, float(scale), BILINEAR, float(scale))
    cases.append(
        (
            f"resample cols bilinear {size}->{out}",
            lambda: _fast._resample_cols_np(plane, bidx, bwts),
            lambda: _fast._resample_cols_nb(plane, bidx, bwts),
        )
    )

    planes = rng.random((3, size, size))
    intensity = planes.mean(axis=0)
    cases.append(
        (
            f"rdip patches {size} s={scale}",
            lambda: _fast._rdip_np(planes, intensity, scale, 1.0, 1e-6),
            lambda: _fast._rdip_nb(planes, intensity, scale, 1.0, 1e-6),
        )
    )

    ssim_side = min(size, 512)  # windowed stats are O(64 n); keep numpy side sane
    xa = rng.random((ssim_side, ssim_side)) * 255.0
    ya = rng.random((ssim_side, ssim_side)) * 255.0
    cases.append(
        (
            f"ssim windows {ssim_side}",
            lambda: _fast._ssim_plane_np(xa, ya, 8, 1, 6.5025, 58.5225),
            lambda: _fast._ssim_plane_nb(xa, ya, 8, 1, 6.5025, 58.5225),
        )
    )

    print(f"{'kernel':38} {'numpy':>10} {'numba':>10} {'speedup':>9}")
    for name, np_fn, nb_fn in cases:
        nb_fn()  # warmup / JIT
        t_np = best_of(np_fn, args.repeat)
        t_nb = best_of(nb_fn, args.repeat)
        print(f"{name:38} {t_np * 1e3:8.2f}ms {t_nb * 1e3:8.2f}ms {t_np / t_nb:8.2f}x")


if __name__ == "__main__":
    main()
