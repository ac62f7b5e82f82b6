#!/usr/bin/env python3
"""Benchmark the compiled convolution kernels against the numpy fallback.

Shapes mirror what the two classifiers actually run: the wide early blocks
and the narrow deep blocks of the 1-D model, plus representative 2-D blocks.
Run as `python benchmarks/bench_kernels.py [--repeats N]`.
"""
import argparse
import time

import numpy as np

from afibkit.nn_core import kernels

SHAPES_1D = [
    # (batch, c_in, length, c_out, kernel) per 1-D model block
    (128, 1, 1250, 16, 5),
    (128, 16, 625, 16, 5),
    (128, 32, 156, 32, 5),
    (128, 64, 39, 128, 5),
    (128, 256, 2, 256, 5),
]
SHAPES_2D = [
    # (batch, c_in, h, w, c_out) with 3x3 kernels per 2-D model block
    (50, 1, 64, 18, 8),
    (50, 16, 32, 9, 16),
    (50, 32, 16, 4, 32),
    (50, 64, 8, 2, 64),
]


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(repeats: int) -> None:
    try:
        cy = kernels.get_backend("cython")
    except ImportError:
        print("compiled extension not built; run `python setup.py build_ext --inplace`")
        return
    py = kernels.get_backend("numpy")

    print(f"{'shape':<34} {'numpy fwd+bwd':>14} {'cython fwd+bwd':>15} {'speedup':>8}")
    rng = np.random.default_rng(0)
    for b, ci, length, co, k in SHAPES_1D:
        x = rng.normal(size=(b, ci, length))
        w = rng.normal(size=(co, ci, k))
        bias = rng.normal(size=co)
        gy = rng.normal(size=(b, co, length))

        def step(impl):
            kernels.conv1d(x, w, bias, (k - 1) // 2, impl=impl)
            kernels.conv1d_grads(x, w, gy, (k - 1) // 2, impl=impl)

        t_py = _time(lambda: step(py), repeats)
        t_cy = _time(lambda: step(cy), repeats)
        label = f"conv1d b{b} {ci}x{length} -> {co}"
        print(f"{label:<34} {t_py * 1e3:>11.2f} ms {t_cy * 1e3:>12.2f} ms {t_py / t_cy:>7.2f}x")

    for b, ci, h, wdt, co in SHAPES_2D:
        x = rng.normal(size=(b, ci, h, wdt))
        w = rng.normal(size=(co, ci, 3, 3))
        bias = rng.normal(size=co)
        gy = rng.normal(size=(b, co, h, wdt))

        def step(impl):
            kernels.conv2d(x, w, bias, 1, 1, impl=impl)
            kernels.conv2d_grads(x, w, gy, 1, 1, impl=impl)

        t_py = _time(lambda: step(py), repeats)
        t_cy = _time(lambda: step(cy), repeats)
        label = f"conv2d b{b} {ci}x{h}x{wdt} -> {co}"
        print(f"{label:<34} {t_py * 1e3:>11.2f} ms {t_cy * 1e3:>12.2f} ms {t_py / t_cy:>7.2f}x")


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=5)
    bench(parser.parse_args().repeats)
