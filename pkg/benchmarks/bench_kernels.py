#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Runs each kernel on sizable inputs with both backends and prints the
per-call time and speedup. Usage: python benchmarks/bench_kernels.py
"""

from __future__ import annotations

import time

import numpy as np

from mtcurator._kernels import pyfallback

try:
    from mtcurator._kernels import _native
except ImportError:
    _native = None


def timeit(fn, repeats: int = 5) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    rng = np.random.default_rng(42)

    n_intervals = 200_000
    starts = np.sort(rng.integers(0, 10_000_000, size=n_intervals)).astype(np.int64)
    ends = starts + rng.integers(1, 5_000, size=n_intervals).astype(np.int64)

    n_perm = 100_000
    perm = rng.permutation(n_perm).astype(np.int64)

    n_pairs = 200
    iterations = 20_000
    deltas = rng.normal(size=n_pairs)
    idx = rng.integers(0, n_pairs, size=(iterations, n_pairs)).astype(np.int64).reshape(-1)

    cases = [
        (
            f"interval union ({n_intervals:,} spans)",
            lambda backend: backend.merged_interval_length(starts, ends),
        ),
        (
            f"inversion count ({n_perm:,} items)",
            lambda backend: backend.count_inversions(perm),
        ),
        (
            f"bootstrap tail ({iterations:,} x {n_pairs})",
            lambda backend: backend.bootstrap_tail_count(deltas, idx, n_pairs, 0.1),
        ),
    ]

    print(f"{'kernel':<38} {'python':>12} {'native':>12} {'speedup':>9}")
    for name, call in cases:
        python_time = timeit(lambda: call(pyfallback), repeats=3)
        if _native is None:
            print(f"{name:<38} {python_time * 1e3:>10.1f}ms {'n/a':>12} {'n/a':>9}")
            continue
        assert call(_native) == call(pyfallback), f"backend mismatch in {name}"
        native_time = timeit(lambda: call(_native))
        print(
            f"{name:<38} {python_time * 1e3:>10.1f}ms {native_time * 1e3:>10.1f}ms "
            f"{python_time / native_time:>8.1f}x"
        )
    if _native is None:
        print("\ncompiled kernels not built; only the fallback was timed")


if __name__ == "__main__":
    main()
