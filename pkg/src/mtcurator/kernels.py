"""Hot-loop kernels with backend dispatch.

The compiled extension (`mtcurator._kernels._native`) is preferred when it
imported cleanly; otherwise the pure-Python fallback is used. Both produce
bit-identical results. Set MTCURATOR_PURE=1 to force the fallback, e.g. to
benchmark the two backends against each other.
"""

from __future__ import annotations

import os
from typing import Iterable, Sequence

import numpy as np

from ._kernels import pyfallback as _py

if os.environ.get("MTCURATOR_PURE"):
    _backend = _py
    _BACKEND_NAME = "python"
else:
    try:
        from ._kernels import _native as _backend  # type: ignore[no-redef]

        _BACKEND_NAME = "native"
    except ImportError:
        _backend = _py
        _BACKEND_NAME = "python"


def backend_name() -> str:
    """Which backend is active: "native" (compiled) or "python"."""
    return _BACKEND_NAME


def merged_interval_length(intervals: Iterable[tuple[int, int]]) -> int:
    """Total length of the union of half-open integer intervals [start, end)."""
    pairs = sorted(intervals)
    if not pairs:
        return 0
    starts = np.fromiter((p[0] for p in pairs), dtype=np.int64, count=len(pairs))
    ends = np.fromiter((p[1] for p in pairs), dtype=np.int64, count=len(pairs))
    return int(_backend.merged_interval_length(starts, ends))


def count_inversions(values: Sequence[int]) -> int:
    """Number of pairs (i, j) with i < j and values[i] > values[j]."""
    arr = np.ascontiguousarray(values, dtype=np.int64)
    return int(_backend.count_inversions(arr))


def bootstrap_tail_count(deltas: Sequence[float], indices: np.ndarray, threshold: float) -> int:
    """Count bootstrap resamples whose |mean| is at least ``threshold``.

    ``indices`` is an (iterations, n) integer array of resample positions
    into ``deltas``.
    """
    d = np.ascontiguousarray(deltas, dtype=np.float64)
    idx = np.ascontiguousarray(indices, dtype=np.int64)
    if idx.ndim != 2:
        raise ValueError("indices must be a 2-D (iterations, n) array")
    iterations, n = idx.shape
    if n == 0 or iterations == 0:
        return 0
    return int(_backend.bootstrap_tail_count(d, idx.reshape(-1), n, float(threshold)))
