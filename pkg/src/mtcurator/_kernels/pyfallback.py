"""Pure-Python implementations of the compiled kernels.

Used when the Cython extension is unavailable (or MTCURATOR_PURE is set).
Each function mirrors its `_native` twin exactly, including float summation
order, so switching backends never changes a result.
"""

from __future__ import annotations


def merged_interval_length(starts, ends) -> int:
    """Union length of half-open intervals already sorted by start."""
    starts = list(starts)
    ends = list(ends)
    total = 0
    cur_start = 0
    cur_end = 0
    active = False
    for s, e in zip(starts, ends):
        if not active or s > cur_end:
            if active:
                total += cur_end - cur_start
            cur_start, cur_end = s, e
            active = True
        elif e > cur_end:
            cur_end = e
    if active:
        total += cur_end - cur_start
    return total


def count_inversions(values) -> int:
    """Number of out-of-order pairs, via merge sort."""
    work = list(values)
    buf = work[:]
    return _merge_count(work, buf, 0, len(work))


def _merge_count(work, buf, lo, hi) -> int:
    if hi - lo < 2:
        return 0
    mid = (lo + hi) // 2
    count = _merge_count(work, buf, lo, mid) + _merge_count(work, buf, mid, hi)
    i, j = lo, mid
    for k in range(lo, hi):
        if i < mid and (j >= hi or work[i] <= work[j]):
            buf[k] = work[i]
            i += 1
        else:
            buf[k] = work[j]
            j += 1
            count += mid - i
    work[lo:hi] = buf[lo:hi]
    return count


def bootstrap_tail_count(deltas, indices, n: int, threshold: float) -> int:
    """Count resamples whose |mean| reaches threshold.

    `indices` holds len(indices)//n resamples of size n, flattened; each
    resample's values are summed left to right.
    """
    deltas = list(deltas)
    indices = list(indices)
    count = 0
    pos = 0
    for _ in range(len(indices) // n):
        acc = 0.0
        for _ in range(n):
            acc += deltas[indices[pos]]
            pos += 1
        mean = acc / n
        if mean < 0.0:
            mean = -mean
        if mean >= threshold:
            count += 1
    return count
