# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the pure-Python kernels in pyfallback.py.

Same algorithms and float summation order as the fallback, so results are
bit-identical across backends.
"""

from libc.stdlib cimport free, malloc


def merged_interval_length(long long[::1] starts, long long[::1] ends):
    """Union length of half-open intervals already sorted by start."""
    cdef Py_ssize_t i, n = starts.shape[0]
    cdef long long total = 0, cur_start = 0, cur_end = 0
    cdef bint active = False
    for i in range(n):
        if not active or starts[i] > cur_end:
            if active:
                total += cur_end - cur_start
            cur_start = starts[i]
            cur_end = ends[i]
            active = True
        elif ends[i] > cur_end:
            cur_end = ends[i]
    if active:
        total += cur_end - cur_start
    return total


def count_inversions(long long[::1] values):
    """Number of out-of-order pairs, via merge sort."""
    cdef Py_ssize_t n = values.shape[0]
    if n < 2:
        return 0
    cdef long long *work = <long long *> malloc(n * sizeof(long long))
    cdef long long *buf = <long long *> malloc(n * sizeof(long long))
    if work == NULL or buf == NULL:
        free(work)
        free(buf)
        raise MemoryError()
    cdef Py_ssize_t i
    for i in range(n):
        work[i] = values[i]
    cdef long long count = _merge_count(work, buf, 0, n)
    free(work)
    free(buf)
    return count


cdef long long _merge_count(long long *work, long long *buf,
                            Py_ssize_t lo, Py_ssize_t hi) noexcept:
    if hi - lo < 2:
        return 0
    cdef Py_ssize_t mid = (lo + hi) // 2
    cdef long long count = _merge_count(work, buf, lo, mid) + _merge_count(work, buf, mid, hi)
    cdef Py_ssize_t i = lo, j = mid, k
    for k in range(lo, hi):
        if i < mid and (j >= hi or work[i] <= work[j]):
            buf[k] = work[i]
            i += 1
        else:
            buf[k] = work[j]
            j += 1
            count += mid - i
    for k in range(lo, hi):
        work[k] = buf[k]
    return count


def bootstrap_tail_count(double[::1] deltas, long long[::1] indices,
                         Py_ssize_t n, double threshold):
    """Count resamples whose |mean| reaches threshold."""
    cdef Py_ssize_t iters = indices.shape[0] // n
    cdef Py_ssize_t b, j, pos = 0
    cdef long long count = 0
    cdef double acc, mean
    for b in range(iters):
        acc = 0.0
        for j in range(n):
            acc += deltas[indices[pos]]
            pos += 1
        mean = acc / n
        if mean < 0.0:
            mean = -mean
        if mean >= threshold:
            count += 1
    return count
