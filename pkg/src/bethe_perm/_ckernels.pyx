# cython: language_level=3
"""Compiled permanent kernels.

Both kernels expect a C-contiguous float64 square matrix whose rows have
already been scaled into [0, 1]; the caller folds the scale factors back.
"""

from cython.parallel cimport prange, parallel
from libc.stdlib cimport malloc, free
from libc.stdint cimport uint64_t, int64_t

import numpy as np

cdef int NCHUNKS_MAX = 256


cdef inline int _ctz(uint64_t k) nogil:
    cdef int c = 0
    while (k & 1) == 0:
        k >>= 1
        c += 1
    return c


cdef inline int _parity(uint64_t g) nogil:
    cdef int p = 0
    while g:
        g &= g - 1
        p ^= 1
    return p


cdef long double _ryser_chunk(const double[:, ::1] a, const double* x, int n, int m,
                              uint64_t k0, uint64_t k1, double* rs) noexcept nogil:
    # subsets of the first m = n - 1 columns, row sums offset by x
    cdef uint64_t g = k0 ^ (k0 >> 1)
    cdef uint64_t k
    cdef int i, j, bit
    cdef double prod
    cdef long double acc = 0.0
    cdef int sign

    for i in range(n):
        rs[i] = x[i]
    for j in range(m):
        if (g >> j) & 1:
            for i in range(n):
                rs[i] += a[i, j]
    sign = _parity(g)

    k = k0
    while True:
        prod = 1.0
        for i in range(n):
            prod *= rs[i]
        if sign:
            acc -= prod
        else:
            acc += prod
        k += 1
        if k >= k1:
            break
        bit = _ctz(k)
        g ^= (<uint64_t>1) << bit
        if (g >> bit) & 1:
            for i in range(n):
                rs[i] += a[i, bit]
        else:
            for i in range(n):
                rs[i] -= a[i, bit]
        sign ^= 1
    return acc


def ryser(const double[:, ::1] a, int threads=1):
    """Ryser's formula in the Nijenhuis-Wilf form, Gray-code subset order.

    Sums over subsets of the first n - 1 columns with every row sum offset
    by x_i = a[i, n-1] - sum_j a[i, j] / 2, which halves the subset count.
    The subset range is split into a fixed number of chunks (independent of
    ``threads``) and the chunk results are added in order, so the value does
    not depend on the thread count.
    """
    cdef int n = a.shape[0]
    if n == 0:
        return 1.0
    if n == 1:
        return float(a[0, 0])
    cdef int m = n - 1
    cdef uint64_t total = (<uint64_t>1) << m
    cdef int64_t nchunks = NCHUNKS_MAX if total > NCHUNKS_MAX else <int64_t>total
    cdef uint64_t step = total // nchunks
    cdef long double* partial = <long double*>malloc(nchunks * sizeof(long double))
    cdef double* x = <double*>malloc(n * sizeof(double))
    cdef double* rs
    cdef int64_t c
    cdef int i, j
    cdef uint64_t k0, k1
    cdef long double out = 0.0, half
    if partial == NULL or x == NULL:
        free(partial)
        free(x)
        raise MemoryError()
    try:
        for i in range(n):
            half = 0.0
            for j in range(n):
                half += a[i, j]
            x[i] = <double>(a[i, m] - half / 2.0)
        with nogil, parallel(num_threads=threads):
            rs = <double*>malloc(n * sizeof(double))
            for c in prange(nchunks, schedule="static"):
                k0 = c * step
                k1 = total if c == nchunks - 1 else (c + 1) * step
                partial[c] = _ryser_chunk(a, x, n, m, k0, k1, rs)
            free(rs)
        for c in range(nchunks):
            out += partial[c]
    finally:
        free(partial)
        free(x)
    out *= 2.0
    if m % 2 == 1:
        out = -out
    return float(out)


cdef void _dfs(const double[:, ::1] a, int n, int row, uint64_t used,
               long double prod, long double* total) noexcept nogil:
    cdef int j
    cdef double v
    if row == n:
        total[0] += prod
        return
    for j in range(n):
        if (used >> j) & 1:
            continue
        v = a[row, j]
        if v == 0.0:
            continue
        _dfs(a, n, row + 1, used | ((<uint64_t>1) << j), prod * v, total)


def bruteforce(const double[:, ::1] a):
    """Sum of diagonal products over every permutation (depth-first, zero-pruned)."""
    cdef int n = a.shape[0]
    cdef long double total = 0.0
    if n == 0:
        return 1.0
    with nogil:
        _dfs(a, n, 0, 0, 1.0, &total)
    return float(total)
