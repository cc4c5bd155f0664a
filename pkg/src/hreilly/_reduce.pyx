# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Deterministic blocked pairwise summation (compiled kernel).

Values are grouped in blocks of ``BLOCK`` summed strictly left to right; the
block sums (zero-padded to a power of two) are combined by a balanced tree.
The numpy fallback performs exactly the same floating-point operations.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

DEF BLOCK = 128


def block_size():
    return BLOCK


cdef double _tree(double[::1] buf, Py_ssize_t m) nogil:
    cdef Py_ssize_t width = m, i
    while width > 1:
        width //= 2
        for i in range(width):
            buf[i] = buf[2 * i] + buf[2 * i + 1]
    return buf[0]


def pairwise_sum(double[::1] x):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t nb = (n + BLOCK - 1) // BLOCK
    cdef Py_ssize_t m = 1, b, i, stop
    cdef double acc
    if n == 0:
        return 0.0
    while m < nb:
        m *= 2
    buf = np.zeros(m, dtype=np.float64)
    cdef double[::1] sums = buf
    with nogil:
        for b in range(nb):
            acc = 0.0
            stop = min(n, (b + 1) * BLOCK)
            for i in range(b * BLOCK, stop):
                acc = acc + x[i]
            sums[b] = acc
        acc = _tree(sums, m)
    return acc


def weighted_sum(double[::1] w, double[::1] f):
    cdef Py_ssize_t n = w.shape[0], i
    if f.shape[0] != n:
        raise ValueError("weights and values differ in length")
    prod = np.empty(n, dtype=np.float64)
    cdef double[::1] p = prod
    with nogil:
        for i in range(n):
            p[i] = w[i] * f[i]
    return pairwise_sum(p)
