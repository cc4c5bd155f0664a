"""Reproducible summation used by every quadrature rule.

The compiled kernel from ``_reduce`` is used when it was built; otherwise a
numpy implementation of the same blocked pairwise tree is selected. Both give
bit-identical results, so the choice never changes a report.
"""

from __future__ import annotations

import os

import numpy as np

BLOCK = 128


def _py_pairwise_sum(x) -> float:
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    n = x.size
    if n == 0:
        return 0.0
    nb = -(-n // BLOCK)
    m = 1 << max(0, (nb - 1).bit_length())
    padded = np.zeros(nb * BLOCK)
    padded[:n] = x
    # cumsum is a strict left-to-right recurrence, matching the scalar loop
    sums = np.zeros(m)
    sums[:nb] = np.cumsum(padded.reshape(nb, BLOCK), axis=1)[:, -1]
    # trailing zeros of a partial block do not change a left-to-right sum
    while sums.size > 1:
        sums = sums[0::2] + sums[1::2]
    return float(sums[0])


def _py_weighted_sum(w, f) -> float:
    w = np.ascontiguousarray(w, dtype=np.float64).ravel()
    f = np.ascontiguousarray(f, dtype=np.float64).ravel()
    if w.size != f.size:
        raise ValueError("weights and values differ in length")
    return _py_pairwise_sum(w * f)


try:
    if os.environ.get("HREILLY_PURE_PYTHON"):
        raise ImportError("pure-python mode requested")
    from . import _reduce as _ext

    def pairwise_sum(x) -> float:
        return float(_ext.pairwise_sum(np.ascontiguousarray(x, dtype=np.float64).ravel()))

    def weighted_sum(w, f) -> float:
        return float(_ext.weighted_sum(np.ascontiguousarray(w, dtype=np.float64).ravel(),
                                       np.ascontiguousarray(f, dtype=np.float64).ravel()))

    BACKEND = "compiled"
except ImportError:
    pairwise_sum = _py_pairwise_sum
    weighted_sum = _py_weighted_sum
    BACKEND = "python"
