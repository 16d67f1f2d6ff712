# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled reductions for the hot inner loops.

Built with ``-ffast-math`` so the compiler can vectorize the exponentials
through libmvec; inputs must therefore be finite (callers clamp log-zero
weights to a large negative finite value).  Semantics match the NumPy
fallback in ``_kernels_py`` up to floating-point rounding.
"""

from libc.math cimport exp, log

import numpy as np

cimport numpy as cnp

cnp.import_array()


def exp_block_reduce(const double[:, ::1] gram, double scale,
                     const double[::1] row_shift, const double[::1] col_shift):
    """Reduce one Gram block of exponential terms.

    Terms are ``t[i, j] = scale * gram[i, j] + row_shift[i] + col_shift[j]``.
    Returns ``(tmax, sumexp)`` with ``sumexp = sum(exp(t - tmax))``, summed in
    row-major order.
    """
    cdef Py_ssize_t nrow = gram.shape[0]
    cdef Py_ssize_t ncol = gram.shape[1]
    cdef Py_ssize_t i, j
    cdef double t, tmax, total, r

    if nrow == 0 or ncol == 0:
        return float("-inf"), 0.0

    tmax = scale * gram[0, 0] + row_shift[0] + col_shift[0]
    for i in range(nrow):
        r = row_shift[i]
        for j in range(ncol):
            t = scale * gram[i, j] + r + col_shift[j]
            if t > tmax:
                tmax = t

    total = 0.0
    for i in range(nrow):
        r = row_shift[i] - tmax
        for j in range(ncol):
            total += exp(scale * gram[i, j] + r + col_shift[j])
    return tmax, total


def row_logsumexp(const double[:, ::1] a):
    """Per-row log-sum-exp of a C-contiguous 2-D array with finite entries."""
    cdef Py_ssize_t nrow = a.shape[0]
    cdef Py_ssize_t ncol = a.shape[1]
    cdef Py_ssize_t i, j
    cdef double rmax, total
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(nrow, dtype=np.float64)

    if ncol == 0:
        raise ValueError("need at least one column")
    for i in range(nrow):
        rmax = a[i, 0]
        for j in range(1, ncol):
            if a[i, j] > rmax:
                rmax = a[i, j]
        total = 0.0
        for j in range(ncol):
            total += exp(a[i, j] - rmax)
        out[i] = rmax + log(total)
    return out
