"""Kernel backend selection and the blocked pairwise exponential reduction.

The compiled extension (``sketchlab._kernels``) is preferred; a NumPy
fallback is selected automatically when the extension is missing, or when
the environment variable ``SKETCHLAB_FORCE_FALLBACK`` is set to a non-empty
value.  Both backends implement the same contract and the blocked driver
below is backend-agnostic, so numerical results agree to rounding.
"""

import os

import numpy as np

from . import _kernels_py

if os.environ.get("SKETCHLAB_FORCE_FALLBACK"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"


def exp_block_reduce(gram, scale, row_shift, col_shift):
    """See ``_kernels_py.exp_block_reduce``; dispatches to the active backend."""
    return _impl.exp_block_reduce(gram, scale, row_shift, col_shift)


def row_logsumexp(a):
    """Per-row log-sum-exp, dispatched to the active backend."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    return np.asarray(_impl.row_logsumexp(a))


def log_exp_gram_sum(points, scale=1.0, log_weights=None, block_size=1024):
    """Log of the pairwise exponential Gram sum, computed blockwise.

    Returns ``log sum_{i,j} exp(scale * <x_i, x_j> + lw_i + lw_j)`` where the
    sum runs over all ordered pairs of rows of ``points`` (an ``(k, d)``
    array) and ``lw`` defaults to all zeros.  Only the upper block triangle
    is materialized; symmetric off-diagonal blocks enter with multiplicity
    two.  Block results are combined in a fixed index order, so the value is
    independent of ``block_size`` up to rounding and never leaves the log
    domain.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError("points must be a nonempty 2-D array")
    k = points.shape[0]
    if log_weights is None:
        log_weights = np.zeros(k)
    else:
        log_weights = np.ascontiguousarray(log_weights, dtype=np.float64)
        if log_weights.shape != (k,):
            raise ValueError("log_weights must have one entry per point")
    if block_size < 1:
        raise ValueError("block_size must be positive")

    starts = range(0, k, block_size)
    gmax = -np.inf
    total = 0.0
    for a in starts:
        xa = points[a : a + block_size]
        wa = log_weights[a : a + block_size]
        for b in range(a, k, block_size):
            xb = points[b : b + block_size]
            wb = log_weights[b : b + block_size]
            gram = np.ascontiguousarray(xa @ xb.T)
            bmax, bsum = exp_block_reduce(gram, scale, wa, wb)
            if bsum == 0.0:
                continue
            mult = 1.0 if a == b else 2.0
            newmax = max(gmax, bmax)
            total = total * np.exp(gmax - newmax) + mult * bsum * np.exp(bmax - newmax)
            gmax = newmax
    if total == 0.0:
        return -np.inf
    return gmax + float(np.log(total))
