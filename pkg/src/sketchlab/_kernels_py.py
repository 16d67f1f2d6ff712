"""Pure-NumPy fallback for the compiled kernels.

Matches the extension's semantics on finite inputs; rounding may differ at
the last few ulps because NumPy reductions use pairwise summation and the
extension's exponentials go through libmvec.
"""

import numpy as np


def exp_block_reduce(gram, scale, row_shift, col_shift):
    """Reduce one block of terms ``scale * gram[i, j] + row_shift[i] + col_shift[j]``.

    Returns ``(tmax, sumexp)`` where ``sumexp = sum(exp(t - tmax))``.
    """
    if gram.size == 0:
        return -np.inf, 0.0
    t = gram * scale
    t += row_shift[:, None]
    t += col_shift[None, :]
    tmax = float(t.max())
    t -= tmax
    np.exp(t, out=t)
    return tmax, float(t.sum())


def row_logsumexp(a):
    """Per-row log-sum-exp of a 2-D array with finite entries."""
    if a.shape[1] == 0:
        raise ValueError("need at least one column")
    rmax = a.max(axis=1)
    return rmax + np.log(np.exp(a - rmax[:, None]).sum(axis=1))
