"""Measurement matrices with orthonormal rows and their column geometry.

A sketch compresses a length-``n`` input into ``m`` linear measurements; all
analysis downstream assumes the rows of the measurement matrix are
orthonormal (any full-rank matrix can be brought to this form by a change of
basis on the stored measurements, which loses no information).  This module
generates such matrices reproducibly and exposes the column-norm structure
the divergence bounds are built on: the total Gram energy of the columns and
the set of columns with small Euclidean norm.
"""

from dataclasses import dataclass, field

import numpy as np

from .rng import substream

ROW_ORTHO_TOL = 1e-9
COLUMN_BUDGET_RTOL = 1e-6


@dataclass(frozen=True)
class SketchMatrix:
    """Dense ``m x n`` measurement matrix with orthonormal rows."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.ascontiguousarray(self.entries, dtype=np.float64)
        if entries.ndim != 2:
            raise ValueError("entries must be a 2-D array")
        m, n = entries.shape
        if m == 0 or m > n:
            raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
        object.__setattr__(self, "entries", entries)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    def column_norms(self) -> np.ndarray:
        """Euclidean norms of all n columns."""
        return np.sqrt(np.einsum("ij,ij->j", self.entries, self.entries))

    def validate(self):
        """Check the row-orthonormality and column-budget invariants.

        Costs O(m^2 n); intended for tests and ingest of untrusted dumps,
        not for the hot path.
        """
        gram = self.entries @ self.entries.T
        err = np.abs(gram - np.eye(self.m)).max()
        if err > ROW_ORTHO_TOL:
            raise ValueError(f"rows not orthonormal: max deviation {err:.3e}")
        budget = float(np.einsum("ij,ij->", self.entries, self.entries))
        if abs(budget - self.m) > COLUMN_BUDGET_RTOL * self.m:
            raise ValueError(
                f"column norm budget violated: sum of squared norms {budget!r} != m={self.m}"
            )


@dataclass(frozen=True)
class ColumnSet:
    """Columns whose norm is at most ``10 * sqrt(m/n)``, for one matrix."""

    indices: np.ndarray
    threshold: float
    n_cols: int = field(repr=False)

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.intp)
        if idx.ndim != 1 or (idx.size > 1 and np.any(np.diff(idx) <= 0)):
            raise ValueError("indices must be a strictly increasing 1-D array")
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return int(self.indices.size)

    @property
    def complement_size(self) -> int:
        return self.n_cols - len(self)


def make_orthonormal_sketch(m: int, n: int, seed: int) -> SketchMatrix:
    """Random sketch matrix with orthonormal rows, deterministic in the seed.

    Draws an ``m x n`` standard normal matrix and orthonormalizes its rows by
    Householder QR of the transpose.  Signs are fixed so each row's pivot
    coefficient in the triangular factor is positive, making the result
    unique for a generic draw: identical ``(m, n, seed)`` give bit-identical
    matrices on one platform.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    if m > n:
        raise ValueError(f"cannot orthonormalize {m} rows in dimension {n}")
    gauss = substream(seed, "orthonormal-sketch", m, n).standard_normal((m, n))
    q, r = np.linalg.qr(gauss.T, mode="reduced")
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return SketchMatrix(np.ascontiguousarray((q * signs).T))


def gram_frobenius_total(a: SketchMatrix, block_size: int = 512) -> float:
    """Sum of squared inner products over all column pairs.

    Computes ``sum_{i,j} <A_i, A_j>^2`` by an explicit blocked pass over the
    n^2 column pairs (block results added in index order).  For a matrix with
    orthonormal rows this equals ``m`` exactly; the function performs the
    column-side computation rather than assuming the identity, so it serves
    as a numerical check of row orthonormality.
    """
    entries = a.entries
    total = 0.0
    for start in range(0, a.n, block_size):
        block = entries[:, start : start + block_size]
        cross = block.T @ entries
        total += float(np.einsum("ij,ij->", cross, cross))
    return total


def small_column_set(a: SketchMatrix) -> ColumnSet:
    """Columns with Euclidean norm at most ``10 * sqrt(m/n)``.

    The comparison is non-strict.  Because the squared column norms sum to
    ``m``, fewer than ``n/100`` columns can exceed the threshold, so the
    returned set always covers more than 99% of the columns.
    """
    threshold = 10.0 * np.sqrt(a.m / a.n)
    norms = a.column_norms()
    indices = np.flatnonzero(norms <= threshold)
    if indices.size == 0:
        raise RuntimeError(
            "no column meets the norm threshold; input violates the "
            "orthonormal-row invariants"
        )
    return ColumnSet(indices=indices, threshold=float(threshold), n_cols=a.n)


def column_gram(a: SketchMatrix, cset: ColumnSet) -> np.ndarray:
    """Gram matrix of the selected columns: entry ``(i, j) = <A_i, A_j>``.

    Materializes the full ``|S| x |S|`` matrix; meant for desk-scale sets
    (the bound evaluations stream over blocks instead and never build this).
    """
    cols = a.entries[:, cset.indices]
    return cols.T @ cols


def write_matrix(a: SketchMatrix, path):
    """Plain-text dump: first line ``m n``, then one line per row.

    Entries are written with 17 significant digits, enough for exact
    float64 round-trips.
    """
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{a.m} {a.n}\n")
        for row in a.entries:
            fh.write(" ".join(f"{v:.17g}" for v in row))
            fh.write("\n")


def read_matrix(path) -> SketchMatrix:
    """Load a matrix written by ``write_matrix`` and validate it."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError("first line must be 'm n'")
        m, n = int(header[0]), int(header[1])
        entries = np.loadtxt(fh, ndmin=2)
    if entries.shape != (m, n):
        raise ValueError(f"expected {m}x{n} body, got {entries.shape}")
    sketch = SketchMatrix(entries)
    sketch.validate()
    return sketch
