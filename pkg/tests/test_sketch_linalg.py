import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sketchlab.sketch_linalg import (ColumnSet, SketchMatrix, column_gram,
                                     gram_frobenius_total,
                                     make_orthonormal_sketch, read_matrix,
                                     small_column_set, write_matrix)


def naive_gram_total(entries):
    n = entries.shape[1]
    total = 0.0
    for i in range(n):
        for j in range(n):
            total += float(entries[:, i] @ entries[:, j]) ** 2
    return total


def test_scalar_sketch_is_sign():
    a = make_orthonormal_sketch(1, 1, seed=123)
    assert a.entries.shape == (1, 1)
    assert abs(a.entries[0, 0]) == pytest.approx(1.0, rel=0, abs=1e-15)


def test_square_sketch_is_orthogonal():
    a = make_orthonormal_sketch(8, 8, seed=7)
    err = np.abs(a.entries @ a.entries.T - np.eye(8)).max()
    assert err <= 1e-10


def test_column_budget():
    a = make_orthonormal_sketch(2, 4, seed=3)
    assert np.sum(a.column_norms() ** 2) == pytest.approx(2.0, abs=1e-9)


def test_determinism_bit_identical():
    a = make_orthonormal_sketch(5, 33, seed=42)
    b = make_orthonormal_sketch(5, 33, seed=42)
    assert np.array_equal(a.entries, b.entries)
    c = make_orthonormal_sketch(5, 33, seed=43)
    assert not np.array_equal(a.entries, c.entries)


def test_rejects_bad_shapes():
    with pytest.raises(ValueError):
        make_orthonormal_sketch(0, 4, seed=0)
    with pytest.raises(ValueError):
        make_orthonormal_sketch(5, 4, seed=0)
    with pytest.raises(ValueError):
        SketchMatrix(np.ones((3, 2)))


def test_gram_frobenius_basis_rows_exact():
    entries = np.zeros((3, 10))
    entries[np.arange(3), np.arange(3)] = 1.0
    assert gram_frobenius_total(SketchMatrix(entries)) == 3.0


def test_gram_frobenius_flat_row():
    # single row (1/2, 1/2, 1/2, 1/2): sixteen gram entries of 1/16
    a = SketchMatrix(np.full((1, 4), 0.5))
    assert gram_frobenius_total(a) == pytest.approx(1.0, rel=1e-12)
    assert naive_gram_total(a.entries) == pytest.approx(1.0, rel=1e-12)


def test_gram_frobenius_random_case():
    a = make_orthonormal_sketch(3, 64, seed=11)
    assert gram_frobenius_total(a) == pytest.approx(3.0, rel=1e-6)


def test_gram_frobenius_matches_naive_oracle():
    for seed, (m, n) in enumerate([(1, 5), (2, 9), (4, 16), (7, 12)]):
        a = make_orthonormal_sketch(m, n, seed=seed)
        assert gram_frobenius_total(a) == pytest.approx(
            naive_gram_total(a.entries), rel=1e-12)


def test_gram_frobenius_block_size_invariance():
    a = make_orthonormal_sketch(6, 200, seed=5)
    v1 = gram_frobenius_total(a, block_size=7)
    v2 = gram_frobenius_total(a, block_size=512)
    assert v1 == pytest.approx(v2, rel=1e-12)


def test_small_column_set_threshold_dominates():
    a = make_orthonormal_sketch(1, 100, seed=9)
    s = small_column_set(a)
    assert len(s) == 100
    assert s.threshold == pytest.approx(1.0)


def test_small_column_set_excludes_basis_columns():
    entries = np.zeros((2, 400))
    entries[0, 0] = 1.0
    entries[1, 1] = 1.0
    s = small_column_set(SketchMatrix(entries))
    assert s.complement_size == 2
    assert 0 not in s.indices and 1 not in s.indices
    assert np.array_equal(s.indices, np.arange(2, 400))


def test_small_column_set_complement_bound():
    a = make_orthonormal_sketch(16, 2048, seed=1)
    s = small_column_set(a)
    assert s.complement_size <= 20


def test_column_gram_flat_row():
    a = SketchMatrix(np.full((1, 9), 1.0 / 3.0))
    s = small_column_set(a)
    g = column_gram(a, s)
    np.testing.assert_allclose(g, np.full((9, 9), 1.0 / 9.0), rtol=1e-12)


def test_column_gram_zero_columns():
    entries = np.zeros((1, 6))
    entries[0, 0] = 1.0
    a = SketchMatrix(entries)
    s = ColumnSet(indices=np.arange(1, 6), threshold=0.5, n_cols=6)
    assert np.all(column_gram(a, s) == 0.0)


def test_column_gram_cauchy_schwarz_bound():
    a = make_orthonormal_sketch(4, 256, seed=2)
    s = small_column_set(a)
    g = column_gram(a, s)
    np.testing.assert_allclose(g, g.T, rtol=0, atol=1e-15)
    assert np.abs(g).max() <= 100.0 * a.m / a.n + 1e-12
    assert np.diag(g).min() >= 0.0


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 12), st.integers(0, 40), st.integers(0, 2 ** 31 - 1))
def test_generated_sketch_invariants(m, extra, seed):
    n = m + extra
    a = make_orthonormal_sketch(m, n, seed=seed)
    a.validate()
    assert gram_frobenius_total(a) == pytest.approx(m, rel=1e-6)
    s = small_column_set(a)
    assert 100 * s.complement_size < n
    norms = a.column_norms()
    assert np.all(norms[s.indices] <= s.threshold)
    mask = np.ones(n, dtype=bool)
    mask[s.indices] = False
    assert np.all(norms[mask] > s.threshold)


def test_matrix_dump_roundtrip(tmp_path):
    a = make_orthonormal_sketch(3, 17, seed=21)
    path = tmp_path / "sketch.txt"
    write_matrix(a, path)
    first = path.read_text().splitlines()[0]
    assert first == "3 17"
    b = read_matrix(path)
    assert np.array_equal(a.entries, b.entries)


def test_read_matrix_rejects_garbage(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 2\n1.0 0.0\n0.0 1.0\n0.0 0.0\n")
    with pytest.raises(ValueError):
        read_matrix(path)
