import numpy as np
import pytest
from scipy.special import logsumexp

from sketchlab import _kernels_py
from sketchlab.kernels import BACKEND, exp_block_reduce, log_exp_gram_sum, row_logsumexp

try:
    from sketchlab import _kernels as _ext
except ImportError:
    _ext = None

BACKENDS = [pytest.param(_kernels_py, id="python")]
if _ext is not None:
    BACKENDS.append(pytest.param(_ext, id="cython"))


@pytest.mark.parametrize("impl", BACKENDS)
def test_exp_block_reduce_matches_direct_sum(impl):
    rng = np.random.default_rng(0)
    gram = np.ascontiguousarray(rng.standard_normal((7, 5)))
    rshift = rng.standard_normal(7)
    cshift = rng.standard_normal(5)
    tmax, sumexp = impl.exp_block_reduce(gram, 1.7, rshift, cshift)
    terms = 1.7 * gram + rshift[:, None] + cshift[None, :]
    assert tmax == pytest.approx(terms.max(), rel=0, abs=0)
    assert sumexp == pytest.approx(np.exp(terms - terms.max()).sum(), rel=1e-13)


@pytest.mark.parametrize("impl", BACKENDS)
def test_exp_block_reduce_extreme_scale_stays_finite(impl):
    gram = np.ascontiguousarray(np.array([[1.0, 0.5], [0.5, 1.0]]))
    zero = np.zeros(2)
    tmax, sumexp = impl.exp_block_reduce(gram, 5000.0, zero, zero)
    assert tmax == 5000.0
    assert np.isfinite(sumexp)


def test_backends_agree():
    if _ext is None:
        pytest.skip("extension not built")
    rng = np.random.default_rng(1)
    gram = np.ascontiguousarray(rng.standard_normal((33, 17)))
    rshift = rng.standard_normal(33)
    cshift = rng.standard_normal(17)
    m1, s1 = _ext.exp_block_reduce(gram, 2.3, rshift, cshift)
    m2, s2 = _kernels_py.exp_block_reduce(gram, 2.3, rshift, cshift)
    assert m1 == m2
    assert s1 == pytest.approx(s2, rel=1e-13)

    a = np.ascontiguousarray(rng.standard_normal((50, 40)))
    np.testing.assert_allclose(_ext.row_logsumexp(a), _kernels_py.row_logsumexp(a),
                               rtol=1e-13)


def test_row_logsumexp_against_scipy():
    rng = np.random.default_rng(2)
    a = rng.standard_normal((20, 30)) * 50
    np.testing.assert_allclose(row_logsumexp(a), logsumexp(a, axis=1), rtol=1e-12)


def test_log_exp_gram_sum_matches_dense_reference():
    rng = np.random.default_rng(3)
    pts = rng.standard_normal((40, 6))
    logw = np.log(rng.dirichlet(np.ones(40)))
    got = log_exp_gram_sum(pts, scale=1.4, log_weights=logw, block_size=7)
    terms = 1.4 * (pts @ pts.T) + logw[:, None] + logw[None, :]
    assert got == pytest.approx(logsumexp(terms), rel=1e-12)


def test_log_exp_gram_sum_block_size_invariance():
    rng = np.random.default_rng(4)
    pts = rng.standard_normal((65, 3))
    vals = [log_exp_gram_sum(pts, scale=2.0, block_size=b) for b in (1, 8, 64, 200)]
    for v in vals[1:]:
        assert v == pytest.approx(vals[0], rel=1e-12)


def test_log_exp_gram_sum_stays_in_log_domain():
    # a single far-out point: the linear-domain sum would be exp(10000)
    pts = np.array([[100.0]])
    assert log_exp_gram_sum(pts) == pytest.approx(10000.0)


def test_log_exp_gram_sum_rejects_bad_input():
    with pytest.raises(ValueError):
        log_exp_gram_sum(np.empty((0, 3)))
    with pytest.raises(ValueError):
        log_exp_gram_sum(np.ones((4, 2)), log_weights=np.zeros(3))


def test_backend_reported():
    assert BACKEND in ("cython", "python")
