import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtr

from sketchlab.divergence import (DivergenceReport, GaussianMixture,
                                  StandardNormal, bayes_error,
                                  chi2_mixture_exact, chi2_monte_carlo,
                                  divergence_report, log1p_chi2_mixture,
                                  mixture_from_sketch, tv_monte_carlo,
                                  tv_upper_from_chi2, tv_upper_from_log1p_chi2)
from sketchlab.hard_instance import derive_params
from sketchlab.rng import substream
from sketchlab.sketch_linalg import SketchMatrix, make_orthonormal_sketch, small_column_set


def single_mean(q, dim=3):
    mu = np.zeros((1, dim))
    mu[0, 0] = math.sqrt(q)
    return GaussianMixture(mu)


def test_mixture_validation():
    with pytest.raises(ValueError):
        GaussianMixture(np.empty((0, 2)))
    with pytest.raises(ValueError):
        GaussianMixture(np.ones((2, 2)), weights=np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        GaussianMixture(np.ones((2, 2)), weights=np.array([1.5, -0.5]))
    mix = GaussianMixture(np.ones((4, 2)))
    assert np.allclose(mix.weights, 0.25)


def test_mixture_from_sketch_identity_matrix():
    params = derive_params(6, 4.0)
    a = SketchMatrix(np.eye(6))
    cset = small_column_set(a)
    mix = mixture_from_sketch(a, cset, params)
    np.testing.assert_allclose(mix.means, params.spike * np.eye(6))
    off_diag = mix.means @ mix.means.T - np.diag(np.diag(mix.means @ mix.means.T))
    assert np.abs(off_diag).max() == 0.0
    assert np.allclose(mix.weights, 1.0 / 6.0)


def test_mixture_from_sketch_flat_row_collapses():
    params = derive_params(16, 4.0)
    a = SketchMatrix(np.full((1, 16), 0.25))
    mix = mixture_from_sketch(a, small_column_set(a), params)
    np.testing.assert_allclose(mix.means, params.spike * 0.25)
    # identical means: the mixture is a single Gaussian, chi2 = expm1(|mu|^2)
    q = (params.spike * 0.25) ** 2
    assert chi2_mixture_exact(mix) == pytest.approx(math.expm1(q), rel=1e-10)


def test_mixture_from_sketch_rejects_empty_set():
    params = derive_params(4, 4.0)
    a = SketchMatrix(np.eye(4))
    cset = small_column_set(a)
    empty = type(cset)(indices=np.array([], dtype=np.intp), threshold=cset.threshold,
                       n_cols=4)
    with pytest.raises(ValueError):
        mixture_from_sketch(a, empty, params)


def test_chi2_exact_zero_mean():
    mix = GaussianMixture(np.zeros((1, 5)))
    assert abs(chi2_mixture_exact(mix)) <= 1e-12


def test_chi2_exact_single_mean_closed_form():
    for q in (0.5, 1.0, 4.0, 12.0, 20.0):
        got = chi2_mixture_exact(single_mean(q))
        assert got == pytest.approx(math.expm1(q), rel=1e-10)


def test_chi2_exact_symmetric_pair():
    mix = GaussianMixture(np.array([[1.0, 0.0], [-1.0, 0.0]]))
    assert chi2_mixture_exact(mix) == pytest.approx(math.cosh(1.0) - 1.0, rel=1e-12)


def test_chi2_exact_permutation_and_rotation_invariance():
    rng = substream(0, "invariance")
    means = rng.standard_normal((12, 4))
    mix = GaussianMixture(means)
    base = chi2_mixture_exact(mix)
    perm = rng.permutation(12)
    assert chi2_mixture_exact(GaussianMixture(means[perm])) == pytest.approx(
        base, rel=1e-12)
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    assert chi2_mixture_exact(GaussianMixture(means @ q)) == pytest.approx(
        base, rel=1e-12)


def test_chi2_exact_overflow_signaled():
    with pytest.raises(OverflowError):
        chi2_mixture_exact(single_mean(800.0))
    # the log-domain value stays available
    assert log1p_chi2_mixture(single_mean(800.0)) == pytest.approx(800.0)


def test_chi2_monte_carlo_null_case():
    mix = GaussianMixture(np.zeros((1, 3)))
    est, se = chi2_monte_carlo(mix, 5000, substream(1, "mc-null"))
    assert abs(est) <= 3 * se + 1e-9


def test_chi2_monte_carlo_single_mean():
    est, se = chi2_monte_carlo(single_mean(1.0), 20_000, substream(2, "mc-one"))
    assert abs(est - math.expm1(1.0)) <= 3 * se


def test_chi2_monte_carlo_matches_exact_on_random_mixtures():
    rng = substream(3, "mc-oracle")
    for _ in range(5):
        dim = int(rng.integers(1, 9))
        k = int(rng.integers(1, 33))
        means = rng.standard_normal((k, dim))
        norms = np.linalg.norm(means, axis=1)
        big = norms > 2.0
        means[big] *= (2.0 / norms[big])[:, None]
        mix = GaussianMixture(means)
        est, se = chi2_monte_carlo(mix, 30_000, rng)
        assert abs(est - chi2_mixture_exact(mix)) <= 3 * se


def test_chi2_monte_carlo_validates_trials():
    with pytest.raises(ValueError):
        chi2_monte_carlo(single_mean(1.0), 10, substream(0, "x"))


def test_tv_upper_from_chi2_closed_values():
    assert tv_upper_from_chi2(0.0) == 0.0
    assert tv_upper_from_chi2(math.expm1(0.5)) == pytest.approx(0.5, rel=1e-12)
    assert tv_upper_from_chi2(math.expm1(2.0)) == 1.0
    assert tv_upper_from_log1p_chi2(1e9) == 1.0
    with pytest.raises(ValueError):
        tv_upper_from_chi2(-0.5)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 1e12))
def test_tv_upper_bounds_and_monotone(chi2):
    v = tv_upper_from_chi2(chi2)
    assert 0.0 <= v <= 1.0
    assert tv_upper_from_chi2(chi2 * 2 + 1e-9) >= v


def test_tv_monte_carlo_identical_laws():
    q = StandardNormal(2)
    p = GaussianMixture(np.zeros((1, 2)))
    est, se = tv_monte_carlo(p, q, 4000, substream(4, "tv-null"))
    assert abs(est) <= 3 * se + 1e-12


def test_tv_monte_carlo_shifted_normal_closed_form():
    # V(N(0,1), N(2,1)) = 2 Phi(1) - 1
    p = GaussianMixture(np.array([[2.0]]))
    q = StandardNormal(1)
    est, se = tv_monte_carlo(p, q, 40_000, substream(5, "tv-shift"))
    assert abs(est - (2 * ndtr(1.0) - 1.0)) <= 3 * se


def test_tv_monte_carlo_below_chi2_bound():
    params = derive_params(128, 4.0)
    for seed, m in ((0, 1), (1, 2)):
        a = make_orthonormal_sketch(m, 128, seed=seed)
        mix = mixture_from_sketch(a, small_column_set(a), params)
        bound = tv_upper_from_log1p_chi2(log1p_chi2_mixture(mix))
        est, se = tv_monte_carlo(mix, StandardNormal(m), 4000,
                                 substream(seed, "tv-bound"))
        assert est <= bound + 3 * se


def test_data_processing_input_vs_sketch():
    params = derive_params(128, 4.0)
    a = make_orthonormal_sketch(2, 128, seed=9)
    cset = small_column_set(a)
    input_means = np.zeros((len(cset), 128))
    input_means[np.arange(len(cset)), cset.indices] = params.spike
    rng = substream(6, "dpi")
    tv_in, se_in = tv_monte_carlo(StandardNormal(128), GaussianMixture(input_means),
                                  3000, rng)
    tv_sk, se_sk = tv_monte_carlo(StandardNormal(2),
                                  mixture_from_sketch(a, cset, params), 3000, rng)
    assert tv_in >= tv_sk - 3 * math.hypot(se_in, se_sk)


def test_bayes_error_values():
    assert bayes_error(0.0) == 1.0
    assert bayes_error(1.0) == 0.0
    assert bayes_error(0.98) == pytest.approx(0.02)
    with pytest.raises(ValueError):
        bayes_error(1.5)


def test_divergence_report_fields_and_invariants(tmp_path):
    mix = single_mean(1.0)
    report = divergence_report(mix, 5000, substream(7, "report"))
    assert report.tv_upper == pytest.approx(
        min(1.0, math.sqrt(0.5 * math.log1p(report.chi2_exact))), rel=1e-12)
    assert report.bayes_error_lower == pytest.approx(1.0 - report.tv_upper, rel=1e-12)
    d = report.to_json_dict()
    assert list(d) == ["chi2_exact", "chi2_mc", "chi2_mc_se", "tv_upper",
                       "bayes_error_lower"]
    assert d["chi2_exact"] == pytest.approx(math.expm1(1.0), rel=1e-10)


def test_report_builder_consistency():
    r = DivergenceReport.from_chi2(math.expm1(0.5), 0.6, 0.01)
    assert r.tv_upper == pytest.approx(0.5, rel=1e-12)
    assert r.bayes_error_lower == pytest.approx(0.5, rel=1e-12)
