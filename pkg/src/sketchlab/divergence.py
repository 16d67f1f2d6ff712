"""Chi-square and total-variation computations for Gaussian location mixtures.

The sketched spiked input law is a uniform mixture of unit-covariance
Gaussians whose means are scaled sketch columns, while the sketched null law
is standard normal.  For that pair everything needed here has an exact form:

* the chi-square divergence of a location mixture against the standard
  normal is the pairwise exponential moment of its mean distribution,
  ``chi2 = sum_{i,j} w_i w_j exp(<mu_i, mu_j>) - 1``;
* total variation is bounded by ``V <= sqrt(log(1 + chi2) / 2)``;
* the optimal sum of hypothesis-testing errors is ``1 - V``.

Every exponential sum is evaluated in the log domain with one final
exponentiation; Monte Carlo twins are provided for the exact quantities so
each closed form has an independent check.
"""

import math
import sys
from dataclasses import dataclass

import numpy as np

from .hard_instance import HardInstanceParams
from .kernels import log_exp_gram_sum, row_logsumexp
from .sketch_linalg import ColumnSet, SketchMatrix

LOG_FLOAT_MAX = math.log(sys.float_info.max)
_LOG_2PI = math.log(2.0 * math.pi)

# stands in for log(0) in weight vectors: finite (the compiled kernels require
# finite inputs) yet negative enough that exp underflows to exactly zero after
# any shift arising in this package
_LOG_ZERO = -1e9


def _finite_log(weights: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        logw = np.log(weights)
    return np.maximum(logw, _LOG_ZERO)


class StandardNormal:
    """Standard normal law on R^dim with density and sampler."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dim must be at least 1")
        self.dim = dim

    def log_density(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        return -0.5 * np.einsum("ij,ij->i", z, z) - 0.5 * self.dim * _LOG_2PI

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.standard_normal((size, self.dim))


@dataclass(frozen=True)
class GaussianMixture:
    """Mixture of unit-covariance Gaussians with the given means and weights.

    ``means`` is ``(k, dim)``; ``weights`` defaults to uniform and must sum
    to one.  Instances expose ``log_density`` and ``sample`` and therefore
    plug into ``tv_monte_carlo`` on either side.
    """

    means: np.ndarray
    weights: np.ndarray = None

    def __post_init__(self):
        means = np.ascontiguousarray(self.means, dtype=np.float64)
        if means.ndim != 2 or means.shape[0] == 0:
            raise ValueError("means must be a nonempty (k, dim) array")
        k = means.shape[0]
        if self.weights is None:
            weights = np.full(k, 1.0 / k)
        else:
            weights = np.asarray(self.weights, dtype=np.float64)
            if weights.shape != (k,):
                raise ValueError("weights must have one entry per mean")
            if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
                raise ValueError("weights must be nonnegative and sum to 1")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def n_components(self) -> int:
        return self.means.shape[0]

    def _component_offsets(self) -> np.ndarray:
        # log w_i - |mu_i|^2 / 2, the z-independent part of each logit
        with np.errstate(divide="ignore"):
            logw = np.log(self.weights)
        return logw - 0.5 * np.einsum("ij,ij->i", self.means, self.means)

    def log_density_ratio(self, z: np.ndarray) -> np.ndarray:
        """Log of (mixture density / standard normal density), batched."""
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        logits = z @ self.means.T + self._component_offsets()[None, :]
        return row_logsumexp(logits)

    def log_density(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=np.float64))
        return self.log_density_ratio(z) - 0.5 * np.einsum("ij,ij->i", z, z) \
            - 0.5 * self.dim * _LOG_2PI

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        comp = rng.choice(self.n_components, size=size, p=self.weights)
        return self.means[comp] + rng.standard_normal((size, self.dim))


def mixture_from_sketch(
    a: SketchMatrix, cset: ColumnSet, params: HardInstanceParams
) -> GaussianMixture:
    """Sketched law of the spiked input restricted to the small-norm columns.

    The means are ``spike * A_i`` for each retained column ``i``, uniformly
    weighted; the spike scale is kept explicit in the means.
    """
    if len(cset) == 0:
        raise ValueError("column set is empty")
    means = params.spike * a.entries[:, cset.indices].T
    return GaussianMixture(means=np.ascontiguousarray(means))


def log1p_chi2_mixture(mix: GaussianMixture, block_size: int = 1024) -> float:
    """``log(1 + chi2)`` of the mixture against the standard normal.

    This is the log of the pairwise exponential sum and never leaves the log
    domain, so it is finite even when the divergence itself overflows float
    range.
    """
    with np.errstate(divide="ignore"):
        logw = np.log(mix.weights)
    return log_exp_gram_sum(mix.means, scale=1.0, log_weights=logw,
                            block_size=block_size)


def chi2_mixture_exact(mix: GaussianMixture, block_size: int = 1024) -> float:
    """Exact chi-square divergence of the mixture from the standard normal.

    Raises ``OverflowError`` when the value exceeds float range rather than
    saturating; use ``log1p_chi2_mixture`` when only the log scale matters.
    """
    log_sum = log1p_chi2_mixture(mix, block_size=block_size)
    if log_sum > LOG_FLOAT_MAX:
        raise OverflowError(
            f"chi-square divergence exceeds float range (log(1+chi2) = {log_sum:.6g})"
        )
    return float(math.expm1(log_sum))


def chi2_monte_carlo(mix: GaussianMixture, trials: int, rng: np.random.Generator):
    """Monte Carlo estimate of the same divergence, with standard error.

    Samples from the mixture and averages the density ratio against the
    standard normal minus one; an independent check of the closed form.
    """
    if trials < 1000:
        raise ValueError("need at least 1000 trials")
    z = mix.sample(rng, trials)
    ratio = np.exp(mix.log_density_ratio(z))
    estimate = float(ratio.mean()) - 1.0
    std_error = float(ratio.std(ddof=1) / math.sqrt(trials))
    return estimate, std_error


def tv_upper_from_log1p_chi2(log1p_chi2: float) -> float:
    """Total-variation bound ``min(1, sqrt(log1p_chi2 / 2))``."""
    if log1p_chi2 < 0:
        if log1p_chi2 < -1e-12:
            raise ValueError(f"log(1 + chi2) must be nonnegative, got {log1p_chi2!r}")
        log1p_chi2 = 0.0
    return min(1.0, math.sqrt(0.5 * log1p_chi2))


def tv_upper_from_chi2(chi2: float) -> float:
    """Total-variation bound from a chi-square divergence.

    Uses ``2 V^2 <= log(1 + chi2)`` with the natural logarithm, clamped at 1
    where the bound becomes vacuous.
    """
    if chi2 < 0:
        raise ValueError(f"chi-square divergence must be nonnegative, got {chi2!r}")
    return tv_upper_from_log1p_chi2(math.log1p(chi2))


def tv_monte_carlo(p_dist, q_dist, trials: int, rng: np.random.Generator):
    """Monte Carlo total variation between two density-equipped laws.

    Uses the one-sided identity ``V = E_{z~Q}[(1 - p(z)/q(z))_+]``, whose
    integrand is bounded in [0, 1]; returns ``(estimate, std_error)``.  Both
    arguments need ``sample(rng, size)`` and ``log_density(batch)``.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    z = q_dist.sample(rng, trials)
    log_ratio = p_dist.log_density(z) - q_dist.log_density(z)
    vals = -np.expm1(np.minimum(log_ratio, 0.0))
    estimate = float(vals.mean())
    std_error = float(vals.std(ddof=1) / math.sqrt(trials))
    return estimate, std_error


def bayes_error(tv: float) -> float:
    """Optimal Type-I plus Type-II testing error, ``1 - tv``."""
    if not 0.0 <= tv <= 1.0:
        raise ValueError(f"total variation must lie in [0, 1], got {tv!r}")
    return 1.0 - tv


@dataclass(frozen=True)
class DivergenceReport:
    """Exact and Monte Carlo divergences plus the derived testing bounds."""

    chi2_exact: float
    chi2_mc: float
    chi2_mc_se: float
    tv_upper: float
    bayes_error_lower: float

    @classmethod
    def from_chi2(cls, chi2_exact: float, chi2_mc: float, chi2_mc_se: float):
        tv = tv_upper_from_chi2(chi2_exact)
        return cls(chi2_exact=chi2_exact, chi2_mc=chi2_mc, chi2_mc_se=chi2_mc_se,
                   tv_upper=tv, bayes_error_lower=bayes_error(tv))

    def to_json_dict(self) -> dict:
        return {
            "chi2_exact": self.chi2_exact,
            "chi2_mc": self.chi2_mc,
            "chi2_mc_se": self.chi2_mc_se,
            "tv_upper": self.tv_upper,
            "bayes_error_lower": self.bayes_error_lower,
        }


def divergence_report(mix: GaussianMixture, trials: int,
                      rng: np.random.Generator) -> DivergenceReport:
    """Exact divergence, its Monte Carlo twin, and the testing bounds."""
    chi2 = chi2_mixture_exact(mix)
    mc, se = chi2_monte_carlo(mix, trials, rng)
    return DivergenceReport.from_chi2(chi2, mc, se)
