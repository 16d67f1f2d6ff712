"""Deterministic evaluation of the divergence bound chain.

For a fixed measurement matrix the argument proceeds in four steps, each of
which this module computes as a number:

1. a measurement budget below which the guarantees kick in
   (``measurement_threshold``);
2. an inequality bounding the mean pairwise exponential of scaled column
   Gram entries over the small-norm columns (``gram_exp_check``), whose
   left side equals ``1 + chi2`` of the sketched mixture exactly;
3. a closed-form ceiling for that chi-square divergence
   (``chi2_closed_form_bound``);
4. the composition into a total-variation budget and a ceiling on any
   distinguisher's success probability (``success_probability_bound``).

All left-hand sides are evaluated in the log domain, so out-of-regime
parameters report honestly (possibly as ``inf``) instead of overflowing.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .divergence import tv_upper_from_log1p_chi2
from .hard_instance import (HardInstanceParams, TruncationFailure,
                            event_probability_mc, spike_coefficient)
from .kernels import log_exp_gram_sum
from .sketch_linalg import SketchMatrix, small_column_set

ANALYTIC_TRUNCATION_TERM = 0.01
_REL_SLACK = 1e-9
_LOG_FLOAT_MAX = math.log(np.finfo(np.float64).max)


def _validate_order_and_slack(p: float, eps: float):
    if not (np.isfinite(p) and p > 2):
        raise ValueError(f"moment order must be a finite real > 2, got {p!r}")
    if not 0 < eps < 1 - 2 / p:
        raise ValueError(f"eps must lie strictly in (0, {1 - 2 / p}), got {eps!r}")


def measurement_budget(n: int, p: float, eps: float) -> float:
    """Unfloored measurement budget ``eps/(100 c^2) * n^(1-2/p) * ln n``.

    ``c`` is the spike coefficient for order ``p``.  Matrices with fewer
    rows than this satisfy the precondition of the Gram-exponential bound.
    """
    _validate_order_and_slack(p, eps)
    if n < 1:
        raise ValueError("n must be at least 1")
    c = spike_coefficient(p)
    return eps / (100.0 * c * c) * float(n) ** (1.0 - 2.0 / p) * math.log(n)


def measurement_threshold(n: int, p: float, eps: float) -> int:
    """Integer measurement threshold, the floor of ``measurement_budget``.

    May be 0 at desk scale: the guarantees are asymptotic and the constants
    generous, so small ``n`` can leave no admissible sketch size at all.
    """
    return int(math.floor(measurement_budget(n, p, eps)))


class GramExpBound(NamedTuple):
    lhs: float
    rhs: float
    holds: bool
    preconditions_met: bool


def gram_exp_rhs(params: HardInstanceParams, m) -> float:
    """Closed-form right side of the Gram-exponential inequality.

    ``1.03 c^4 (n^(-2+4/p+eps) m + n^(2/p-1) sqrt(m)) + 1`` with ``c`` the
    spike coefficient; accepts a real ``m`` so asymptotic trends can be
    evaluated on the unfloored budget.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    n, p = float(params.n), params.p
    c4 = params.spike_coeff ** 4
    return 1.03 * c4 * (n ** (-2.0 + 4.0 / p + params.eps) * m
                        + n ** (2.0 / p - 1.0) * math.sqrt(m)) + 1.0


def chi2_closed_form_bound(params: HardInstanceParams, m) -> float:
    """Ceiling for the sketched mixture's chi-square divergence.

    Equals ``gram_exp_rhs - 1``; valid whenever the measurement budget and
    column-set preconditions hold, and reported regardless.
    """
    return gram_exp_rhs(params, m) - 1.0


def _log_gram_exp_lhs(a: SketchMatrix, cset, params: HardInstanceParams,
                      block_size: int = 1024) -> float:
    """Log of the mean pairwise exponential over the small-norm columns.

    The terms are ``exp(spike^2 * <A_i, A_j>)`` for columns in the set,
    averaged with uniform weights; the value equals ``log(1 + chi2)`` of the
    sketched spiked mixture against the sketched null law.
    """
    cols = np.ascontiguousarray(a.entries[:, cset.indices].T)
    k = cols.shape[0]
    scale = params.spike_coeff ** 2 * float(params.n) ** (2.0 / params.p)
    log_weights = np.full(k, -math.log(k))
    return log_exp_gram_sum(cols, scale=scale, log_weights=log_weights,
                            block_size=block_size)


def gram_exp_check(a: SketchMatrix, params: HardInstanceParams,
                   block_size: int = 1024) -> GramExpBound:
    """Evaluate both sides of the Gram-exponential inequality.

    ``preconditions_met`` records whether the matrix is inside the regime
    the inequality is proved for (row count under the measurement budget and
    at least 99% of columns retained); out-of-regime matrices still get both
    sides reported, with ``lhs`` possibly ``inf``.
    """
    cset = small_column_set(a)
    log_lhs = _log_gram_exp_lhs(a, cset, params, block_size=block_size)
    rhs = gram_exp_rhs(params, a.m)
    return GramExpBound(
        lhs=math.exp(log_lhs) if log_lhs < _LOG_FLOAT_MAX else math.inf,
        rhs=rhs,
        holds=bool(log_lhs <= math.log(rhs) + _REL_SLACK),
        preconditions_met=bool(
            a.m < measurement_budget(params.n, params.p, params.eps)
            and 100 * len(cset) >= 99 * a.n
        ),
    )


def compose_tv_chain(tv_mixture: float, excluded_fraction: float,
                     null_term: float, spiked_term: float):
    """Fold the bound chain: returns ``(tv_base, tv_total, success_ceiling)``.

    ``tv_base`` adds the excluded-column mass to the mixture bound and
    ``tv_total`` adds both truncation terms, each stage clamped at 1; the
    ceiling is ``(1 + tv_total) / 2``.
    """
    tv_base = min(1.0, tv_mixture + excluded_fraction)
    tv_total = min(1.0, tv_base + null_term + spiked_term)
    return tv_base, tv_total, 0.5 * (1.0 + tv_total)


@dataclass(frozen=True)
class BoundReport:
    """All analytic quantities of the bound chain for one matrix."""

    m_threshold: int
    gram_exp_lhs: float
    gram_exp_rhs: float
    chi2_bound: float
    tv_mixture: float
    tv_base: float
    tv_total: float
    success_ceiling: float

    def to_json_dict(self) -> dict:
        return {
            "m_threshold": self.m_threshold,
            "gram_exp_lhs": self.gram_exp_lhs,
            "gram_exp_rhs": self.gram_exp_rhs,
            "chi2_bound": self.chi2_bound,
            "tv_mixture": self.tv_mixture,
            "tv_base": self.tv_base,
            "tv_total": self.tv_total,
            "success_ceiling": self.success_ceiling,
        }


def success_probability_bound(
    a: SketchMatrix,
    params: HardInstanceParams,
    conditioning: str = "analytic",
    trials: int = 10_000,
    rng: Optional[np.random.Generator] = None,
    block_size: int = 1024,
) -> BoundReport:
    """Compose the bound chain into a success-probability ceiling.

    ``tv_mixture`` bounds the distance between the sketched null law and the
    column-restricted sketched mixture via the exact chi-square divergence;
    ``tv_base`` adds the excluded-column mass; ``tv_total`` adds the two
    truncation terms, each 1/100 in ``analytic`` mode or estimated by Monte
    Carlo in ``monte_carlo`` mode.  The ceiling ``(1 + tv_total)/2`` applies
    to any decision rule fed the sketch of a fair mix of the two conditioned
    laws.
    """
    cset = small_column_set(a)
    log_lhs = _log_gram_exp_lhs(a, cset, params, block_size=block_size)
    rhs = gram_exp_rhs(params, a.m)
    tv_mixture = tv_upper_from_log1p_chi2(max(log_lhs, 0.0))
    if conditioning == "analytic":
        null_term = spiked_term = ANALYTIC_TRUNCATION_TERM
    elif conditioning == "monte_carlo":
        if rng is None:
            raise ValueError("monte_carlo conditioning requires an rng")
        null_term, _ = event_probability_mc(
            params, TruncationFailure.NULL_CAP_EXCEEDED, trials, rng)
        spiked_term, _ = event_probability_mc(
            params, TruncationFailure.SPIKED_FLOOR_MISSED, trials, rng)
    else:
        raise ValueError(f"conditioning must be 'analytic' or 'monte_carlo', got {conditioning!r}")
    tv_base, tv_total, ceiling = compose_tv_chain(
        tv_mixture, cset.complement_size / a.n, null_term, spiked_term)
    return BoundReport(
        m_threshold=measurement_threshold(params.n, params.p, params.eps),
        gram_exp_lhs=math.exp(log_lhs) if log_lhs < _LOG_FLOAT_MAX else math.inf,
        gram_exp_rhs=rhs,
        chi2_bound=chi2_closed_form_bound(params, a.m),
        tv_mixture=tv_mixture,
        tv_base=tv_base,
        tv_total=tv_total,
        success_ceiling=ceiling,
    )
