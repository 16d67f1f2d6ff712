"""Hard input distributions for moment estimation, and their constants.

The construction plants (or does not plant) a single large coordinate in a
standard Gaussian vector:

* base null:    ``x = y`` with ``y ~ N(0, I_n)``;
* base spiked:  ``x = y + spike * e_t`` with ``t`` uniform on the
  coordinates and ``spike = spike_coeff * n**(1/p)``.

The conditioned variants truncate the two base laws to disjoint p-norm
ranges: the null law to ``{|x|_p <= cutoff * n**(1/p)}`` and the spiked law
to ``{|x|_p >= 4 * cutoff * n**(1/p)}``, so every null input has a p-norm at
least a factor 4 below every spiked input and no factor-2 estimate can be
valid for both.  The constants are chosen so that each truncation removes at
most 1/100 of the mass: ``cutoff**p = 100 * E|g|^p`` makes the null event a
Markov-bound tail, and ``spike_coeff = 4 * cutoff + 10`` pushes the planted
coordinate past the spiked threshold unless the Gaussian at the planted
position falls below ``-10 * n**(1/p)``.
"""

import csv
import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammaln

DEFAULT_MAX_RETRIES = 1000


class SampleSource(enum.Enum):
    BASE_NULL = "base_null"
    BASE_SPIKED = "base_spiked"
    COND_NULL = "cond_null"
    COND_SPIKED = "cond_spiked"


class TruncationFailure(enum.Enum):
    """Ways a base sample can miss its conditioning event."""

    NULL_CAP_EXCEEDED = "null_cap_exceeded"
    SPIKED_FLOOR_MISSED = "spiked_floor_missed"


class RetriesExhaustedError(RuntimeError):
    """Rejection sampling hit the retry budget.

    With the constants used here each conditioning event has probability at
    least 0.99 once ``n`` is moderately large, so exhaustion signals a
    parameter regime where the construction's guarantees do not apply.
    """

    def __init__(self, which: SampleSource, attempts: int):
        super().__init__(
            f"no accepted {which.value} sample after {attempts} attempts; "
            "n is likely too small for the conditioning events"
        )
        self.which = which
        self.attempts = attempts


def log_gaussian_abs_moment(p: float) -> float:
    """Natural log of ``E|g|^p`` for ``g ~ N(0, 1)``."""
    if not (np.isfinite(p) and p > 0):
        raise ValueError(f"moment order must be a positive finite real, got {p!r}")
    return 0.5 * p * math.log(2.0) + float(gammaln((p + 1.0) / 2.0)) - 0.5 * math.log(math.pi)


def gaussian_abs_moment(p: float) -> float:
    """Absolute p-th moment of a standard normal variable.

    Evaluated as a single exponentiation of a log-Gamma expression, accurate
    to better than 1e-12 relative.  Raises ``OverflowError`` once the moment
    exceeds float range (p around 260).
    """
    return math.exp(log_gaussian_abs_moment(p))


def spike_coefficient(p: float) -> float:
    """Scale of the planted coordinate, ``4 * (100 * E|g|^p)**(1/p) + 10``.

    Computed in the log domain so it stays finite for arbitrarily large
    moment orders; grows like ``4 * sqrt(p/e)`` for large ``p``.
    """
    return 4.0 * math.exp((math.log(100.0) + log_gaussian_abs_moment(p)) / p) + 10.0


@dataclass(frozen=True)
class HardInstanceParams:
    """Derived constants of the hard pair at a given dimension and order."""

    n: int
    p: float
    eps: float
    abs_moment: float
    cutoff: float
    spike_coeff: float
    spike: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not self.p > 2:
            raise ValueError(f"moment order must exceed 2, got {self.p!r}")
        if not 0 < self.eps < 1 - 2 / self.p:
            raise ValueError(
                f"eps must lie strictly in (0, {1 - 2 / self.p}), got {self.eps!r}"
            )
        for name in ("abs_moment", "cutoff", "spike_coeff", "spike"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")

    @property
    def null_norm_cap(self) -> float:
        """Largest p-norm retained by the conditioned null law."""
        return self.cutoff * self.n ** (1.0 / self.p)

    @property
    def spiked_norm_floor(self) -> float:
        """Smallest p-norm retained by the conditioned spiked law."""
        return 4.0 * self.cutoff * self.n ** (1.0 / self.p)


def derive_params(n: int, p: float, eps: Optional[float] = None) -> HardInstanceParams:
    """Fill in all constants for dimension ``n`` and moment order ``p > 2``.

    ``eps`` is the slack exponent used by the measurement bounds and must be
    a constant strictly below ``1 - 2/p``; it defaults to half that value.
    """
    if not (np.isfinite(p) and p > 2):
        raise ValueError(f"moment order must be a finite real > 2, got {p!r}")
    if n < 1:
        raise ValueError("n must be at least 1")
    if eps is None:
        eps = (1.0 - 2.0 / p) / 2.0
    abs_moment = gaussian_abs_moment(p)
    cutoff = math.exp((math.log(100.0) + log_gaussian_abs_moment(p)) / p)
    spike_coeff = 4.0 * cutoff + 10.0
    return HardInstanceParams(
        n=int(n),
        p=float(p),
        eps=float(eps),
        abs_moment=abs_moment,
        cutoff=cutoff,
        spike_coeff=spike_coeff,
        spike=spike_coeff * float(n) ** (1.0 / p),
    )


@dataclass(frozen=True)
class LabeledSample:
    """One input vector together with its provenance.

    ``attempts`` counts the rejection-sampling draws that produced the
    sample (always 1 for the base distributions).
    """

    x: np.ndarray
    source: SampleSource
    spike_index: Optional[int]
    pnorm: float
    attempts: int = 1


def pnorm(x: np.ndarray, p: float) -> float:
    """p-norm computed in scaled form, robust to large orders."""
    ax = np.abs(np.asarray(x, dtype=np.float64))
    mx = float(ax.max()) if ax.size else 0.0
    if mx == 0.0:
        return 0.0
    return mx * float(np.sum((ax / mx) ** p)) ** (1.0 / p)


def pnorm_rows(x: np.ndarray, p: float) -> np.ndarray:
    """Row-wise p-norms of a 2-D array, scaled like ``pnorm``."""
    ax = np.abs(np.asarray(x, dtype=np.float64))
    mx = ax.max(axis=1)
    safe = np.where(mx > 0, mx, 1.0)
    sums = np.sum((ax / safe[:, None]) ** p, axis=1)
    return np.where(mx > 0, safe * sums ** (1.0 / p), 0.0)


def sample_base_null(params: HardInstanceParams, rng: np.random.Generator) -> LabeledSample:
    """One draw of the unconditioned null input, ``x ~ N(0, I_n)``."""
    x = rng.standard_normal(params.n)
    return LabeledSample(x=x, source=SampleSource.BASE_NULL, spike_index=None,
                         pnorm=pnorm(x, params.p))


def sample_base_spiked(params: HardInstanceParams, rng: np.random.Generator) -> LabeledSample:
    """One draw of the unconditioned spiked input.

    Draws the Gaussian background first and the planted coordinate second,
    so the consumption order of the stream is part of the contract.
    """
    x = rng.standard_normal(params.n)
    t = int(rng.integers(params.n))
    x[t] += params.spike
    return LabeledSample(x=x, source=SampleSource.BASE_SPIKED, spike_index=t,
                         pnorm=pnorm(x, params.p))


def _accepts(params: HardInstanceParams, which: SampleSource, norm: float) -> bool:
    if which is SampleSource.COND_NULL:
        return norm <= params.null_norm_cap
    return norm >= params.spiked_norm_floor


def sample_conditioned(
    params: HardInstanceParams,
    which: SampleSource,
    rng: np.random.Generator,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> LabeledSample:
    """Rejection-sample the conditioned null or spiked distribution.

    ``which`` selects ``COND_NULL`` (norm capped) or ``COND_SPIKED`` (norm
    floored).  Raises ``RetriesExhaustedError`` after ``max_retries``
    consecutive rejections.
    """
    if which not in (SampleSource.COND_NULL, SampleSource.COND_SPIKED):
        raise ValueError(f"which must be a conditioned source, got {which!r}")
    if max_retries < 1:
        raise ValueError("max_retries must be at least 1")
    base = sample_base_null if which is SampleSource.COND_NULL else sample_base_spiked
    for attempt in range(1, max_retries + 1):
        draw = base(params, rng)
        if _accepts(params, which, draw.pnorm):
            return LabeledSample(x=draw.x, source=which, spike_index=draw.spike_index,
                                 pnorm=draw.pnorm, attempts=attempt)
    raise RetriesExhaustedError(which, max_retries)


def sample_conditioned_block(
    params: HardInstanceParams,
    which: SampleSource,
    count: int,
    rng: np.random.Generator,
    max_retries: int = DEFAULT_MAX_RETRIES,
):
    """Vectorized rejection sampling of ``count`` conditioned inputs.

    Returns ``(x, spike_idx, draws)`` where ``x`` is ``(count, n)``,
    ``spike_idx`` is an int array (-1 for null samples) and ``draws`` is the
    total number of base draws consumed.  Equivalent in distribution to
    ``count`` calls of ``sample_conditioned`` and deterministic given the
    stream, though the draw order differs.
    """
    if which not in (SampleSource.COND_NULL, SampleSource.COND_SPIKED):
        raise ValueError(f"which must be a conditioned source, got {which!r}")
    spiked = which is SampleSource.COND_SPIKED
    out = np.empty((count, params.n))
    idx = np.full(count, -1, dtype=np.intp)
    filled = 0
    draws = 0
    rounds = 0
    while filled < count:
        rounds += 1
        if rounds > max_retries:
            raise RetriesExhaustedError(which, draws)
        want = count - filled
        x = rng.standard_normal((want, params.n))
        if spiked:
            t = rng.integers(params.n, size=want)
            x[np.arange(want), t] += params.spike
        draws += want
        norms = pnorm_rows(x, params.p)
        keep = norms <= params.null_norm_cap if not spiked else norms >= params.spiked_norm_floor
        kept = int(keep.sum())
        if kept:
            out[filled : filled + kept] = x[keep]
            if spiked:
                idx[filled : filled + kept] = t[keep]
            filled += kept
    return out, idx, draws


def event_probability_mc(
    params: HardInstanceParams,
    event: TruncationFailure,
    trials: int,
    rng: np.random.Generator,
    chunk: int = 512,
):
    """Monte Carlo frequency of a conditioning failure, with binomial SE.

    ``NULL_CAP_EXCEEDED`` is the probability, under the base null law, that
    the p-norm exceeds the null cap; ``SPIKED_FLOOR_MISSED`` is the
    probability, under the base spiked law, that it falls short of the
    spiked floor.  Both are below 1/100 by construction once ``n`` is large
    enough.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    if event not in TruncationFailure:
        raise ValueError(f"unknown event {event!r}")
    spiked = event is TruncationFailure.SPIKED_FLOOR_MISSED
    failures = 0
    done = 0
    while done < trials:
        want = min(chunk, trials - done)
        x = rng.standard_normal((want, params.n))
        if spiked:
            t = rng.integers(params.n, size=want)
            x[np.arange(want), t] += params.spike
        norms = pnorm_rows(x, params.p)
        if spiked:
            failures += int(np.sum(norms < params.spiked_norm_floor))
        else:
            failures += int(np.sum(norms > params.null_norm_cap))
        done += want
    estimate = failures / trials
    std_error = math.sqrt(estimate * (1.0 - estimate) / trials)
    return estimate, std_error


def samples_to_csv(samples, path, include_vectors: bool = False):
    """Write labeled samples as CSV rows ``source,spike_index,pnorm``.

    With ``include_vectors`` the full coordinates follow as columns
    ``x0..x{n-1}``; all floats are written in round-trip precision.
    """
    samples = list(samples)
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        header = ["source", "spike_index", "pnorm"]
        if include_vectors and samples:
            header += [f"x{i}" for i in range(samples[0].x.size)]
        writer.writerow(header)
        for s in samples:
            row = [s.source.value, "" if s.spike_index is None else s.spike_index,
                   repr(float(s.pnorm))]
            if include_vectors:
                row += [repr(float(v)) for v in s.x]
            writer.writerow(row)
