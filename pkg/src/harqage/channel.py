"""
Decoding success probabilities for a two-attempt HARQ-IR scheme.

A scheme is the triple (data_len, codeword_len, ir_len) = (l, n, m).  The
first decoding attempt sees an n-bit punctured MDS codeword, the second sees
the full (n + m)-bit mother codeword.  Over a binary symmetric channel an
(N, l) MDS code decodes whenever at most floor((N - l) / 2) bits are flipped,
so each success probability is a binomial CDF.

Two summation conventions are supported:

* ``include_zero_errors=True`` (default): the error-free word counts as a
  success, i.e. the sum starts at zero errors.
* ``include_zero_errors=False``: the sum starts at one error.  This drops the
  error-free term and is kept only for comparison.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "HarqScheme",
    "BscParams",
    "AttemptProbs",
    "InfeasibleScheme",
    "binomial_cdf",
    "binomial_range_sum",
    "bsc_mds_probs",
    "explicit_probs",
]


class InfeasibleScheme(ValueError):
    """The scheme cannot deliver anything: first-attempt success probability is zero."""


@dataclass(frozen=True)
class HarqScheme:
    """Code design: data length ``l``, codeword length ``n`` and IR length ``m`` (all in bits)."""

    data_len: int
    codeword_len: int
    ir_len: int

    def __post_init__(self):
        for name in ("data_len", "codeword_len", "ir_len"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise ValueError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.data_len < 1:
            raise ValueError(f"data_len must be >= 1, got {self.data_len}")
        if self.codeword_len < self.data_len:
            raise ValueError(
                f"codeword_len ({self.codeword_len}) must be >= data_len ({self.data_len})"
            )
        if self.ir_len < 0:
            raise ValueError(f"ir_len must be >= 0, got {self.ir_len}")

    @property
    def n(self) -> int:
        return self.codeword_len

    @property
    def m(self) -> int:
        return self.ir_len

    @property
    def radius_first(self) -> int:
        """Number of bit errors correctable on the first attempt."""
        return (self.codeword_len - self.data_len) // 2

    @property
    def radius_second(self) -> int:
        return (self.codeword_len + self.ir_len - self.data_len) // 2


@dataclass(frozen=True)
class BscParams:
    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.epsilon < 0.5:
            raise ValueError(f"crossover probability must lie in (0, 1/2), got {self.epsilon}")


@dataclass(frozen=True)
class AttemptProbs:
    """Marginal success probabilities of the first (``q1``) and second (``q2``) decoding attempt."""

    q1: float
    q2: float

    def __post_init__(self):
        for name in ("q1", "q2"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and 0.0 < value <= 1.0):
                raise ValueError(f"{name} must lie in (0, 1], got {value!r}")
            object.__setattr__(self, name, float(value))

    @property
    def denom(self) -> float:
        """Probability that a single packet is eventually decoded, q1 + q2 - q1*q2."""
        return self.q1 + self.q2 - self.q1 * self.q2


def _check_binomial_args(n_trials: int, p: float):
    if n_trials < 0:
        raise ValueError(f"n_trials must be non-negative, got {n_trials}")
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise ValueError(f"p must lie in [0, 1], got {p}")


def binomial_range_sum(k_lo: int, k_hi: int, n_trials: int, p: float) -> float:
    """Sum of Binomial(n_trials, p) probabilities for k_lo <= k <= k_hi.

    Terms are generated in log space with the ratio
    ``log t[k+1] - log t[k] = log((n - k) / (k + 1)) + log(p / (1 - p))``
    and accumulated relative to the running maximum, so nothing overflows or
    underflows prematurely for n_trials in the tens of thousands.
    """
    _check_binomial_args(n_trials, p)
    k_lo = max(k_lo, 0)
    k_hi = min(k_hi, n_trials)
    if k_hi < k_lo:
        return 0.0
    # degenerate channels put all mass on one outcome
    if p == 0.0:
        return 1.0 if k_lo == 0 else 0.0
    if p == 1.0:
        return 1.0 if k_hi == n_trials else 0.0

    log_odds = math.log(p) - math.log1p(-p)
    log_term = n_trials * math.log1p(-p)  # k = 0
    for k in range(k_lo):
        log_term += math.log((n_trials - k) / (k + 1)) + log_odds

    peak = log_term
    acc = 1.0
    for k in range(k_lo, k_hi):
        log_term += math.log((n_trials - k) / (k + 1)) + log_odds
        if log_term > peak:
            acc = acc * math.exp(peak - log_term) + 1.0
            peak = log_term
        else:
            acc += math.exp(log_term - peak)
    total = acc * math.exp(peak)
    return min(max(total, 0.0), 1.0)


def binomial_cdf(k: int, n_trials: int, p: float) -> float:
    """P(B <= k) for B ~ Binomial(n_trials, p), clamped to [0, 1]."""
    _check_binomial_args(n_trials, p)
    if k < 0 or k > n_trials:
        raise ValueError(f"k must lie in [0, n_trials={n_trials}], got {k}")
    return binomial_range_sum(0, k, n_trials, p)


def bsc_mds_probs(
    scheme: HarqScheme, bsc: BscParams, include_zero_errors: bool = True
) -> AttemptProbs:
    """Success probabilities of both decoding attempts over a BSC with MDS coding.

    Raises :class:`InfeasibleScheme` when the first attempt can never succeed,
    which happens for n == l under the one-error-minimum convention.
    """
    eps = bsc.epsilon
    l_min = 0 if include_zero_errors else 1
    n_first = scheme.codeword_len
    n_second = scheme.codeword_len + scheme.ir_len
    q1 = binomial_range_sum(l_min, scheme.radius_first, n_first, eps)
    q2 = binomial_range_sum(l_min, scheme.radius_second, n_second, eps)
    if q1 <= 0.0:
        raise InfeasibleScheme(
            f"first-attempt success probability is zero for {scheme} at eps={eps}"
        )
    if q2 <= 0.0:
        raise InfeasibleScheme(
            f"second-attempt success probability is zero for {scheme} at eps={eps}"
        )
    return AttemptProbs(q1, q2)


def explicit_probs(q1: float, q2: float) -> AttemptProbs:
    return AttemptProbs(q1, q2)
