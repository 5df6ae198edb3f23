"""
Closed-form age analysis for stationary deterministic HARQ-IR policies.

Time is measured in bit-transmission units.  An epoch runs between two
successful decodings: it opens with age ``Y`` (either ``n`` or ``n + m``
depending on which attempt ended the previous epoch), the transmitter idles
for ``w(Y)``, and the channel is then busy for ``X`` until some packet is
decoded.  The long-term average age is ``E[Q] / E[L]`` where ``Q`` is the
area under the age curve over an epoch and ``L`` its length.

The fractional objective is handled with the parametric function
``p(lam) = min_w E[Q] - lam * E[L]``, which is strictly decreasing and whose
unique root is the optimal average age.  For fixed ``lam`` the minimising
waits are thresholds ``w(y) = max(lam - E[X] - y, 0)``; at the root the
second-attempt wait is always zero and the root itself has a closed form.

The moment helpers accept numpy arrays as well as scalars and broadcast, so
the optimizer can evaluate a whole (n, m) grid in one call.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channel import AttemptProbs, HarqScheme

__all__ = [
    "Region",
    "EpochMoments",
    "WaitingPolicy",
    "AgeSolution",
    "EpochObjective",
    "ConsistencyError",
    "busy_pmf",
    "epoch_moments",
    "epoch_objective",
    "optimal_waits",
    "p_of_lambda",
    "zero_wait_age",
    "solve_lambda_bisection",
    "closed_form",
    "closed_form_arrays",
]


class ConsistencyError(RuntimeError):
    """Two routes to the same quantity disagree, or a bracket/discriminant is invalid."""


class Region(str, enum.Enum):
    R1 = "R1"  # E[X] < lam <= E[X] + n: zero wait
    R2 = "R2"  # E[X] + n < lam <= E[X] + n + m: wait only after a first-attempt success
    R3 = "R3"  # lam > E[X] + n + m: never optimal

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class EpochMoments:
    n: int
    m: int
    q1: float
    q2: float
    mean_x: float
    mean_x2: float
    mean_y: float
    prob_y_n: float
    denom: float

    @property
    def zero_wait_age(self) -> float:
        return self.mean_y + 0.5 * self.mean_x2 / self.mean_x


@dataclass(frozen=True)
class WaitingPolicy:
    """Idle time after a first-attempt (``w1``) or second-attempt (``w2``) success."""

    w1: float = 0.0
    w2: float = 0.0

    def __post_init__(self):
        if not (self.w1 >= 0.0 and self.w2 >= 0.0):
            raise ValueError(f"waits must be non-negative, got ({self.w1}, {self.w2})")

    def wait(self, start_age: float, n: int) -> float:
        return self.w1 if start_age == n else self.w2


@dataclass(frozen=True)
class AgeSolution:
    lambda_star: float
    region: Region
    policy: WaitingPolicy
    c_xy: float
    moments: EpochMoments


class EpochObjective(NamedTuple):
    mean_q: float
    mean_l: float
    ratio: float


def _moment_arrays(n, m, q1, q2):
    """Return (E[X], E[X^2], E[Y], P(Y=n), denom); broadcasts over array inputs."""
    denom = q1 + q2 - q1 * q2
    mean_x = (n + m * (1.0 - q1)) / denom
    mean_x2 = ((n + m) ** 2 * (2.0 - q1 - q2 + q1 * q2) - 2.0 * m * (n + m) * q1) / denom**2 + (
        m**2 * q1
    ) / denom
    prob_y_n = q1 / denom
    mean_y = n + m * (1.0 - q1) * q2 / denom
    return mean_x, mean_x2, mean_y, prob_y_n, denom


def busy_pmf(scheme: HarqScheme, probs: AttemptProbs, j: int) -> tuple[float, float]:
    """Probabilities that the busy period ends on packet ``j`` at attempt one or two.

    The busy period equals ``j*n + (j-1)*m`` in the first case and
    ``j*n + j*m`` in the second.
    """
    if j < 1:
        raise ValueError(f"packet index j must be >= 1, got {j}")
    q1, q2 = probs.q1, probs.q2
    both_fail = ((1.0 - q1) * (1.0 - q2)) ** (j - 1)
    return both_fail * q1, both_fail * (1.0 - q1) * q2


def epoch_moments(scheme: HarqScheme, probs: AttemptProbs) -> EpochMoments:
    n, m = scheme.codeword_len, scheme.ir_len
    mean_x, mean_x2, mean_y, prob_y_n, denom = _moment_arrays(n, m, probs.q1, probs.q2)
    return EpochMoments(
        n=n,
        m=m,
        q1=probs.q1,
        q2=probs.q2,
        mean_x=float(mean_x),
        mean_x2=float(mean_x2),
        mean_y=float(mean_y),
        prob_y_n=float(prob_y_n),
        denom=float(denom),
    )


def _as_moments(scheme_or_moments, probs=None) -> EpochMoments:
    if isinstance(scheme_or_moments, EpochMoments):
        return scheme_or_moments
    return epoch_moments(scheme_or_moments, probs)


def epoch_objective(scheme, probs, policy: WaitingPolicy) -> EpochObjective:
    """Expected epoch area ``E[Q]``, length ``E[L]`` and their ratio under ``policy``."""
    mo = _as_moments(scheme, probs)
    n, m, q1, q2, d = mo.n, mo.m, mo.q1, mo.q2, mo.denom
    w1, w2 = policy.w1, policy.w2
    p_first = q1 / d
    p_second = (1.0 - q1) * q2 / d
    mean_w = p_first * w1 + p_second * w2
    mean_w2 = p_first * w1 * w1 + p_second * w2 * w2
    mean_yw = p_first * w1 * n + p_second * w2 * (n + m)

    mean_l = mo.mean_x + mean_w
    mean_q = (
        mean_yw
        + mo.mean_y * mo.mean_x
        + 0.5 * mo.mean_x2
        + mo.mean_x * mean_w
        + 0.5 * mean_w2
    )
    return EpochObjective(mean_q, mean_l, mean_q / mean_l)


def optimal_waits(lam: float, scheme, probs=None) -> WaitingPolicy:
    """Threshold waits minimising ``E[Q] - lam*E[L]`` for a fixed ``lam``."""
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    mo = _as_moments(scheme, probs)
    threshold = lam - mo.mean_x
    return WaitingPolicy(max(threshold - mo.n, 0.0), max(threshold - mo.n - mo.m, 0.0))


def p_of_lambda(lam: float, scheme, probs=None) -> float:
    mo = _as_moments(scheme, probs)
    obj = epoch_objective(mo, None, optimal_waits(lam, mo))
    return obj.mean_q - lam * obj.mean_l


def zero_wait_age(scheme, probs=None) -> float:
    return _as_moments(scheme, probs).zero_wait_age


def solve_lambda_bisection(scheme, probs=None, tol: float = 1e-10, max_iter: int = 400) -> float:
    """Root of ``p`` by bisection on ``[E[X], zero-wait age + 1]``.

    ``p(E[X]) > 0`` because the optimum exceeds ``E[X]``, and ``p`` is
    negative above the zero-wait age since that policy is feasible.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    mo = _as_moments(scheme, probs)
    lo = mo.mean_x
    hi = mo.zero_wait_age + 1.0
    p_lo = p_of_lambda(lo, mo)
    p_hi = p_of_lambda(hi, mo)
    if not (p_lo > 0.0 and p_hi < 0.0):
        raise ConsistencyError(
            f"p does not change sign on [{lo}, {hi}]: p(lo)={p_lo}, p(hi)={p_hi}"
        )
    for _ in range(max_iter):
        if hi - lo < tol:
            break
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        p_mid = p_of_lambda(mid, mo)
        if p_mid > 0.0:
            lo = mid
        elif p_mid < 0.0:
            hi = mid
        else:
            return mid
    return 0.5 * (lo + hi)


def _underbar_lambda(mean_x, mean_x2, mean_y, n, alpha):
    """Root of the R2 quadratic, returned with C_XY.

    The wait ``w1`` solves ``alpha/2 w^2 + E[X] w + C_XY = 0``; its positive
    root is written as ``-2C / (sqrt(E[X]^2 - 2 alpha C) + E[X])`` to avoid
    cancellation when ``alpha*C`` is small.
    """
    c_xy = mean_x**2 + n * mean_x - 0.5 * mean_x2 - mean_y * mean_x
    disc = mean_x**2 - 2.0 * alpha * c_xy
    w1 = -2.0 * c_xy / (np.sqrt(np.maximum(disc, 0.0)) + mean_x)
    return mean_x + n + w1, c_xy, disc


def closed_form(scheme, probs=None) -> AgeSolution:
    """Optimal average age and waits in closed form.

    Zero waiting is optimal exactly when ``n >= m*sqrt(1 - q1)`` (the
    boundary goes to R1); otherwise the optimum waits only after a
    first-attempt success.
    """
    mo = _as_moments(scheme, probs)
    n, m = mo.n, mo.m
    alpha = mo.prob_y_n
    lam_under, c_xy, disc = _underbar_lambda(mo.mean_x, mo.mean_x2, mo.mean_y, n, alpha)
    c_xy = float(c_xy)
    if n >= m * math.sqrt(1.0 - mo.q1):
        return AgeSolution(mo.zero_wait_age, Region.R1, WaitingPolicy(0.0, 0.0), c_xy, mo)
    if disc < 0:
        raise ConsistencyError(f"negative discriminant {disc} in the R2 branch")
    lam = float(lam_under)
    policy = optimal_waits(lam, mo)
    return AgeSolution(lam, Region.R2, policy, c_xy, mo)


def closed_form_arrays(n, m, q1, q2):
    """Vectorised :func:`closed_form`.

    Returns a dict of broadcast arrays: ``lambda_star``, ``in_r1`` (bool),
    ``w1``, ``w2``, ``c_xy``, ``mean_x``, ``mean_x2``, ``mean_y``, ``prob_y_n``.
    """
    n = np.asarray(n, dtype=float)
    m = np.asarray(m, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    mean_x, mean_x2, mean_y, prob_y_n, _ = _moment_arrays(n, m, q1, q2)
    lam_bar = mean_y + 0.5 * mean_x2 / mean_x
    lam_under, c_xy, disc = _underbar_lambda(mean_x, mean_x2, mean_y, n, prob_y_n)
    in_r1 = n >= m * np.sqrt(1.0 - q1)
    if np.any(~in_r1 & (disc < 0)):
        raise ConsistencyError("negative discriminant in the R2 branch")
    lam = np.where(in_r1, lam_bar, lam_under)
    w1 = np.maximum(lam - mean_x - n, 0.0)
    w2 = np.maximum(lam - mean_x - n - m, 0.0)
    return {
        "lambda_star": lam,
        "in_r1": in_r1,
        "w1": np.where(in_r1, 0.0, w1),
        "w2": np.where(in_r1, 0.0, w2),
        "c_xy": c_xy,
        "mean_x": mean_x,
        "mean_x2": mean_x2,
        "mean_y": mean_y,
        "prob_y_n": prob_y_n,
    }
