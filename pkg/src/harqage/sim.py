"""
Monte Carlo simulator for the HARQ-IR epoch process.

Each packet gets a first decoding attempt after ``n`` bits (success with
probability ``q1``) and, if that fails, a second attempt after ``m`` more IR
bits (success with probability ``q2``).  A packet failing both attempts is
dropped and a fresh one is sent.  After a success the transmitter idles for
a wait that depends only on which attempt succeeded, or on the age at that
moment in threshold mode.

Time-average age is estimated as the ratio of summed epoch areas to summed
epoch lengths, with batch-means standard errors.

Example
-------
>>> from harqage.channel import HarqScheme, explicit_probs
>>> from harqage.sim import SimConfig, ExplicitWaits, run
>>> stats = run(HarqScheme(10, 10, 0), explicit_probs(1.0, 1.0),
...             SimConfig(num_epochs=1000, seed=1, policy=ExplicitWaits(0, 0)))
>>> stats.avg_aoi
15.0
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import NamedTuple, Union

import numpy as np

from .analysis import epoch_moments
from .channel import AttemptProbs, HarqScheme

__all__ = [
    "ExplicitWaits",
    "Threshold",
    "SimConfig",
    "SimStats",
    "EpochOutcome",
    "make_rng",
    "simulate_epoch",
    "simulate_epochs",
    "run",
    "run_replicas",
]

_MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class ExplicitWaits:
    w1: float = 0.0
    w2: float = 0.0

    def __post_init__(self):
        if not (self.w1 >= 0.0 and self.w2 >= 0.0):
            raise ValueError(f"waits must be non-negative, got ({self.w1}, {self.w2})")


@dataclass(frozen=True)
class Threshold:
    """Wait until the age would reach ``lam - E[X]``: ``w = max(lam - E[X] - start_age, 0)``."""

    lam: float

    def __post_init__(self):
        if not self.lam >= 0.0:
            raise ValueError(f"threshold lambda must be non-negative, got {self.lam}")


PolicyMode = Union[ExplicitWaits, Threshold]


@dataclass(frozen=True)
class SimConfig:
    num_epochs: int
    seed: int
    policy: PolicyMode = ExplicitWaits()
    warmup_epochs: int | None = None  # None: 1% of num_epochs
    n_batches: int = 100

    def __post_init__(self):
        if self.num_epochs < 1:
            raise ValueError(f"num_epochs must be >= 1, got {self.num_epochs}")
        if not 0 <= self.seed <= _MAX_SEED:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.warmup_epochs is None:
            object.__setattr__(self, "warmup_epochs", self.num_epochs // 100)
        if not 0 <= self.warmup_epochs < self.num_epochs:
            raise ValueError(
                f"warmup_epochs must lie in [0, num_epochs), got {self.warmup_epochs}"
            )
        if self.n_batches < 2:
            raise ValueError(f"n_batches must be >= 2, got {self.n_batches}")


@dataclass(frozen=True)
class SimStats:
    avg_aoi: float
    stderr_avg_aoi: float
    mean_q_hat: float
    mean_l_hat: float
    mean_x_hat: float
    mean_x2_hat: float
    mean_y_hat: float
    prob_y_n_hat: float
    mean_wait_hat: float
    stderr_mean_x: float
    stderr_mean_x2: float
    stderr_mean_y: float
    stderr_prob_y_n: float
    epochs_measured: int

    def to_dict(self) -> dict:
        return asdict(self)


class EpochOutcome(NamedTuple):
    busy: float
    q_area: float
    end_age: float


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def simulate_epoch(
    probs: AttemptProbs,
    scheme: HarqScheme,
    start_age: float,
    wait: float,
    rng: np.random.Generator,
) -> EpochOutcome:
    """Simulate one epoch attempt by attempt.

    The area is the trapezoid under the age line that starts at
    ``start_age`` and grows with unit slope for ``wait + busy``.
    """
    n, m = scheme.codeword_len, scheme.ir_len
    busy = 0.0
    while True:
        if rng.random() < probs.q1:
            busy += n
            end_age = float(n)
            break
        if rng.random() < probs.q2:
            busy += n + m
            end_age = float(n + m)
            break
        busy += n + m
    length = wait + busy
    return EpochOutcome(busy, start_age * length + 0.5 * length * length, end_age)


def _draw_busy(n: int, m: int, q1: float, q2: float, count: int, rng: np.random.Generator):
    """Attempt-level draws for ``count`` independent epochs.

    Returns (busy periods, mask of epochs ended by the first attempt).  Every
    unresolved epoch consumes two uniforms per packet round, in epoch order.
    """
    busy = np.zeros(count)
    first = np.zeros(count, dtype=bool)
    pending = np.arange(count)
    while pending.size:
        u = rng.random((pending.size, 2))
        ok1 = u[:, 0] < q1
        ok2 = ~ok1 & (u[:, 1] < q2)
        busy[pending[ok1]] += n
        first[pending[ok1]] = True
        busy[pending[~ok1]] += n + m
        pending = pending[~ok1 & ~ok2]
    return busy, first


def simulate_epochs(
    scheme: HarqScheme, probs: AttemptProbs, config: SimConfig, rng: np.random.Generator
) -> dict[str, np.ndarray]:
    """Run the full chain of ``config.num_epochs`` epochs; returns per-epoch arrays.

    The first epoch starts as if the previous packet was decoded on its first
    attempt (age ``n``).
    """
    n, m = scheme.codeword_len, scheme.ir_len
    num = config.num_epochs
    busy, first = _draw_busy(n, m, probs.q1, probs.q2, num, rng)
    end_age = np.where(first, float(n), float(n + m))

    prev_first = np.empty(num, dtype=bool)
    prev_first[0] = True
    prev_first[1:] = first[:-1]
    start_age = np.where(prev_first, float(n), float(n + m))

    policy = config.policy
    if isinstance(policy, Threshold):
        threshold = policy.lam - epoch_moments(scheme, probs).mean_x
        wait = np.maximum(threshold - start_age, 0.0)
    else:
        wait = np.where(prev_first, float(policy.w1), float(policy.w2))

    length = wait + busy
    area = start_age * length + 0.5 * length * length
    return {
        "busy": busy,
        "wait": wait,
        "length": length,
        "area": area,
        "start_age": start_age,
        "end_age": end_age,
        "first": first,
    }


def _batch_se(values: np.ndarray, n_batches: int) -> float:
    batches = np.array_split(values, n_batches)
    means = np.array([b.mean() for b in batches if b.size])
    if means.size < 2:
        return math.nan
    return float(means.std(ddof=1) / math.sqrt(means.size))


def _stats(trace: dict[str, np.ndarray], n_batches: int) -> SimStats:
    area, length = trace["area"], trace["length"]
    busy = trace["busy"]
    first = trace["first"].astype(float)
    count = area.size
    n_batches = min(n_batches, count)

    batch_ratios = np.array(
        [a.sum() / l.sum() for a, l in zip(np.array_split(area, n_batches), np.array_split(length, n_batches))]
    )
    stderr_aoi = (
        float(batch_ratios.std(ddof=1) / math.sqrt(n_batches)) if n_batches > 1 else math.nan
    )

    mean_q = float(area.mean())
    mean_l = float(length.mean())
    return SimStats(
        avg_aoi=mean_q / mean_l,
        stderr_avg_aoi=stderr_aoi,
        mean_q_hat=mean_q,
        mean_l_hat=mean_l,
        mean_x_hat=float(busy.mean()),
        mean_x2_hat=float((busy * busy).mean()),
        mean_y_hat=float(trace["end_age"].mean()),
        prob_y_n_hat=float(first.mean()),
        mean_wait_hat=float(trace["wait"].mean()),
        stderr_mean_x=_batch_se(busy, n_batches),
        stderr_mean_x2=_batch_se(busy * busy, n_batches),
        stderr_mean_y=_batch_se(trace["end_age"], n_batches),
        stderr_prob_y_n=_batch_se(first, n_batches),
        epochs_measured=int(count),
    )


def _measured(scheme, probs, config, rng) -> dict[str, np.ndarray]:
    trace = simulate_epochs(scheme, probs, config, rng)
    return {k: v[config.warmup_epochs :] for k, v in trace.items()}


def run(scheme: HarqScheme, probs: AttemptProbs, config: SimConfig) -> SimStats:
    """Simulate one replica; same inputs always give identical statistics."""
    rng = make_rng(config.seed)
    return _stats(_measured(scheme, probs, config, rng), config.n_batches)


def run_replicas(
    scheme: HarqScheme,
    probs: AttemptProbs,
    config: SimConfig,
    replicas: int,
    threads: int | None = None,
) -> SimStats:
    """Independent replicas on spawned RNG streams, merged in replica order.

    Each replica runs ``config.num_epochs`` epochs with its own warm-up.
    Batches are formed over the concatenated measured epochs.
    """
    if replicas < 1:
        raise ValueError(f"replicas must be >= 1, got {replicas}")
    children = np.random.SeedSequence(config.seed).spawn(replicas)

    def one(ss):
        return _measured(scheme, probs, config, np.random.Generator(np.random.PCG64(ss)))

    with ThreadPoolExecutor(max_workers=threads) as pool:
        traces = list(pool.map(one, children))
    merged = {k: np.concatenate([t[k] for t in traces]) for k in traces[0]}
    return _stats(merged, config.n_batches)
