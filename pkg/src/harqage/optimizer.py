"""
Grid search over codeword length ``n`` and IR length ``m``.

For each cell the optimal waiting policy and average age come from
:func:`harqage.analysis.closed_form_arrays`; the design optimum is the
smallest age over the grid, split into the best zero-wait (R1) cell and the
best waiting (R2) cell.  Ties within 1e-12 go to the smaller ``n``, then the
smaller ``m``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np

from .analysis import AgeSolution, closed_form
from .analysis import closed_form_arrays
from .channel import (
    BscParams,
    HarqScheme,
    InfeasibleScheme,
    binomial_range_sum,
    explicit_probs,
)

__all__ = [
    "GridSpec",
    "GridRow",
    "GridResult",
    "grid_search",
    "sweep_epsilon",
    "DEFAULT_N_SPAN",
    "DEFAULT_M_RANGE",
    "INFEASIBLE",
]

DEFAULT_N_SPAN = 60
DEFAULT_M_RANGE = (0, 200)
INFEASIBLE = "infeasible"
TIE_TOL = 1e-12


@dataclass(frozen=True)
class GridSpec:
    data_len: int
    n_range: tuple[int, int]
    m_range: tuple[int, int]
    epsilon: float
    include_zero_errors: bool = True

    def __post_init__(self):
        BscParams(self.epsilon)
        n_lo, n_hi = self.n_range
        m_lo, m_hi = self.m_range
        if self.data_len < 1:
            raise ValueError(f"data_len must be >= 1, got {self.data_len}")
        if n_lo < self.data_len:
            raise ValueError(f"n range must start at or above data_len, got {self.n_range}")
        if m_lo < 0:
            raise ValueError(f"m range must be non-negative, got {self.m_range}")
        if n_hi < n_lo or m_hi < m_lo:
            raise ValueError(f"empty grid: n {self.n_range}, m {self.m_range}")

    @classmethod
    def default(cls, data_len: int, epsilon: float, include_zero_errors: bool = True):
        return cls(
            data_len,
            (data_len, data_len + DEFAULT_N_SPAN),
            DEFAULT_M_RANGE,
            epsilon,
            include_zero_errors,
        )


class GridRow(NamedTuple):
    l: int
    eps: float
    n: int
    m: int
    q1: float
    q2: float
    lambda_star: float
    region: str
    w1: float
    w2: float


@dataclass(frozen=True)
class GridResult:
    spec: GridSpec
    best_n: int
    best_m: int
    best: AgeSolution
    rows: list[GridRow] = field(repr=False)
    lambda_bar_star: float
    lambda_underbar_star: float

    @property
    def rho_star(self) -> float:
        return self.best.lambda_star

    def best_row(self) -> GridRow:
        sol = self.best
        return GridRow(
            self.spec.data_len,
            self.spec.epsilon,
            self.best_n,
            self.best_m,
            sol.moments.q1,
            sol.moments.q2,
            sol.lambda_star,
            str(sol.region),
            sol.policy.w1,
            sol.policy.w2,
        )


@lru_cache(maxsize=65536)
def _success_prob(total_len: int, data_len: int, eps: float, include_zero_errors: bool) -> float:
    l_min = 0 if include_zero_errors else 1
    return binomial_range_sum(l_min, (total_len - data_len) // 2, total_len, eps)


def grid_search(spec: GridSpec) -> GridResult:
    l, eps = spec.data_len, spec.epsilon
    ns = np.arange(spec.n_range[0], spec.n_range[1] + 1)
    ms = np.arange(spec.m_range[0], spec.m_range[1] + 1)
    n_grid, m_grid = np.meshgrid(ns, ms, indexing="ij")
    n_flat, m_flat = n_grid.ravel(), m_grid.ravel()

    prob = lambda length: _success_prob(int(length), l, eps, spec.include_zero_errors)
    q_by_len = {int(t): prob(t) for t in np.unique(np.concatenate([ns, (n_grid + m_grid).ravel()]))}
    q1 = np.array([q_by_len[int(v)] for v in n_flat])
    q2 = np.array([q_by_len[int(v)] for v in n_flat + m_flat])

    feasible = (q1 > 0.0) & (q2 > 0.0)
    if not feasible.any():
        raise InfeasibleScheme(f"every cell of the grid is infeasible: {spec}")

    lam = np.full(n_flat.shape, math.nan)
    w1 = np.full(n_flat.shape, math.nan)
    w2 = np.full(n_flat.shape, math.nan)
    in_r1 = np.zeros(n_flat.shape, dtype=bool)
    res = closed_form_arrays(n_flat[feasible], m_flat[feasible], q1[feasible], q2[feasible])
    lam[feasible] = res["lambda_star"]
    w1[feasible] = res["w1"]
    w2[feasible] = res["w2"]
    in_r1[feasible] = res["in_r1"]

    rows = []
    for i in range(n_flat.size):
        region = INFEASIBLE if not feasible[i] else ("R1" if in_r1[i] else "R2")
        rows.append(
            GridRow(l, eps, int(n_flat[i]), int(m_flat[i]), float(q1[i]), float(q2[i]),
                    float(lam[i]), region, float(w1[i]), float(w2[i]))
        )

    lam_ok = np.where(feasible, lam, np.inf)
    best_val = lam_ok.min()
    # rows are in (n, m) lexicographic order, so the first near-minimum wins ties
    best_idx = int(np.flatnonzero(lam_ok <= best_val + TIE_TOL)[0])
    r1_vals = lam_ok[feasible & in_r1]
    r2_vals = lam_ok[feasible & ~in_r1]

    best_n, best_m = int(n_flat[best_idx]), int(m_flat[best_idx])
    scheme = HarqScheme(l, best_n, best_m)
    best = closed_form(scheme, explicit_probs(q1[best_idx], q2[best_idx]))
    return GridResult(
        spec=spec,
        best_n=best_n,
        best_m=best_m,
        best=best,
        rows=rows,
        lambda_bar_star=float(r1_vals.min()) if r1_vals.size else math.inf,
        lambda_underbar_star=float(r2_vals.min()) if r2_vals.size else math.inf,
    )


class SweepRow(NamedTuple):
    l: int
    eps: float
    rho_star: float
    n_star: int | None
    m_star: int | None
    region: str
    row: GridRow | None
    error: str | None


def sweep_epsilon(
    l_values: Sequence[int],
    eps_grid: Sequence[float],
    n_span: int = DEFAULT_N_SPAN,
    m_range: tuple[int, int] = DEFAULT_M_RANGE,
    include_zero_errors: bool = True,
    threads: int | None = None,
) -> list[SweepRow]:
    """Optimise both ``n`` and ``m`` for every (l, eps) pair.

    Cells that fail are recorded with ``error`` set instead of aborting the
    sweep.  Output order is ``l`` major, ``eps`` minor, whatever the thread
    count.
    """
    for eps in eps_grid:
        if not 0.0 < eps < 0.5:
            raise ValueError(f"eps values must lie in (0, 1/2), got {eps}")
    cells = [(l, eps) for l in l_values for eps in eps_grid]

    def one(cell):
        l, eps = cell
        try:
            spec = GridSpec(l, (l, l + n_span), m_range, eps, include_zero_errors)
            res = grid_search(spec)
        except (InfeasibleScheme, ValueError) as exc:
            return SweepRow(l, eps, math.nan, None, None, INFEASIBLE, None, str(exc))
        return SweepRow(
            l, eps, res.rho_star, res.best_n, res.best_m, str(res.best.region), res.best_row(), None
        )

    if threads == 1:
        return [one(c) for c in cells]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, cells))
