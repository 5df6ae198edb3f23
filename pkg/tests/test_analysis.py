import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from harqage.analysis import (
    ConsistencyError,
    Region,
    WaitingPolicy,
    busy_pmf,
    closed_form,
    closed_form_arrays,
    epoch_moments,
    epoch_objective,
    optimal_waits,
    p_of_lambda,
    solve_lambda_bisection,
)
from harqage.channel import BscParams, HarqScheme, bsc_mds_probs, explicit_probs


def pmf_moments(n, m, q1, q2, tail=1e-14):
    """E[X], E[X^2], P(Y=n) by summing the busy-period PMF until the tail mass is below ``tail``."""
    r = (1.0 - q1) * (1.0 - q2)
    if r == 0.0:
        j_max = 1
    else:
        j_max = max(1, math.ceil(math.log(tail * 1e-4) / math.log(r)))
    j = np.arange(1, j_max + 1, dtype=float)
    geo = r ** (j - 1)
    p_a = geo * q1
    p_b = geo * (1.0 - q1) * q2
    x_a = j * n + (j - 1) * m
    x_b = j * (n + m)
    mass = p_a.sum() + p_b.sum()
    assert 1.0 - mass < tail
    ex = (p_a * x_a).sum() + (p_b * x_b).sum()
    ex2 = (p_a * x_a**2).sum() + (p_b * x_b**2).sum()
    return ex, ex2, p_a.sum()


def ratio_direct(mo, w1, w2):
    """E[Q]/E[L] straight from the epoch geometry, averaging over which attempt opened the epoch."""
    pn = mo.prob_y_n
    out_q = out_l = 0.0
    for y, w, py in ((mo.n, w1, pn), (mo.n + mo.m, w2, 1.0 - pn)):
        # E[y (w + X) + (w + X)^2 / 2] with X independent of y
        out_q += py * (y * (w + mo.mean_x) + 0.5 * (w * w + 2 * w * mo.mean_x + mo.mean_x2))
        out_l += py * (w + mo.mean_x)
    return out_q / out_l


# -- busy_pmf ---------------------------------------------------------------

def test_busy_pmf_first_packet():
    s, p = HarqScheme(1, 10, 3), explicit_probs(0.3, 0.6)
    a, b = busy_pmf(s, p, 1)
    assert a == 0.3
    assert b == pytest.approx(0.7 * 0.6)


@pytest.mark.parametrize("j", [2, 3, 10])
def test_busy_pmf_perfect_first_attempt(j):
    assert busy_pmf(HarqScheme(1, 10, 3), explicit_probs(1.0, 0.4), j) == (0.0, 0.0)


def test_busy_pmf_rejects_j0():
    with pytest.raises(ValueError):
        busy_pmf(HarqScheme(1, 10, 3), explicit_probs(0.5, 0.5), 0)


@pytest.mark.parametrize("q1,q2", [(0.5, 0.7), (0.05, 0.1), (0.9, 0.01), (0.001, 0.002)])
def test_busy_pmf_sums_to_one(q1, q2):
    s, p = HarqScheme(1, 20, 1), explicit_probs(q1, q2)
    r = (1 - q1) * (1 - q2)
    j_max = math.ceil(40 / -math.log(r))
    total = math.fsum(sum(busy_pmf(s, p, j)) for j in range(1, j_max + 1))
    assert total >= 1 - 1e-12
    assert total <= 1 + 1e-12


# -- epoch_moments ----------------------------------------------------------

def test_moments_perfect_first_attempt():
    mo = epoch_moments(HarqScheme(1, 12, 7), explicit_probs(1.0, 0.3))
    assert (mo.mean_x, mo.mean_x2, mo.mean_y, mo.prob_y_n) == (12.0, 144.0, 12.0, 1.0)


def test_moments_against_pmf_sum():
    mo = epoch_moments(HarqScheme(1, 20, 1), explicit_probs(0.5, 0.7))
    ex, ex2, pyn = pmf_moments(20, 1, 0.5, 0.7)
    assert mo.mean_x == pytest.approx(ex, rel=1e-10)
    assert mo.mean_x2 == pytest.approx(ex2, rel=1e-10)
    assert mo.prob_y_n == pytest.approx(pyn, rel=1e-10)


def test_moments_against_pmf_sum_randomized(instances):
    for scheme, probs in instances[:200]:
        mo = epoch_moments(scheme, probs)
        ex, ex2, pyn = pmf_moments(scheme.n, scheme.m, probs.q1, probs.q2)
        assert mo.mean_x == pytest.approx(ex, rel=1e-10)
        assert mo.mean_x2 == pytest.approx(ex2, rel=1e-10)
        assert mo.prob_y_n == pytest.approx(pyn, rel=1e-10)


def test_moment_invariants(instances):
    for scheme, probs in instances:
        mo = epoch_moments(scheme, probs)
        n, m = scheme.n, scheme.m
        assert mo.denom > 0 and 0 < mo.prob_y_n <= 1
        assert mo.mean_x2 >= mo.mean_x**2 * (1 - 1e-12)
        assert n - 1e-9 <= mo.mean_y <= n + m + 1e-9
        mix = mo.prob_y_n * n + (1 - mo.prob_y_n) * (n + m)
        assert mo.mean_y == pytest.approx(mix, rel=1e-12)
        assert mo.mean_x >= n * (1 - 1e-12)


# -- epoch_objective --------------------------------------------------------

def test_objective_perfect_channel_zero_wait():
    for n, m in [(10, 0), (10, 3), (37, 50)]:
        obj = epoch_objective(HarqScheme(1, n, m), explicit_probs(1.0, 0.5), WaitingPolicy())
        assert obj.ratio == pytest.approx(1.5 * n, rel=1e-15)


def test_objective_zero_wait_identity(instances):
    for scheme, probs in instances:
        mo = epoch_moments(scheme, probs)
        obj = epoch_objective(scheme, probs, WaitingPolicy())
        assert obj.ratio == pytest.approx(mo.mean_y + 0.5 * mo.mean_x2 / mo.mean_x, rel=1e-13)
        assert obj.mean_l == mo.mean_x


@pytest.mark.parametrize("w1,w2", [(0, 0), (3, 0), (0, 5), (7.5, 2.25)])
def test_objective_matches_direct_geometry(w1, w2):
    scheme, probs = HarqScheme(1, 20, 4), explicit_probs(0.4, 0.8)
    mo = epoch_moments(scheme, probs)
    obj = epoch_objective(scheme, probs, WaitingPolicy(w1, w2))
    assert obj.ratio == pytest.approx(ratio_direct(mo, w1, w2), rel=1e-13)


# -- optimal_waits / p ------------------------------------------------------

def test_waits_inactive_below_first_threshold():
    s, p = HarqScheme(1, 20, 5), explicit_probs(0.4, 0.8)
    ex = epoch_moments(s, p).mean_x
    assert optimal_waits(ex + 20, s, p) == WaitingPolicy(0.0, 0.0)
    assert optimal_waits(ex, s, p) == WaitingPolicy(0.0, 0.0)


def test_waits_at_second_threshold():
    s, p = HarqScheme(1, 20, 5), explicit_probs(0.4, 0.8)
    ex = epoch_moments(s, p).mean_x
    w = optimal_waits(ex + 20 + 5, s, p)
    assert w.w1 == pytest.approx(5.0, abs=1e-12)
    assert w.w2 == 0.0


def test_waits_above_both_thresholds():
    s, p = HarqScheme(1, 20, 2), explicit_probs(0.4, 0.8)
    ex = epoch_moments(s, p).mean_x
    w = optimal_waits(ex + 20 + 2 + 5, s, p)
    assert w.w1 == pytest.approx(7.0, abs=1e-12)
    assert w.w2 == pytest.approx(5.0, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(
    lam=st.floats(0, 5000),
    n=st.integers(1, 100),
    m=st.integers(0, 100),
    q1=st.floats(0.01, 1.0),
    q2=st.floats(0.01, 1.0),
)
def test_threshold_gap_bounded_by_ir_len(lam, n, m, q1, q2):
    w = optimal_waits(lam, HarqScheme(1, n, m), explicit_probs(q1, q2))
    assert -1e-9 <= w.w1 - w.w2 <= m + 1e-9


def test_p_zero_wait_regime_exact():
    # q1 = 1, n = 10: E[X] = E[Y] = 10, E[X^2] = 100, and at lam = 15 no waiting happens
    s, p = HarqScheme(1, 10, 3), explicit_probs(1.0, 0.5)
    mo = epoch_moments(s, p)
    exact = Fraction(10) * 10 + Fraction(100, 2) - 15 * Fraction(10)
    assert exact == 0
    assert (mo.mean_x, mo.mean_x2, mo.mean_y) == (10.0, 100.0, 10.0)
    assert p_of_lambda(15.0, s, p) == 0.0


def test_p_strictly_decreasing(instances):
    rng = np.random.default_rng(7)
    for scheme, probs in instances[:300]:
        mo = epoch_moments(scheme, probs)
        lams = np.sort(rng.uniform(0, 3 * mo.zero_wait_age, size=6))
        vals = [p_of_lambda(l, scheme, probs) for l in lams]
        assert all(a > b for a, b in zip(vals, vals[1:]))


def test_p_vanishes_at_zero_wait_age_in_r1(instances):
    for scheme, probs in instances:
        sol = closed_form(scheme, probs)
        if sol.region is Region.R1:
            scale = sol.moments.mean_x * sol.lambda_star
            assert abs(p_of_lambda(sol.lambda_star, scheme, probs)) <= 1e-12 * scale


def test_p_vanishes_at_closed_form_root(instances):
    for scheme, probs in instances:
        sol = closed_form(scheme, probs)
        scale = sol.moments.mean_x * sol.lambda_star
        assert abs(p_of_lambda(sol.lambda_star, scheme, probs)) <= 1e-10 * scale


# -- bisection / closed form -------------------------------------------------

@pytest.mark.parametrize("m", [0, 1, 7, 100])
def test_bisection_perfect_channel(m):
    lam = solve_lambda_bisection(HarqScheme(1, 10, m), explicit_probs(1.0, 0.3), tol=1e-10)
    assert lam == pytest.approx(15.0, abs=1e-10)


def test_bisection_matches_closed_form_on_bsc_example():
    s = HarqScheme(15, 20, 1)
    p = bsc_mds_probs(s, BscParams(0.1))
    assert solve_lambda_bisection(s, p, 1e-10) == pytest.approx(closed_form(s, p).lambda_star, abs=1e-9)


def test_bisection_above_mean_busy_period():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        q1, q2 = 1 - rng.random(), 1 - rng.random()
        s = HarqScheme(1, int(rng.integers(1, 101)), int(rng.integers(0, 101)))
        p = explicit_probs(q1, q2)
        assert solve_lambda_bisection(s, p, 1e-10) > epoch_moments(s, p).mean_x


def test_bisection_rejects_bad_tol():
    with pytest.raises(ValueError):
        solve_lambda_bisection(HarqScheme(1, 10, 1), explicit_probs(0.5, 0.5), tol=0)


def test_closed_form_perfect_first_attempt():
    for m in (0, 5, 500):
        sol = closed_form(HarqScheme(1, 8, m), explicit_probs(1.0, 0.2))
        assert sol.region is Region.R1
        assert sol.lambda_star == pytest.approx(12.0, rel=1e-15)
        assert sol.policy == WaitingPolicy(0.0, 0.0)


def test_closed_form_paper_good_channel():
    s = HarqScheme(15, 20, 1)
    sol = closed_form(s, bsc_mds_probs(s, BscParams(0.1)))
    assert sol.region is Region.R1
    assert sol.lambda_star == pytest.approx(31.54, abs=0.005)


def test_closed_form_paper_bad_channel_at_m45():
    s = HarqScheme(15, 20, 45)
    sol = closed_form(s, bsc_mds_probs(s, BscParams(0.4)))
    assert sol.region is Region.R2
    assert sol.lambda_star == pytest.approx(174.97, abs=0.005)
    assert sol.policy.w1 > 0 and sol.policy.w2 == 0


def test_closed_form_invariants(instances):
    for scheme, probs in instances:
        sol = closed_form(scheme, probs)
        mo = sol.moments
        assert sol.lambda_star > mo.mean_x
        assert sol.region in (Region.R1, Region.R2)
        assert sol.policy.w2 == 0.0
        assert (sol.region is Region.R1) == (sol.policy == WaitingPolicy(0.0, 0.0))
        if sol.region is Region.R2:
            assert sol.c_xy < 0
            assert mo.mean_x + scheme.n < sol.lambda_star <= mo.mean_x + scheme.n + scheme.m


def test_closed_form_agrees_with_direct_minimisation():
    # minimise E[Q]/E[L] over (w1, w2) >= 0 without p(lambda) or the threshold form
    rng = np.random.default_rng(3)
    cases = [(HarqScheme(15, 20, 45), bsc_mds_probs(HarqScheme(15, 20, 45), BscParams(0.4)))]
    for _ in range(40):
        q1, q2 = rng.uniform(0.02, 1.0, size=2)
        cases.append((HarqScheme(1, int(rng.integers(1, 40)), int(rng.integers(0, 120))),
                      explicit_probs(q1, q2)))
    for scheme, probs in cases:
        mo = epoch_moments(scheme, probs)
        sol = closed_form(scheme, probs)
        best = math.inf
        for start in ([0.0, 0.0], [scheme.m + 1.0, 1.0], [5.0 * scheme.n, 0.0]):
            res = minimize(lambda w: ratio_direct(mo, *w), start, method="L-BFGS-B",
                           bounds=[(0, None), (0, None)], options={"ftol": 1e-15, "gtol": 1e-12})
            best = min(best, res.fun)
        assert best == pytest.approx(sol.lambda_star, rel=1e-7)
        assert best >= sol.lambda_star * (1 - 1e-12)


def test_closed_form_arrays_match_scalar(instances):
    sub = instances[:300]
    n = [s.n for s, _ in sub]
    m = [s.m for s, _ in sub]
    q1 = [p.q1 for _, p in sub]
    q2 = [p.q2 for _, p in sub]
    res = closed_form_arrays(n, m, q1, q2)
    for i, (s, p) in enumerate(sub):
        sol = closed_form(s, p)
        assert res["lambda_star"][i] == pytest.approx(sol.lambda_star, rel=1e-14)
        assert bool(res["in_r1"][i]) == (sol.region is Region.R1)
        assert res["w1"][i] == pytest.approx(sol.policy.w1, rel=1e-12, abs=1e-12)


def test_boundary_equality_goes_to_r1():
    # n = m*sqrt(1-q1) exactly: q1 = 0.75, m = 20, n = 10
    sol = closed_form(HarqScheme(1, 10, 20), explicit_probs(0.75, 0.5))
    assert sol.region is Region.R1
    assert sol.policy == WaitingPolicy(0.0, 0.0)
