"""Acceptance gate: every criterion at its stated tolerance and runtime budget.

Run alone with ``pytest tests/test_acceptance.py -v``; a summary with one
PASS/FAIL line per criterion is printed at the end of the session.
"""

import math
import time

import numpy as np
import pytest

from cascadelab.asymptotics import SQRT_2PI, affine_pmf_approx, branching_pmf_approx, pmf_constant_probe
from cascadelab.exact import (
    QuasiBinomialParams,
    generalized_poisson_pmf,
    quasi_binomial_exceedance,
    quasi_binomial_log_pmf_all,
    quasi_binomial_pmf,
)
from cascadelab.model import CapacityDistribution, LoadSurgeFunction, ModelFamily, ThresholdSpec
from cascadelab.montecarlo import estimate_exceedance, exceedance_curve, simulate_histogram
from cascadelab.perturbation import (
    PerturbationProfile,
    beta_sequence,
    fixed_k_exceedance_limit,
    order_stat_prob,
    v_limit,
    v_m,
)
from cascadelab.regimes import classify_threshold

from oracles import beta_nested_integral, order_stat_prob_mc, random_profile, v_m_quadrature

UNIFORM = CapacityDistribution.uniform()


def _affine(theta=1.0, lam=1.0):
    return ModelFamily(UNIFORM, LoadSurgeFunction.affine(theta, lam))


def test_01_normalization(criterion):
    start = time.perf_counter()
    worst = 0.0
    for N, theta in [(10, 1.0), (100, 2.5), (10**4, 1.0)]:
        total = math.fsum(np.exp(quasi_binomial_log_pmf_all(N, theta)))
        worst = max(worst, abs(total - 1.0))
    elapsed = time.perf_counter() - start
    ok = worst < 1e-9 and elapsed < 1.0
    assert criterion(1, ok, f"max |sum pmf - 1| = {worst:.2e} (tol 1e-9), {elapsed:.2f}s (< 1s)")


def test_02_pmf_constant(criterion):
    details, ok = [], True
    for theta in (1.0, 2.0):
        start = time.perf_counter()
        probe = pmf_constant_probe(10**6, theta, 10**4)
        elapsed = time.perf_counter() - start
        rel = abs(probe / (theta / SQRT_2PI) - 1)
        ok &= rel < 5e-3 and elapsed < 5.0
        details.append(f"theta={theta:g}: rel {rel:.2e}, {elapsed:.2f}s")
    assert criterion(2, ok, "; ".join(details) + " (tol 0.5%, < 5s)")


def test_03_exceedance_constant(criterion):
    N, k = 10**6, 10**4
    start = time.perf_counter()
    tail = quasi_binomial_exceedance(QuasiBinomialParams(N, 1.0), k)
    elapsed = time.perf_counter() - start
    scaled = tail * math.sqrt(k * N / (N - k))
    rel = abs(scaled / (2 / SQRT_2PI) - 1)
    ok = rel < 1e-2 and elapsed < 60.0
    assert criterion(3, ok, f"scaled exceedance {scaled:.6f} vs {2 / SQRT_2PI:.6f}, rel {rel:.2e} (tol 1%), {elapsed:.2f}s")


def test_04_prefactor_discrepancy(criterion):
    N = 10**6
    worst = 0.0
    for alpha in np.round(np.arange(0.1, 1.0, 0.1), 1):
        k = alpha * N
        ratio = affine_pmf_approx(N, 1.0, k) / branching_pmf_approx(1.0, k)
        worst = max(worst, abs(ratio / (1 - alpha) ** -0.5 - 1))
    eps = np.finfo(float).eps
    ok = worst <= 4 * eps
    assert criterion(4, ok, f"max rel deviation {worst:.2e} (<= 4 ulp = {4 * eps:.1e})")


def test_05_near_total_row(criterion):
    N = 10**6
    value = N * quasi_binomial_pmf(QuasiBinomialParams(N, 1.0), N - 3)
    target = 8 * math.exp(-2) / 6
    rel = abs(value / target - 1)
    assert criterion(5, rel < 5e-3, f"N*P(A=N-3) = {value:.7f} vs {target:.7f}, rel {rel:.2e} (tol 0.5%)")


def test_06_beta_oracles(criterion):
    c = (1.0, 2.0, 3.0, 4.0, 5.0)
    b = beta_sequence(c)
    worst_int = max(abs(b[k] / beta_nested_integral(c, k) - 1) for k in range(1, 6))
    rng = np.random.default_rng(606)
    worst_id = 0.0
    for _ in range(100):
        k = int(rng.integers(1, 13))
        c_rand = tuple(np.maximum.accumulate(rng.uniform(0.05, 1.0) + np.cumsum(rng.uniform(0.0, 2.0, k))))
        x = c_rand[-1] + rng.uniform(0.0, 5.0)
        beta = beta_sequence(c_rand)
        lhs = math.fsum(
            [beta[k]]
            + [
                beta[j - 1] * (x - c_rand[j - 1]) ** l / math.factorial(l)
                for j in range(1, k + 1)
                for l in range(k + 2 - j)
            ]
        )
        rhs = math.fsum(x**l / math.factorial(l) for l in range(k + 1))
        worst_id = max(worst_id, abs(lhs / rhs - 1))
    ok = worst_int < 1e-6 and worst_id < 1e-9
    assert criterion(6, ok, f"nested integral rel {worst_int:.1e} (tol 1e-6); identity rel {worst_id:.1e} (tol 1e-9)")


def test_07_order_statistic_formula(criterion):
    exact_gap = abs(order_stat_prob((1.0, 2.0), 2, 3.0) - 1 / 3)
    rng = np.random.default_rng(707)
    n = 10**6
    worst_z = 0.0
    for _ in range(20):
        M = int(rng.integers(1, 7))
        c = tuple(np.cumsum(rng.uniform(0.0, 2.0, M)) + rng.uniform(0.0, 1.0))
        y = float(rng.uniform(c[0] + 0.05, c[-1] + 2.0))
        p = order_stat_prob(c, M, y)
        mc = order_stat_prob_mc(c, M, y, n, rng)
        se = math.sqrt(max(p * (1 - p), 1e-12) / n)
        worst_z = max(worst_z, abs(mc - p) / se)
    ok = exact_gap < 1e-12 and worst_z < 4
    assert criterion(7, ok, f"|P - 1/3| = {exact_gap:.1e} (tol 1e-12); max MC z = {worst_z:.2f} (< 4) over 20 cases")


def test_08_truncated_constant(criterion):
    worst_zero = 0.0
    for theta in (0.5, 1.0, 2.0):
        for M in range(1, 11):
            worst_zero = max(worst_zero, abs(v_m(theta, [0.0] * (M - 1), M) - 2 * theta / SQRT_2PI))
    rng = np.random.default_rng(808)
    worst_quad = 0.0
    for _ in range(10):
        theta, delta, M = random_profile(rng, 5)
        ref = v_m_quadrature(theta, delta, M, order_stat_prob)
        worst_quad = max(worst_quad, abs(v_m(theta, delta, M) / ref - 1))
    ok = worst_zero < 1e-10 and worst_quad < 1e-7
    assert criterion(8, ok, f"Delta=0 abs err {worst_zero:.1e} (tol 1e-10); quadrature rel {worst_quad:.1e} (tol 1e-7)")


def test_09_algorithm(criterion):
    profile = PerturbationProfile(1.0, lambda i: math.exp(-i))
    results = [v_limit(profile, delta_target=d) for d in (0.1, 0.01, 0.001)]
    ok = True
    gaps = []
    for a, b in zip(results[:-1], results[1:]):
        # the finer value lies inside the coarser bracket
        gap = abs(a.value - b.value)
        gaps.append(f"{gap:.2e} <= {a.bound:.2e}")
        ok &= gap <= a.bound
    values = ", ".join(f"{r.value:.6f} (M={r.m_eps})" for r in results)
    assert criterion(9, ok, f"V approximations {values}; gaps {'; '.join(gaps)}")


def test_10_fixed_k_limit(criterion):
    worst = 0.0
    for theta in (0.5, 1.0, 2.0):
        c = theta + np.arange(20)
        for k in range(1, 21):
            ref = 1.0 - math.fsum(generalized_poisson_pmf(theta, j) for j in range(k))
            worst = max(worst, abs(fixed_k_exceedance_limit(c, k) - ref))
    fam = ModelFamily(UNIFORM, LoadSurgeFunction.redistribution(1.0))
    target = fixed_k_exceedance_limit((1.0, 2.0, 3.0), 3)
    res = estimate_exceedance(fam.at(10**6), 3, 10**6, seed=1010)
    z = abs(res.estimate - target) / res.std_error
    ok = worst < 1e-12 and z < 4 and abs(target - 0.42210) < 5e-6
    assert criterion(
        10, ok, f"GP agreement {worst:.1e} (tol 1e-12); MC {res.estimate:.5f} vs {target:.5f}, z = {z:.2f} (< 4)"
    )


def test_11_monte_carlo_vs_exact(criterion):
    model = _affine().at(10**4)
    start = time.perf_counter()
    res = estimate_exceedance(model, 100, 10**5, seed=1111)
    exact = quasi_binomial_exceedance(QuasiBinomialParams(10**4, 1.0), 100)
    z = abs(res.estimate - exact) / res.std_error
    hists = [simulate_histogram(model, 100, 10**5, seed=1111, workers=w) for w in (1, 4, 16)]
    identical = all(np.array_equal(hists[0], h) for h in hists[1:])
    elapsed = time.perf_counter() - start
    ok = z < 3.5 and identical and elapsed < 30.0
    assert criterion(
        11, ok, f"estimate {res.estimate:.5f} vs exact {exact:.5f}, z = {z:.2f} (< 3.5); "
        f"workers 1/4/16 identical: {identical}; {elapsed:.2f}s"
    )


def test_12_regime_classification(criterion):
    start = time.perf_counter()
    redistribution = ModelFamily(UNIFORM, LoadSurgeFunction.redistribution(1.0))
    verdicts = {
        "affine k=N^0.9": classify_threshold(_affine(), ThresholdSpec.power(1.0, 0.9)).verdict,
        "redistribution k=N^0.4": classify_threshold(redistribution, ThresholdSpec.power(1.0, 0.4)).verdict,
        "redistribution k=N^0.7": classify_threshold(redistribution, ThresholdSpec.power(1.0, 0.7)).verdict,
        "affine lambda=1.2": classify_threshold(_affine(1.0, 1.2), ThresholdSpec.power(1.0, 0.5)).verdict,
    }
    elapsed = time.perf_counter() - start
    ok = (
        verdicts["affine k=N^0.9"] == "satisfied"
        and verdicts["redistribution k=N^0.4"] == "satisfied"
        and verdicts["redistribution k=N^0.7"] == "violated"
        and verdicts["affine lambda=1.2"] != "satisfied"
        and elapsed < 10.0
    )
    summary = ", ".join(f"{k}: {v}" for k, v in verdicts.items())
    assert criterion(12, ok, f"{summary}; {elapsed:.2f}s (< 10s)")


def test_13_power_law_slope(criterion):
    start = time.perf_counter()
    ks = [2**j for j in range(4, 13)]
    curve = exceedance_curve(_affine().at(10**6), ks, 10**6, seed=1313)
    slope = np.polyfit(np.log(ks), np.log([r.estimate for r in curve]), 1)[0]
    elapsed = time.perf_counter() - start
    ok = abs(slope + 0.5) <= 0.05 and elapsed < 300.0
    assert criterion(13, ok, f"fitted slope {slope:.4f} (-0.5 +/- 0.05); {elapsed:.2f}s (< 5 min)")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
