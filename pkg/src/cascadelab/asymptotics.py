"""Closed-form large-``N`` approximations for the affine composition."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .exact import QuasiBinomialParams, quasi_binomial_log_pmf

__all__ = [
    "SQRT_2PI",
    "branching_pmf_approx",
    "affine_pmf_approx",
    "affine_exceedance_approx",
    "near_total_pmf_approx",
    "ProbeBracket",
    "pmf_constant_probe",
    "pmf_constant_bounds",
]

SQRT_2PI = math.sqrt(2.0 * math.pi)


def _check_k(N: int, k: int) -> None:
    if not 1 <= k < N:
        raise ValueError(f"need 1 <= k < N, got k={k!r}, N={N!r}")


def branching_pmf_approx(theta: float, k: float) -> float:
    """Critical branching-process approximation ``θ/√(2π) k^{-3/2}``."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k!r}")
    return theta / SQRT_2PI * k**-1.5


def affine_pmf_approx(N: int, theta: float, k: float) -> float:
    """``θ/√(2π) (1 - k/N)^{-1/2} k^{-3/2}``, valid for ``k`` growing with ``N``."""
    _check_k(N, k)
    return theta / SQRT_2PI * k**-1.5 / math.sqrt(1.0 - k / N)


def affine_exceedance_approx(N: int, theta: float, k: float) -> float:
    """``P(A^N >= k) ≈ 2θ/√(2π) √((N - k) / (kN))``."""
    _check_k(N, k)
    return 2.0 * theta / SQRT_2PI * math.sqrt((N - k) / (k * N))


def near_total_pmf_approx(N: int, theta: float, l: int) -> float:
    """``P(A^N = N - l) ≈ θ (l-θ)^l e^{-(l-θ)} / (l! N)`` for fixed ``l > θ``."""
    if l != int(l) or l <= theta:
        raise ValueError(f"l must be an integer exceeding theta, got l={l!r}, theta={theta!r}")
    l = int(l)
    log_val = math.log(theta) + l * math.log(l - theta) - (l - theta) - math.lgamma(l + 1.0)
    return math.exp(log_val) / N


@dataclass(frozen=True)
class ProbeBracket:
    lower: float
    value: float
    upper: float


def pmf_constant_bounds(N: int, theta: float, k: int) -> tuple[float, float]:
    """Stirling-based lower and upper bounds on ``k^{3/2} √(1 - k/N) P(A^N = k)``.

    Both share the factor ``θ/√(2π) (1 + θ/k)^{k-1} (1 - θ/(N-k))^{N-k}``; the
    lower bound carries ``e^{-1/(12k) - 1/(12(N-k))}`` and the upper ``e^{1/(12N)}``.
    """
    _check_k(N, k)
    if k > N - theta:
        raise ValueError("bounds require k <= N - theta")
    core = (
        math.log(theta)
        - math.log(SQRT_2PI)
        + (k - 1) * math.log1p(theta / k)
        + (N - k) * math.log1p(-theta / (N - k))
    )
    lower = math.exp(core - 1.0 / (12 * k) - 1.0 / (12 * (N - k)))
    upper = math.exp(core + 1.0 / (12 * N))
    return lower, upper


def pmf_constant_probe(N: int, theta: float, k: int, bracket: bool = False):
    """``k^{3/2} √(1 - k/N) P(A^N = k)``, which tends to ``θ/√(2π)``.

    With ``bracket=True`` a :class:`ProbeBracket` carrying the Stirling bounds is returned.
    """
    _check_k(N, k)
    log_pmf = quasi_binomial_log_pmf(QuasiBinomialParams(N, theta), k)
    value = math.exp(1.5 * math.log(k) + 0.5 * math.log1p(-k / N) + log_pmf)
    if not bracket:
        return value
    lower, upper = pmf_constant_bounds(N, theta, k)
    return ProbeBracket(lower, value, upper)
