"""Exact blackout-size laws for the affine composition ``p_i = (θ + i - 1) / N``.

The finite-``N`` law is quasi-binomial; its ``N → ∞`` limit at fixed ``k`` is
the generalized Poisson (Borel–Tanner type) law. All mass computations are done
in log space because the quasi-binomial terms underflow for ``N`` in the
thousands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import special

from .numerics import log_binomial_array

__all__ = [
    "QuasiBinomialParams",
    "quasi_binomial_log_pmf",
    "quasi_binomial_log_pmf_all",
    "quasi_binomial_pmf",
    "quasi_binomial_exceedance",
    "quasi_binomial_exceedance_all",
    "generalized_poisson_log_pmf",
    "generalized_poisson_pmf",
]


@dataclass(frozen=True)
class QuasiBinomialParams:
    N: int
    theta: float

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N!r}")
        if not 0 < self.theta < self.N:
            raise ValueError(f"theta must lie in (0, N), got {self.theta!r}")


def _as_params(params, theta=None) -> QuasiBinomialParams:
    if isinstance(params, QuasiBinomialParams):
        return params
    return QuasiBinomialParams(int(params), float(theta))


def _regular_branch(N: int, theta: float, k: np.ndarray) -> np.ndarray:
    # C(N,k) (θ/N) ((θ+k)/N)^{k-1} (1 - (k+θ)/N)^{N-k}, for k <= N - θ
    kf = k.astype(np.float64)
    tail = 1.0 - (kf + theta) / N
    with np.errstate(divide="ignore", invalid="ignore"):
        log_tail = np.where(N - kf > 0, (N - kf) * np.log(np.maximum(tail, 0.0)), 0.0)
    return (
        log_binomial_array(N, k)
        + math.log(theta / N)
        + (kf - 1.0) * np.log((theta + kf) / N)
        + log_tail
    )


# largest tolerated ratio between the biggest term and the total-collapse mass
_CANCELLATION_LIMIT = 1e3


def _log_total_collapse_mp(N: int, theta: float, i: np.ndarray, digits_lost: float) -> float:
    dps = 30 + int(digits_lost)
    while True:
        with mpmath.workdps(dps):
            th = mpmath.mpf(theta)
            total = mpmath.fsum(
                mpmath.binomial(N, int(j))
                * th
                / N
                * ((th + int(j)) / N) ** (int(j) - 1)
                * (1 - (int(j) + th) / N) ** (N - int(j))
                for j in i
            )
            if 0 < total <= 1:
                return float(mpmath.log(total))
        if dps > 2000:
            raise ArithmeticError(f"total-collapse mass is non-positive for N={N}, theta={theta}")
        dps *= 2


def _log_total_collapse(N: int, theta: float) -> float:
    # k = N branch: signed sum over i in (N - θ, N]; 0^0 = 1 at i = N.
    i = np.arange(math.floor(N - theta) + 1, N + 1)
    base = 1.0 - (i + theta) / N
    power = N - i
    signs = np.where((base < 0) & (power % 2 == 1), -1.0, 1.0)
    zero = (base == 0) & (power > 0)
    with np.errstate(divide="ignore"):
        log_abs = np.where(power > 0, power * np.log(np.abs(np.where(base == 0, 1.0, base))), 0.0)
    terms = (
        log_binomial_array(N, i)
        + math.log(theta / N)
        + (i - 1.0) * np.log((theta + i) / N)
        + log_abs
    )
    terms = terms[~zero]
    signs = signs[~zero]
    value, sign = special.logsumexp(terms, b=signs, return_sign=True)
    biggest = float(np.max(terms))
    if sign <= 0 or value > 1e-12 or biggest - value > math.log(_CANCELLATION_LIMIT):
        # alternating terms cancel; the mass is at most 1, so the largest term
        # bounds the number of digits that can be lost
        return _log_total_collapse_mp(N, theta, i[~zero], max(biggest, 0.0) / math.log(10.0))
    return float(value)


def quasi_binomial_log_pmf(params, k, theta=None):
    """``ln P(A^N = k)`` for the affine composition.

    ``params`` is a :class:`QuasiBinomialParams` (or ``N`` with ``theta`` given
    separately). ``k`` may be a scalar or an integer array in ``0..N``.
    Returns ``-inf`` where the probability is zero.
    """
    p = _as_params(params, theta)
    N, th = p.N, p.theta
    scalar = np.ndim(k) == 0
    ks = np.atleast_1d(np.asarray(k))
    if not np.issubdtype(ks.dtype, np.integer):
        if np.any(ks != np.round(ks)):
            raise ValueError("k must be integer valued")
        ks = ks.astype(np.int64)
    if ks.size and (ks.min() < 0 or ks.max() > N):
        raise ValueError(f"k must lie in 0..{N}")
    out = np.full(ks.shape, -np.inf)
    regular = ks <= N - th
    if np.any(regular):
        out[regular] = _regular_branch(N, th, ks[regular])
    at_n = ks == N
    if np.any(at_n):
        out[at_n] = _log_total_collapse(N, th)
    return float(out[0]) if scalar else out


def quasi_binomial_log_pmf_all(N: int, theta: float) -> np.ndarray:
    """``ln P(A^N = k)`` for every ``k = 0..N``."""
    return quasi_binomial_log_pmf(QuasiBinomialParams(N, theta), np.arange(N + 1))


def quasi_binomial_pmf(params, k, theta=None):
    return np.exp(quasi_binomial_log_pmf(params, k, theta))


def _careful_sum(values: np.ndarray) -> float:
    # ascending magnitude, then exactly rounded accumulation
    return math.fsum(np.sort(values[values > 0]).tolist())


def quasi_binomial_exceedance(params, k: int, theta=None) -> float:
    """``P(A^N >= k) = Σ_{i=k}^{N} P(A^N = i)``."""
    p = _as_params(params, theta)
    k = int(k)
    if not 0 <= k <= p.N:
        raise ValueError(f"k must lie in 0..{p.N}")
    if k == 0:
        return 1.0
    masses = np.exp(quasi_binomial_log_pmf(p, np.arange(k, p.N + 1)))
    return min(1.0, _careful_sum(masses))


def quasi_binomial_exceedance_all(N: int, theta: float) -> np.ndarray:
    """Exceedance ``P(A^N >= k)`` for every ``k = 0..N`` (tail sums from the smallest mass up)."""
    pmf = np.exp(quasi_binomial_log_pmf_all(N, theta))
    tail = np.empty(N + 1)
    # reverse cumulative sum: the tail masses are the smallest, so accumulate from the top
    acc = 0.0
    comp = 0.0
    for idx in range(N, -1, -1):
        y = pmf[idx] - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
        tail[idx] = acc
    tail[0] = 1.0
    return np.minimum(tail, 1.0)


def generalized_poisson_log_pmf(theta: float, k):
    """``ln[θ (θ+k)^{k-1} e^{-(θ+k)} / k!]``."""
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta!r}")
    kf = np.asarray(k, dtype=np.float64)
    if np.any(kf < 0) or np.any(kf != np.round(kf)):
        raise ValueError("k must be a non-negative integer")
    out = math.log(theta) + (kf - 1.0) * np.log(theta + kf) - special.gammaln(kf + 1.0) - (theta + kf)
    return float(out) if np.ndim(k) == 0 else out


def generalized_poisson_pmf(theta: float, k):
    """Limit law of the affine blackout size at fixed ``k``."""
    return np.exp(generalized_poisson_log_pmf(theta, k))
