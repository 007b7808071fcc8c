"""Perturbed compositions ``N F(l^N(i)) = θ + i - 1 + Δ(i, N)``.

Provides the alternating β recursion over the limit sequence
``c_i = θ + i - 1 + Δ(i)``, the order-statistic probability it encodes, the
truncated exceedance constant ``V_M(θ, Δ)``, the ε-bracketed approximation of
its limit ``V(θ, Δ)``, and the fixed-``k`` exceedance limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath
import numpy as np

from .model import ModelFamily, ThresholdSpec, limit_c, perturbation
from .numerics import regularized_lower_gamma

__all__ = [
    "NumericalInconsistency",
    "ConditionsNotVerifiable",
    "LimitSequence",
    "BetaSequence",
    "PerturbationProfile",
    "VLimitResult",
    "beta_sequence",
    "sigma",
    "order_stat_prob",
    "v_m",
    "epsilon_for_target",
    "bracket_width",
    "find_m_eps",
    "v_limit",
    "fixed_k_exceedance_limit",
]

SQRT_2PI = math.sqrt(2.0 * math.pi)
_HIGH_PRECISION_FROM = 30
# largest tolerated ratio max|term| / |β_i| (about one digit) before the float path is abandoned
_CANCELLATION_LIMIT = 16.0
_BAND = 1e-9


class NumericalInconsistency(ArithmeticError):
    """A computed probability left ``[0, 1]`` by more than rounding can explain."""


class ConditionsNotVerifiable(RuntimeError):
    """No truncation index ``M_ε`` was found within the search cap."""


@dataclass(frozen=True)
class LimitSequence:
    """Non-negative, non-decreasing sequence ``c_1, ..., c_n``."""

    c: tuple[float, ...]

    def __post_init__(self):
        arr = np.asarray(self.c, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("limit sequence must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(arr)):
            raise ValueError("limit sequence must be finite")
        if arr[0] < 0:
            raise ValueError(f"limit sequence must be non-negative, got c_1={arr[0]!r}")
        if np.any(np.diff(arr) < 0):
            j = int(np.argmax(np.diff(arr) < 0)) + 1
            raise ValueError(f"limit sequence must be non-decreasing (c_{j} > c_{j + 1})")

    @classmethod
    def of(cls, c) -> "LimitSequence":
        if isinstance(c, LimitSequence):
            return c
        return cls(tuple(float(x) for x in c))

    @classmethod
    def from_perturbations(cls, theta: float, delta: Sequence[float]) -> "LimitSequence":
        return cls(tuple(theta + j + float(d) for j, d in enumerate(delta)))

    def __len__(self) -> int:
        return len(self.c)

    def __getitem__(self, i: int) -> float:
        """1-based access ``c_i``."""
        if not 1 <= i <= len(self.c):
            raise IndexError(f"c_{i} is outside 1..{len(self.c)}")
        return self.c[i - 1]


@dataclass(frozen=True)
class BetaSequence:
    beta: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.beta)

    def __getitem__(self, i: int) -> float:
        return self.beta[i]


def _beta_float(c: tuple[float, ...], n: int) -> list[float] | None:
    """Float recursion; ``None`` when cancellation would cost too many digits."""
    beta = [1.0]
    for i in range(1, n + 1):
        terms = []
        for j in range(1, i + 1):
            cj = c[i - j]
            power = cj**j / math.factorial(j)
            terms.append(power * beta[i - j] if j % 2 else -power * beta[i - j])
        value = math.fsum(terms)
        biggest = max(abs(t) for t in terms)
        if biggest > _CANCELLATION_LIMIT * abs(value):
            return None
        beta.append(value)
    return beta


def _beta_mp(c: tuple[float, ...], n: int) -> list[float]:
    with mpmath.workdps(30 + 2 * n):
        cs = [mpmath.mpf(x) for x in c]
        beta = [mpmath.mpf(1)]
        for i in range(1, n + 1):
            total = mpmath.mpf(0)
            for j in range(1, i + 1):
                total += (-1) ** (j + 1) * beta[i - j] * cs[i - j] ** j / mpmath.factorial(j)
            beta.append(total)
        return [float(b) for b in beta]


def beta_sequence(c, n: int | None = None) -> BetaSequence:
    """``β_0 = 1``, ``β_i = Σ_{j=1}^{i} (-1)^{j+1} / j! · β_{i-j} · c_{i-j+1}^j``.

    Terms alternate in sign, so each ``β_i`` is accumulated with exact rounding
    (``math.fsum``). Beyond index 30, or as soon as the cancellation in a single
    step exceeds about one digit, the whole recursion runs in extended precision.
    """
    seq = LimitSequence.of(c)
    n = len(seq) if n is None else int(n)
    if not 0 <= n <= len(seq):
        raise ValueError(f"n must lie in 0..{len(seq)}")
    beta = None if n > _HIGH_PRECISION_FROM else _beta_float(seq.c, n)
    if beta is None:
        beta = _beta_mp(seq.c, n)
    return BetaSequence(tuple(beta))


def sigma(c, M: int, y: float) -> int:
    """Largest ``i <= M`` with ``c_i < y``; zero when no such index exists."""
    seq = LimitSequence.of(c)
    if M > len(seq):
        raise ValueError(f"M={M} exceeds the sequence length {len(seq)}")
    # strict inequality; c is non-decreasing so the set is a prefix
    return int(np.count_nonzero(np.asarray(seq.c[:M]) < y))


def order_stat_prob(c, M: int, y: float, beta: BetaSequence | None = None) -> float:
    """``P(U_(i)^M <= c_i / y for all i <= M)`` for ``M`` sorted standard uniforms."""
    seq = LimitSequence.of(c)
    if M < 0 or M > len(seq):
        raise ValueError(f"M must lie in 0..{len(seq)}")
    if not y > 0:
        raise ValueError(f"y must be positive, got {y!r}")
    if M == 0:
        return 1.0
    s = sigma(seq, M, y)
    if s == 0:
        return 1.0
    if beta is None or len(beta) < s:
        beta = beta_sequence(seq, s - 1)
    head = math.lgamma(M + 1.0) - M * math.log(y)
    terms = []
    for j in range(1, s + 1):
        power = M - j + 1
        log_mag = head + power * math.log(y - seq[j]) - math.lgamma(power + 1.0)
        terms.append(beta[j - 1] * math.exp(log_mag))
    value = 1.0 - math.fsum(terms)
    if not -_BAND <= value <= 1.0 + _BAND:
        raise NumericalInconsistency(
            f"order-statistic probability {value!r} outside [0, 1] for M={M}, y={y}"
        )
    return min(1.0, max(0.0, value))


def v_m(theta: float, delta_limit: Sequence[float], M: int) -> float:
    """Exceedance constant ``V_M(θ, Δ)`` when ``Δ(i) = 0`` for all ``i >= M``.

    ``delta_limit`` holds ``Δ(1), ..., Δ(M-1)``; ``c_M = θ + M - 1``.
    """
    if not theta > 0:
        raise ValueError(f"theta must be positive, got {theta!r}")
    M = int(M)
    if M < 1:
        raise ValueError("M must be a positive integer")
    delta = [float(d) for d in delta_limit][: M - 1]
    if len(delta) != M - 1:
        raise ValueError(f"need {M - 1} perturbation values, got {len(delta)}")
    seq = LimitSequence.from_perturbations(theta, delta + [0.0])
    c_m = seq[M]
    beta = beta_sequence(seq, M - 1)

    lead = theta * regularized_lower_gamma(M, c_m)
    lead += math.exp(M * math.log(c_m) - c_m - math.lgamma(M))
    correction, boundary = [], []
    for j in range(1, M):
        gap = c_m - seq[j]
        if gap <= 0:
            continue
        shape = M - j + 1
        correction.append(beta[j - 1] * math.exp(-seq[j]) * delta[j - 1] * regularized_lower_gamma(shape, gap))
        boundary.append(beta[j - 1] * math.exp(shape * math.log(gap) - math.lgamma(shape) - c_m))
    value = 2.0 / SQRT_2PI * (lead + math.fsum(correction) - math.fsum(boundary))
    if not (math.isfinite(value) and value > 0):
        raise NumericalInconsistency(f"V_M evaluated to {value!r} (theta={theta}, M={M})")
    return value


DeltaProvider = Callable[[np.ndarray, int], np.ndarray]


@dataclass(frozen=True)
class PerturbationProfile:
    """Initial disturbance ``θ`` with finite-``N`` and limiting perturbations.

    ``delta_limit`` is either a sequence ``Δ(1), Δ(2), ...`` or a callable
    ``i -> Δ(i)``. ``delta_provider(i, N)`` returns ``Δ(i, N)`` for an integer
    array ``i``; when omitted, ``Δ(i, N) = Δ(i)`` is assumed.
    """

    theta: float
    delta_limit: Sequence[float] | Callable[[int], float]
    delta_provider: DeltaProvider | None = None
    check_length: int = 50

    def __post_init__(self):
        if not self.theta > 0:
            raise ValueError(f"theta must be positive, got {self.theta!r}")
        n = self.check_length
        if not callable(self.delta_limit):
            n = min(n, len(self.delta_limit))
        # validates non-negativity and monotonicity of the induced c_i
        LimitSequence.from_perturbations(self.theta, [self.limit(i) for i in range(1, n + 1)])

    @classmethod
    def from_family(
        cls,
        family: ModelFamily,
        theta: float | None = None,
        limit_grid: Sequence[int] = (10**3, 10**4, 10**5, 10**6),
        check_length: int = 20,
    ) -> "PerturbationProfile":
        """Profile of a concrete capacity/surge pair; ``θ`` defaults to ``c_1``."""
        if theta is None:
            theta = limit_c(family, 1, limit_grid).value
        cache: dict[int, float] = {}

        def limit(i: int) -> float:
            if i not in cache:
                cache[i] = limit_c(family, i, limit_grid).value - (theta + i - 1)
            return cache[i]

        def provider(i, N):
            return perturbation(family.at(N), theta, i)

        return cls(float(theta), limit, provider, check_length)

    def limit(self, i: int) -> float:
        if callable(self.delta_limit):
            return float(self.delta_limit(i))
        if i > len(self.delta_limit):
            return 0.0
        return float(self.delta_limit[i - 1])

    def delta(self, i, N: int) -> np.ndarray:
        i = np.asarray(i, dtype=np.int64)
        if self.delta_provider is None:
            return np.array([self.limit(int(j)) for j in np.atleast_1d(i)])
        out = self.delta_provider(i, N)
        return np.broadcast_to(np.asarray(out, dtype=np.float64), i.shape).copy()

    def limit_sequence(self, n: int) -> LimitSequence:
        return LimitSequence.from_perturbations(self.theta, [self.limit(i) for i in range(1, n + 1)])

    def check_bounds(self, N: int, upto: int) -> bool:
        """Property (A): ``-(θ+i-1) <= Δ(i, N) <= N - (θ+i-1)`` for ``i <= upto``."""
        i = np.arange(1, upto + 1)
        d = self.delta(i, N)
        base = self.theta + i - 1.0
        return bool(np.all(d >= -base - 1e-9) and np.all(d <= N - base + 1e-9))


def bracket_width(eps: float) -> float:
    """``8ε(1+ε)/√(2π)``: the error guarantee attached to ``V_{M_ε}``."""
    return 8.0 * eps * (1.0 + eps) / SQRT_2PI


def epsilon_for_target(delta_target: float) -> float:
    """Largest ``ε`` with ``8ε(1+ε)/√(2π) <= δ``."""
    if not delta_target > 0:
        raise ValueError("target error must be positive")
    eps = (-1.0 + math.sqrt(1.0 + delta_target * SQRT_2PI / 2.0)) / 2.0
    while bracket_width(eps) > delta_target:
        eps = math.nextafter(eps, 0.0)
    return eps


def find_m_eps(
    profile: PerturbationProfile,
    k_spec: ThresholdSpec,
    eps: float,
    probe_grid: Sequence[int] = (10**3, 10**4, 10**5, 10**6),
    m_cap: int = 200,
) -> tuple[int, int]:
    """Search for ``(M_ε, N_ε)`` on the probe ladder.

    ``N_ε`` is the smallest probe size from which ``|Δ(i, N)| < ε`` holds for
    ``M_ε <= i <= k(N)`` at every larger probe; ``M_ε`` is the smallest index
    that works for all of those sizes.
    """
    grid = sorted(int(n) for n in probe_grid)
    if not grid:
        raise ValueError("probe grid is empty")
    per_size = []
    for N in grid:
        k = k_spec(N)
        d = np.abs(profile.delta(np.arange(1, k + 1), N))
        # suffix maxima: tail_max[m-1] = max_{m <= i <= k} |Δ(i, N)|
        tail_max = np.maximum.accumulate(d[::-1])[::-1]
        ok = np.nonzero(tail_max < eps)[0]
        per_size.append(int(ok[0]) + 1 if ok.size else None)
    if per_size[-1] is None:
        raise ConditionsNotVerifiable(
            f"|Δ(k(N), N)| >= ε={eps:.3g} at the largest probe N={grid[-1]}: smallness fails at the threshold"
        )
    start = len(grid) - 1
    while start > 0 and per_size[start - 1] is not None:
        start -= 1
    m_eps = max(per_size[start:])
    if m_eps > m_cap:
        raise ConditionsNotVerifiable(f"M_ε={m_eps} exceeds the search cap {m_cap}")
    return m_eps, grid[start]


@dataclass(frozen=True)
class VLimitResult:
    value: float
    m_eps: int
    eps: float
    bound: float
    n_eps: int | None = None

    @property
    def interval(self) -> tuple[float, float]:
        return self.value - self.bound, self.value + self.bound


def v_limit(
    profile: PerturbationProfile,
    k_spec: ThresholdSpec | None = None,
    delta_target: float = 0.01,
    probe_grid: Sequence[int] = (10**3, 10**4, 10**5, 10**6),
    m_cap: int = 200,
    force: bool = False,
) -> VLimitResult:
    """Approximate ``V(θ, Δ)`` to within ``delta_target``.

    Picks ``ε`` from the target, locates ``(M_ε, N_ε)`` on the probe ladder and returns
    ``V_{M_ε}(θ, Δ)`` with ``|V - V_{M_ε}| <= 8ε(1+ε)/√(2π) <= delta_target``.
    Unless ``force`` is set, the elementary bounds on ``Δ(i, N)`` are checked on
    the ladder first.
    """
    if k_spec is None:
        k_spec = ThresholdSpec.power(1.0, 0.5)
    if not force:
        for N in probe_grid:
            if not profile.check_bounds(int(N), k_spec(int(N))):
                raise ConditionsNotVerifiable(f"perturbation bounds violated at N={N}")
    eps = epsilon_for_target(delta_target)
    m_eps, n_eps = find_m_eps(profile, k_spec, eps, probe_grid, m_cap)
    deltas = [profile.limit(i) for i in range(1, m_eps)]
    value = v_m(profile.theta, deltas, m_eps)
    return VLimitResult(value, m_eps, eps, bracket_width(eps), n_eps)


def fixed_k_exceedance_limit(c, k: int, index_exponent: bool = False) -> float:
    """``lim_N P(A^N >= k) = 1 - Σ_{j=1}^{k} β_{j-1} e^{-c_j}`` for fixed ``k``.

    ``index_exponent=True`` uses ``e^{-j}`` in place of ``e^{-c_j}``; the two agree
    only when ``c_j = j``.
    """
    seq = LimitSequence.of(c)
    if not 1 <= k <= len(seq):
        raise ValueError(f"k must lie in 1..{len(seq)}")
    if not seq[1] > 0:
        raise ValueError("fixed-k limit requires c_1 > 0")
    beta = beta_sequence(seq, k - 1)
    exps = [float(j) for j in range(1, k + 1)] if index_exponent else [seq[j] for j in range(1, k + 1)]
    value = 1.0 - math.fsum(beta[j - 1] * math.exp(-exps[j - 1]) for j in range(1, k + 1))
    if not -_BAND <= value <= 1.0 + _BAND:
        raise NumericalInconsistency(f"fixed-k limit {value!r} outside [0, 1]; check the c sequence")
    return min(1.0, max(0.0, value))
