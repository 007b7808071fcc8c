"""Network model: capacity distributions, load-surge functions and their composition.

A cascade on ``N`` lines is fully described by the composition
``p_i = F(l^N(i))``: the probability that a line lacks the surplus capacity to
absorb the load surge present after the initial disturbance plus ``i - 1``
failures. Everything downstream (exact laws, perturbations, simulation) only
sees this sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "CapacityDistribution",
    "LoadSurgeFunction",
    "ModelFamily",
    "CascadeModel",
    "ThresholdSpec",
    "LimitEstimate",
    "composition",
    "perturbation",
    "limit_c",
    "suggest_theta",
]


@dataclass(frozen=True)
class CapacityDistribution:
    """Distribution ``F`` of the surplus capacities.

    Use the constructors :meth:`uniform`, :meth:`exponential` and :meth:`table`.
    """

    kind: str
    rate: float = 1.0
    knots_x: tuple[float, ...] = ()
    knots_f: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == "uniform":
            pass
        elif self.kind == "exponential":
            if not self.rate > 0:
                raise ValueError(f"exponential rate must be positive, got {self.rate!r}")
        elif self.kind == "table":
            xs, fs = np.asarray(self.knots_x, float), np.asarray(self.knots_f, float)
            if xs.size < 2 or xs.size != fs.size:
                raise ValueError("table CDF needs at least two (x, F(x)) knots")
            if xs[0] != 0.0 or fs[0] != 0.0:
                raise ValueError("table CDF must start at the knot (0, 0)")
            if np.any(np.diff(xs) <= 0):
                raise ValueError("table CDF knots must have strictly increasing x")
            if np.any(np.diff(fs) < 0) or fs[-1] > 1.0:
                raise ValueError("table CDF values must be non-decreasing within [0, 1]")
        else:
            raise ValueError(f"unknown capacity distribution {self.kind!r}")
        if not self.density_at_zero > 0:
            raise ValueError("capacity distribution must have a strictly positive density at zero")

    @classmethod
    def uniform(cls) -> "CapacityDistribution":
        return cls("uniform")

    @classmethod
    def exponential(cls, rate: float = 1.0) -> "CapacityDistribution":
        return cls("exponential", rate=float(rate))

    @classmethod
    def table(cls, knots: Sequence[tuple[float, float]]) -> "CapacityDistribution":
        xs, fs = zip(*knots)
        return cls("table", knots_x=tuple(map(float, xs)), knots_f=tuple(map(float, fs)))

    @property
    def density_at_zero(self) -> float:
        """``F'(0)``, the right derivative of the CDF at zero."""
        if self.kind == "uniform":
            return 1.0
        if self.kind == "exponential":
            return self.rate
        return (self.knots_f[1] - self.knots_f[0]) / (self.knots_x[1] - self.knots_x[0])

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind == "uniform":
            out = np.clip(x, 0.0, 1.0)
        elif self.kind == "exponential":
            out = -np.expm1(-self.rate * np.maximum(x, 0.0))
        else:
            out = np.interp(x, self.knots_x, self.knots_f, left=0.0, right=self.knots_f[-1])
        return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True)
class LoadSurgeFunction:
    """Deterministic load surge ``l^N(i)`` on each surviving line.

    ``affine``: ``(theta + (i - 1) * lam) / N``.
    ``redistribution``: ``a * i / (N - i)`` (equal redistribution of the failed load).
    ``table``: explicit values ``l(1), ..., l(n)``, independent of ``N``.
    """

    kind: str
    theta: float = 1.0
    lam: float = 1.0
    a: float = 1.0
    values: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == "affine":
            if not (self.theta > 0 and self.lam > 0):
                raise ValueError("affine surge requires theta > 0 and lambda > 0")
        elif self.kind == "redistribution":
            if not self.a > 0:
                raise ValueError("redistribution surge requires a > 0")
        elif self.kind == "table":
            v = np.asarray(self.values, float)
            if v.size == 0:
                raise ValueError("table surge needs at least one value")
            if np.any(np.diff(v) < 0):
                raise ValueError("table surge values must be non-decreasing")
            if v[0] < 0:
                raise ValueError("table surge values must be non-negative")
        else:
            raise ValueError(f"unknown load surge function {self.kind!r}")

    @classmethod
    def affine(cls, theta: float, lam: float = 1.0) -> "LoadSurgeFunction":
        return cls("affine", theta=float(theta), lam=float(lam))

    @classmethod
    def redistribution(cls, a: float = 1.0) -> "LoadSurgeFunction":
        return cls("redistribution", a=float(a))

    @classmethod
    def table(cls, values: Sequence[float]) -> "LoadSurgeFunction":
        return cls("table", values=tuple(map(float, values)))

    def __call__(self, N: int, i):
        """Evaluate ``l^N(i)``; ``i`` may be an integer array."""
        i = np.asarray(i, dtype=np.float64)
        if self.kind == "affine":
            return (self.theta + (i - 1.0) * self.lam) / N
        if self.kind == "redistribution":
            with np.errstate(divide="ignore"):
                return np.where(i < N, self.a * i / np.maximum(N - i, 1.0), np.inf)
        idx = i.astype(np.int64) - 1
        if np.any(idx >= len(self.values)):
            raise IndexError(f"table surge defined for i <= {len(self.values)} only")
        return np.asarray(self.values, float)[idx]

    def initial_slope(self) -> float:
        """Limit of ``N * (l^N(2) - l^N(1))``, the per-failure surge increment scaled by ``N``.

        For a table surge (a single network size) this is ``n * (l(2) - l(1))``.
        """
        if self.kind == "affine":
            return self.lam
        if self.kind == "redistribution":
            return self.a
        if len(self.values) < 2:
            raise ValueError("table surge needs two values to define a slope")
        return len(self.values) * (self.values[1] - self.values[0])


@dataclass(frozen=True)
class ModelFamily:
    """A capacity distribution and a load surge, not yet tied to a network size."""

    capacity: CapacityDistribution
    surge: LoadSurgeFunction

    def at(self, N: int) -> "CascadeModel":
        return CascadeModel(int(N), self.capacity, self.surge)


@dataclass(frozen=True)
class CascadeModel:
    N: int
    capacity: CapacityDistribution
    surge: LoadSurgeFunction

    def __post_init__(self):
        if self.N < 1:
            raise ValueError(f"network size must be positive, got {self.N!r}")
        if self.surge.kind == "table" and len(self.surge.values) < self.N:
            raise ValueError("table surge must provide at least N values")

    @property
    def family(self) -> ModelFamily:
        return ModelFamily(self.capacity, self.surge)

    def compositions(self, upto: int | None = None) -> np.ndarray:
        """Return ``p_1, ..., p_upto`` as a float array (``upto`` defaults to ``N``)."""
        upto = self.N if upto is None else int(upto)
        if not 0 <= upto <= self.N:
            raise IndexError(f"composition index must lie in 1..{self.N}")
        return composition(self, np.arange(1, upto + 1))


def composition(model: CascadeModel, i):
    """``p_i = F(l^N(i))`` clamped to ``[0, 1]``; accepts a scalar or integer array."""
    scalar = np.ndim(i) == 0
    idx = np.atleast_1d(np.asarray(i))
    if idx.size and (idx.min() < 1 or idx.max() > model.N):
        raise IndexError(f"composition index must lie in 1..{model.N}")
    loads = model.surge(model.N, idx)
    p = model.capacity.cdf(loads)
    if model.surge.kind == "redistribution":
        # the surge is undefined once every line is down; treat as total collapse
        p = np.where(idx >= model.N, 1.0, p)
    p = np.clip(p, 0.0, 1.0)
    return float(p[0]) if scalar else p


def perturbation(model: CascadeModel, theta: float, i):
    """``Δ(i, N) = N F(l^N(i)) - (theta + i - 1)``."""
    i_arr = np.asarray(i, dtype=np.float64)
    return model.N * composition(model, i) - (theta + i_arr - 1.0)


@dataclass(frozen=True)
class LimitEstimate:
    value: float
    converged: bool
    raw: tuple[float, ...]


def _neville_at_zero(h: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Polynomial extrapolation to ``h = 0``; entry ``j`` uses the first ``j + 1`` points."""
    n = len(h)
    table = [float(x) for x in v]
    diag = [table[0]]
    for m in range(1, n):
        for j in range(n - m):
            table[j] = (h[j + m] * table[j] - h[j] * table[j + 1]) / (h[j + m] - h[j])
        diag.append(table[0])
    return np.asarray(diag)


def limit_c(
    family: ModelFamily,
    i: int,
    n_grid: Sequence[int] = (10**3, 10**4, 10**5, 10**6),
    rtol: float = 1e-6,
    atol: float = 1e-9,
) -> LimitEstimate:
    """Estimate ``c_i = lim_N N F(l^N(i))`` by Richardson extrapolation in ``1/N``.

    The sequence is extrapolated from the largest sizes downwards; ``converged``
    is set when the two highest-order extrapolants agree to ``rtol``/``atol``.
    """
    grid = sorted(int(n) for n in n_grid)
    if len(grid) < 4:
        raise ValueError("limit_c needs at least four network sizes")
    if i < 1 or i >= grid[0]:
        raise ValueError("index must satisfy 1 <= i < min(n_grid)")
    raw = np.array([n * composition(family.at(n), i) for n in grid], dtype=np.float64)
    # largest N first so that low-order extrapolants use the most accurate values
    h = 1.0 / np.asarray(grid[::-1], dtype=np.float64)
    ext = _neville_at_zero(h, raw[::-1])
    value, previous = float(ext[-1]), float(ext[-2])
    converged = bool(np.isfinite(value) and abs(value - previous) <= atol + rtol * abs(value))
    return LimitEstimate(value, converged, tuple(raw.tolist()))


def suggest_theta(family: ModelFamily, n_grid: Sequence[int] = (10**3, 10**4, 10**5, 10**6)) -> float:
    """Suggested initial disturbance ``θ̂ = c_1``."""
    return limit_c(family, 1, n_grid).value


@dataclass(frozen=True)
class ThresholdSpec:
    """A threshold family ``k(N)``."""

    kind: str
    k: int = 1
    alpha: float = 0.5
    c: float = 1.0
    gamma: float = 0.5
    l: int = 1

    def __post_init__(self):
        if self.kind == "fixed":
            if self.k < 1:
                raise ValueError("fixed threshold must be >= 1")
        elif self.kind == "proportional":
            if not 0 < self.alpha < 1:
                raise ValueError("proportional threshold needs alpha in (0, 1)")
        elif self.kind == "power":
            if not (self.c > 0 and 0 < self.gamma < 1):
                raise ValueError("power threshold needs c > 0 and gamma in (0, 1)")
        elif self.kind == "complement":
            if self.l < 1:
                raise ValueError("complement threshold needs l >= 1")
        else:
            raise ValueError(f"unknown threshold kind {self.kind!r}")

    @classmethod
    def fixed(cls, k: int) -> "ThresholdSpec":
        return cls("fixed", k=int(k))

    @classmethod
    def proportional(cls, alpha: float) -> "ThresholdSpec":
        return cls("proportional", alpha=float(alpha))

    @classmethod
    def power(cls, c: float, gamma: float) -> "ThresholdSpec":
        return cls("power", c=float(c), gamma=float(gamma))

    @classmethod
    def complement(cls, l: int) -> "ThresholdSpec":
        return cls("complement", l=int(l))

    def __call__(self, N: int) -> int:
        if self.kind == "fixed":
            k = self.k
        elif self.kind == "proportional":
            k = math.floor(self.alpha * N)
        elif self.kind == "power":
            # guard against 10**6 ** 0.5 = 999.9999... style rounding
            k = math.floor(self.c * N**self.gamma + 1e-9)
        else:
            k = N - self.l
        if not 1 <= k <= N:
            raise ValueError(f"threshold k({N}) = {k} is outside 1..{N}")
        return k
