"""Which thresholds ``k(N)`` keep the power-law tail?

A composition that is linear with slope ``1/N`` up to the threshold gives the
``k^{-1/2}`` exceedance tail. Two checks are offered: the Taylor slope
``N (l^N(2) - l^N(1)) · F'(0)`` at the origin, and a direct evaluation of the
perturbations ``Δ(i, N)`` along ``i <= k(N)`` on a ladder of network sizes.
Neither can prove an asymptotic statement; the verdict is evidence on the
recorded probe grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import ModelFamily, ThresholdSpec, limit_c, perturbation

__all__ = ["RegimeReport", "criticality_check", "classify_threshold", "DEFAULT_PROBE_GRID"]

SATISFIED, VIOLATED, INCONCLUSIVE = "satisfied", "violated", "inconclusive"
DEFAULT_PROBE_GRID = (10**3, 10**4, 10**5, 10**6, 10**7, 10**8)
_ROUNDING_ULPS = 16


@dataclass(frozen=True)
class RegimeReport:
    criticality_product: float
    verdict: str
    probe_grid: tuple[int, ...]
    thresholds: tuple[int, ...]
    evidence: tuple[float, ...]
    theta_used: float
    tolerance: float

    def rows(self) -> list[dict]:
        return [
            {
                "N": n,
                "k": k,
                "max_abs_delta": s,
                "verdict": self.verdict,
                "criticality": self.criticality_product,
                "theta": self.theta_used,
            }
            for n, k, s in zip(self.probe_grid, self.thresholds, self.evidence)
        ]


def criticality_check(family: ModelFamily, theta_guess: float | None = None) -> float:
    """Scaled initial surge slope times ``F'(0)``; the critical window is at 1.

    ``theta_guess`` is accepted for interface symmetry; the slope does not
    depend on the initial disturbance.
    """
    return family.surge.initial_slope() * family.capacity.density_at_zero


def _max_abs_delta(family: ModelFamily, theta: float, N: int, k: int) -> float:
    lo = max(1, math.ceil(math.sqrt(k)))
    i = np.arange(lo, k + 1)
    d = np.abs(perturbation(family.at(N), theta, i))
    # N * F(l) carries rounding of a few ulps of θ + i - 1; that is not a perturbation
    d[d <= _ROUNDING_ULPS * np.finfo(float).eps * (theta + i - 1.0)] = 0.0
    return float(np.max(d))


def classify_threshold(
    family: ModelFamily,
    k_spec: ThresholdSpec,
    theta: float | None = None,
    probe_grid: Sequence[int] = DEFAULT_PROBE_GRID,
    tolerance: float = 0.05,
    slope_tolerance: float = 0.05,
) -> RegimeReport:
    """Evidence on whether ``Δ(i, N) → 0`` uniformly over ``√k(N) <= i <= k(N)``.

    ``s(N) = max |Δ(i, N)|`` over that window is evaluated at every probe size.
    The verdict is *satisfied* when ``s`` is non-increasing along the grid and
    below ``tolerance`` at the largest size, *violated* when ``s`` strictly
    increases across the top half of the grid, and *inconclusive* otherwise.
    A slope deviating from criticality by more than ``slope_tolerance`` can
    never be reported as satisfied. Small fixed ``i`` are excluded because
    their limits ``Δ(i)`` may be non-zero.
    """
    grid = tuple(sorted(int(n) for n in probe_grid))
    if len(grid) < 4:
        raise ValueError("probe grid needs at least four sizes")
    if theta is None:
        theta = limit_c(family, 1, grid[:4]).value
    ks = tuple(k_spec(n) for n in grid)
    evidence = tuple(_max_abs_delta(family, theta, n, k) for n, k in zip(grid, ks))
    crit = criticality_check(family, theta)

    s = np.asarray(evidence)
    scale = np.maximum(np.abs(s[:-1]), 1.0)
    non_increasing = bool(np.all(s[1:] <= s[:-1] + 1e-12 * scale))
    top = s[len(s) // 2 :]
    increasing_top = bool(np.all(np.diff(top) > 0))
    if non_increasing and s[-1] < tolerance:
        verdict = SATISFIED
    elif increasing_top:
        verdict = VIOLATED
    else:
        verdict = INCONCLUSIVE
    if verdict == SATISFIED and abs(crit - 1.0) > slope_tolerance:
        verdict = INCONCLUSIVE
    return RegimeReport(crit, verdict, grid, ks, evidence, float(theta), tolerance)
