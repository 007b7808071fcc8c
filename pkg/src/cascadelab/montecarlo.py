"""Monte Carlo simulation of the cascade stopping time.

Order statistics are generated smallest first,
``1 - U_(i) = (1 - U_(i-1)) · V_i^{1/(N-i+1)}`` with ``V_i`` standard uniform,
so a cascade that stops after ``A`` failures costs ``A + 1`` draws instead of a
full sort of ``N`` uniforms. The recursion is carried in ``log(1 - U_(i))``.

Replications are split into fixed-size blocks. Block ``b`` draws from a Philox
(counter-based) stream keyed by ``(seed, b)``, so the histogram depends only on
``(seed, replications)`` and never on the number of workers or on scheduling.
"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .model import CascadeModel

log = logging.getLogger(__name__)

if os.environ.get("CASCADELAB_PURE_PYTHON"):
    from ._fallback import run_block

    KERNEL = "python"
else:
    try:
        from ._kernels import run_block

        KERNEL = "cython"
    except ImportError:  # extension not built
        from ._fallback import run_block

        KERNEL = "python"

__all__ = [
    "BLOCK_SIZE",
    "KERNEL",
    "CascadeOutcome",
    "EstimatorResult",
    "block_generator",
    "sample_cascade",
    "sample_cascade_full",
    "sequential_order_statistics",
    "simulate_histogram",
    "estimate_exceedance",
    "exceedance_curve",
    "empirical_pmf",
    "binomial_interval",
]

BLOCK_SIZE = 10_000
_Z95 = stats.norm.ppf(0.975)


@dataclass(frozen=True)
class CascadeOutcome:
    failed_count: int
    stopped_early: bool


@dataclass(frozen=True)
class EstimatorResult:
    estimate: float
    std_error: float
    ci95: tuple[float, float]
    replications: int
    successes: int
    seed: int
    wall_time: float


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Counter-based substream for replication block ``block``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def sequential_order_statistics(n_lines: int, v: np.ndarray) -> np.ndarray:
    """Smallest-first uniform order statistics ``U_(1..m)`` driven by uniforms ``v``.

    ``v`` may be 2-d, one replication per row.
    """
    v = np.asarray(v, dtype=np.float64)
    steps = np.arange(1, v.shape[-1] + 1, dtype=np.float64)
    log_gap = np.cumsum(np.log(v) / (n_lines - steps + 1.0), axis=-1)
    return -np.expm1(log_gap)


def sample_cascade(model: CascadeModel, cap: int, rng: np.random.Generator) -> CascadeOutcome:
    """One cascade, stopped at the first survivor or after ``cap`` failures."""
    if not 1 <= cap <= model.N:
        raise ValueError(f"cap must lie in 1..{model.N}")
    p = model.compositions(cap)
    log_gap = 0.0
    for step in range(1, cap + 1):
        log_gap += math.log(1.0 - rng.random()) / (model.N - step + 1.0)
        if -math.expm1(log_gap) > p[step - 1]:
            return CascadeOutcome(step - 1, True)
    return CascadeOutcome(cap, cap < model.N)


def sample_cascade_full(model: CascadeModel, rng: np.random.Generator) -> int:
    """Reference sampler: sort ``N`` uniforms and scan the whole sequence."""
    u = np.sort(rng.random(model.N))
    ok = u <= model.compositions()
    return model.N if ok.all() else int(np.argmin(ok))


def _blocks(replications: int) -> list[tuple[int, int]]:
    n_blocks = -(-replications // BLOCK_SIZE)
    return [(b, min(BLOCK_SIZE, replications - b * BLOCK_SIZE)) for b in range(n_blocks)]


def simulate_histogram(model: CascadeModel, cap: int, replications: int, seed: int, workers: int = 1) -> np.ndarray:
    """Histogram of ``min(A, cap)`` over ``replications`` cascades (length ``cap + 1``)."""
    if not 0 <= cap <= model.N:
        raise ValueError(f"cap must lie in 0..{model.N}")
    if replications < 0:
        raise ValueError("replications must be non-negative")
    p = np.ascontiguousarray(model.compositions(cap), dtype=np.float64)

    def one(block):
        b, reps = block
        return run_block(p, model.N, reps, block_generator(seed, b))

    blocks = _blocks(replications)
    if workers > 1 and len(blocks) > 1:
        # blocks are assigned round-robin by the executor; the sum is order independent
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, blocks))
    else:
        parts = [one(b) for b in blocks]
    total = np.zeros(cap + 1, dtype=np.int64)
    for part in parts:
        total += part
    return total


def binomial_interval(successes: int, n: int) -> tuple[float, float]:
    """95% interval: normal approximation, Clopper–Pearson when either count is below 20."""
    p_hat = successes / n
    if successes < 20 or n - successes < 20:
        lo = 0.0 if successes == 0 else float(stats.beta.ppf(0.025, successes, n - successes + 1))
        hi = 1.0 if successes == n else float(stats.beta.ppf(0.975, successes + 1, n - successes))
    else:
        half = float(_Z95) * math.sqrt(p_hat * (1.0 - p_hat) / n)
        lo, hi = max(0.0, p_hat - half), min(1.0, p_hat + half)
    return float(min(lo, p_hat)), float(max(hi, p_hat))


def _result(successes: int, replications: int, seed: int, wall: float) -> EstimatorResult:
    p_hat = successes / replications
    se = math.sqrt(p_hat * (1.0 - p_hat) / replications)
    return EstimatorResult(p_hat, se, binomial_interval(successes, replications), replications, successes, seed, wall)


def estimate_exceedance(
    model: CascadeModel, k: int, replications: int, seed: int, workers: int = 1
) -> EstimatorResult:
    """Estimate ``P(A^N >= k)`` as the fraction of simulated cascades reaching ``k`` failures."""
    if not 0 <= k <= model.N:
        raise ValueError(f"k must lie in 0..{model.N}")
    if replications < 1:
        raise ValueError("replications must be positive")
    start = time.perf_counter()
    if k == 0:
        return EstimatorResult(1.0, 0.0, (1.0, 1.0), replications, replications, seed, 0.0)
    counts = simulate_histogram(model, k, replications, seed, workers)
    return _result(int(counts[k]), replications, seed, time.perf_counter() - start)


def exceedance_curve(
    model: CascadeModel, ks: Sequence[int], replications: int, seed: int, workers: int = 1
) -> list[EstimatorResult]:
    """Estimates of ``P(A^N >= k)`` for several thresholds from one shared simulation."""
    ks = [int(k) for k in ks]
    if any(not 0 <= k <= model.N for k in ks):
        raise ValueError(f"thresholds must lie in 0..{model.N}")
    start = time.perf_counter()
    cap = max(ks)
    counts = simulate_histogram(model, cap, replications, seed, workers)
    tail = np.cumsum(counts[::-1])[::-1]
    wall = time.perf_counter() - start
    log.debug("simulated %d cascades (cap %d) in %.2fs with the %s kernel", replications, cap, wall, KERNEL)
    return [_result(int(tail[k]), replications, seed, wall) for k in ks]


def empirical_pmf(model: CascadeModel, k_max: int, replications: int, seed: int, workers: int = 1) -> np.ndarray:
    """Counts of ``A = 0..k_max`` followed by one overflow bin for ``A > k_max``."""
    if k_max < 0:
        raise ValueError("k_max must be non-negative")
    cap = min(k_max + 1, model.N)
    counts = simulate_histogram(model, cap, replications, seed, workers)
    bins = np.zeros(k_max + 2, dtype=np.int64)
    upto = min(k_max, cap) + 1
    bins[:upto] = counts[:upto]
    bins[-1] = counts[upto:].sum()
    return bins
