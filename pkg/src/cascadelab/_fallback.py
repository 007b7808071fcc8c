"""Pure-Python cascade sampler, used when the compiled kernel is unavailable.

Consumes the generator exactly like ``_kernels.run_block`` and therefore
returns identical histograms, only slower.
"""

from __future__ import annotations

import math

import numpy as np


def run_block(p: np.ndarray, n_lines: int, reps: int, rng: np.random.Generator, chunk: int = 4096) -> np.ndarray:
    cap = len(p)
    counts = np.zeros(cap + 1, dtype=np.int64)
    if cap == 0:
        counts[0] = reps
        return counts
    thresholds = [float(x) for x in p]
    log, expm1 = math.log, math.expm1
    rep, step, log_gap = 0, 1, 0.0
    while rep < reps:
        for x in rng.random(chunk).tolist():
            log_gap += log(1.0 - x) / (n_lines - step + 1.0)
            if -expm1(log_gap) > thresholds[step - 1]:
                counts[step - 1] += 1
            elif step == cap:
                counts[cap] += 1
            else:
                step += 1
                continue
            rep += 1
            step, log_gap = 1, 0.0
            if rep == reps:
                break
    return counts
