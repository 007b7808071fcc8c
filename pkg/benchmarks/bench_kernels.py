"""Compare the compiled cascade sampler with the pure-Python fallback.

Both kernels consume the same Philox stream, so the benchmark also checks that
their histograms agree bit for bit.

    python3 benchmarks/bench_kernels.py --replications 20000
"""

import argparse
import time

import numpy as np

from cascadelab import _fallback
from cascadelab.model import CapacityDistribution, LoadSurgeFunction, ModelFamily
from cascadelab.montecarlo import block_generator

try:
    from cascadelab._kernels import run_block as compiled_run_block
except ImportError:
    compiled_run_block = None


def _time(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - start)
    return best, out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--N", type=int, default=10**6, help="network size")
    parser.add_argument("--cap", type=int, default=4096, help="failure cap per cascade")
    parser.add_argument("--replications", type=int, default=20_000)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    model = ModelFamily(CapacityDistribution.uniform(), LoadSurgeFunction.affine(1.0)).at(args.N)
    p = np.ascontiguousarray(model.compositions(args.cap))

    def run(kernel):
        return lambda: kernel(p, args.N, args.replications, block_generator(args.seed, 0))

    t_py, h_py = _time(run(_fallback.run_block), args.repeat)
    print(f"N={args.N} cap={args.cap} replications={args.replications}")
    print(f"  python  {t_py:8.3f} s  {args.replications / t_py:12.0f} cascades/s")
    if compiled_run_block is None:
        print("  cython  not built")
        return 0
    t_cy, h_cy = _time(run(compiled_run_block), args.repeat)
    print(f"  cython  {t_cy:8.3f} s  {args.replications / t_cy:12.0f} cascades/s")
    print(f"  speed-up {t_py / t_cy:.1f}x, identical histograms: {np.array_equal(h_py, h_cy)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
