"""Benchmark the compiled kernels against the NumPy fallback.

Times the two hot operations on representative shapes: the scaled
exponential block reduction that dominates the pairwise Gram passes, and the
per-row log-sum-exp used for mixture densities.  Run as

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from sketchlab import _kernels_py

try:
    from sketchlab import _kernels
except ImportError:
    _kernels = None


def timeit(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_exp_reduce(impl, block, repeat):
    rng = np.random.default_rng(0)
    gram = np.ascontiguousarray(rng.standard_normal((block, block)) * 0.01)
    shift = np.full(block, -np.log(block))
    return timeit(lambda: impl.exp_block_reduce(gram, 1354.0, shift, shift), repeat)


def bench_row_logsumexp(impl, rows, cols, repeat):
    rng = np.random.default_rng(1)
    a = np.ascontiguousarray(rng.standard_normal((rows, cols)) * 5)
    return timeit(lambda: impl.row_logsumexp(a), repeat)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    backends = [("numpy", _kernels_py)]
    if _kernels is not None:
        backends.insert(0, ("cython", _kernels))
    else:
        print("extension not built; benchmarking the fallback only")

    cases = []
    for block in (512, 1024, 2048):
        cases.append((f"exp_block_reduce {block}x{block}", block * block,
                      lambda impl, b=block: bench_exp_reduce(impl, b, args.repeat)))
    for rows, cols in ((20_000, 64), (10_000, 1024)):
        cases.append((f"row_logsumexp {rows}x{cols}", rows * cols,
                      lambda impl, r=rows, c=cols: bench_row_logsumexp(
                          impl, r, c, args.repeat)))

    header = f"{'case':<28}" + "".join(f"{name:>14}" for name, _ in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for label, terms, runner in cases:
        times = [runner(impl) for _, impl in backends]
        row = f"{label:<28}"
        for t in times:
            row += f"{terms / t / 1e9:>11.2f} G/s"
        if len(times) == 2:
            row += f"{times[1] / times[0]:>9.2f}x"
        print(row)


if __name__ == "__main__":
    main()
