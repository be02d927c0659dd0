"""Time the compiled permanent kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--max-n 20] [--threads 4] [--repeat 3]

Prints one row per (kernel, n) with the best-of-repeat wall time of each
backend, their ratio and the relative difference of the two results.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from bethe_perm import _pykernels

try:
    from bethe_perm import _ckernels
except ImportError:
    _ckernels = None


def best_time(fn, repeat: int) -> tuple[float, float]:
    best, value = float("inf"), float("nan")
    for _ in range(repeat):
        t0 = time.perf_counter()
        value = fn()
        best = min(best, time.perf_counter() - t0)
    return best, value


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--max-n", type=int, default=20)
    p.add_argument("--max-brute-n", type=int, default=9)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)
    if _ckernels is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<10} {'n':>3} {'compiled s':>12} {'python s':>12} {'speedup':>9} {'rel diff':>10}")
    jobs = [("ryser", n) for n in range(4, args.max_n + 1, 2)]
    jobs += [("brute", n) for n in range(4, args.max_brute_n + 1)]
    for kernel, n in jobs:
        a = np.ascontiguousarray(rng.uniform(0.5, 1.0, size=(n, n)))
        if kernel == "ryser":
            c_fn = lambda: _ckernels.ryser(a, args.threads)  # noqa: E731
            py_fn = lambda: _pykernels.ryser(a, args.threads)  # noqa: E731
        else:
            c_fn = lambda: _ckernels.bruteforce(a)  # noqa: E731
            py_fn = lambda: _pykernels.bruteforce(a)  # noqa: E731
        tc, vc = best_time(c_fn, args.repeat)
        tp, vp = best_time(py_fn, args.repeat)
        print(f"{kernel:<10} {n:>3} {tc:>12.6f} {tp:>12.6f} {tp / tc:>9.1f} {abs(vc - vp) / abs(vc):>10.1e}")


if __name__ == "__main__":
    main()
