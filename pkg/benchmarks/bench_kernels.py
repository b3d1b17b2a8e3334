#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Runs both backends on identical inputs, checks the outputs are
bit-identical, and reports throughput.  Usage:

    python benchmarks/bench_kernels.py [--reps 20000] [--n 1825] [--draws 2000000]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from classcount import _kernels_py

try:
    from classcount import _kernels_cy
except ImportError:
    _kernels_cy = None


def _time(fn, *args, repeat: int = 3) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_ks(reps: int, n: int) -> None:
    rng = np.random.default_rng(0)
    e = rng.standard_exponential((reps, n + 1))
    t_py = _time(_kernels_py.ks_statistics, e)
    line = f"ks_statistics      reps={reps:<8d} n={n:<6d} numpy {t_py*1e3:8.1f} ms"
    if _kernels_cy is not None:
        t_cy = _time(_kernels_cy.ks_statistics, e)
        same = np.array_equal(
            _kernels_py.ks_statistics(e), _kernels_cy.ks_statistics(e)
        )
        line += f"   compiled {t_cy*1e3:8.1f} ms   speedup {t_py/t_cy:5.2f}x   identical={same}"
    print(line)


def bench_sampler(draws: int) -> None:
    rng = np.random.default_rng(1)
    atoms = np.array([0.24, 1.97, 6.13, 10.81, 23.93])
    weights = np.array([0.833, 0.156, 0.003, 0.007, 0.001])
    weights /= weights.sum()
    weight_cdf = np.cumsum(weights)
    weight_cdf[-1] = 1.0
    tables = []
    offsets = [0]
    for lam in atoms:
        xs = np.arange(1, int(lam + 12 * np.sqrt(lam) + 45) + 1)
        pmf = np.exp(xs * np.log(lam) - np.cumsum(np.log(np.maximum(xs, 1))) - (lam + np.log1p(-np.exp(-lam))))
        cdf = np.cumsum(pmf)
        tables.append(cdf)
        offsets.append(offsets[-1] + cdf.size)
    count_cdf = np.concatenate(tables)
    offsets = np.array(offsets, dtype=np.int64)
    u_atom = rng.random(draws)
    u_count = rng.random(draws)

    args = (u_atom, u_count, weight_cdf, count_cdf, offsets)
    t_py = _time(_kernels_py.zt_mixture_counts, *args)
    line = f"zt_mixture_counts  draws={draws:<10d}      numpy {t_py*1e3:8.1f} ms"
    if _kernels_cy is not None:
        t_cy = _time(_kernels_cy.zt_mixture_counts, *args)
        same = np.array_equal(
            _kernels_py.zt_mixture_counts(*args), _kernels_cy.zt_mixture_counts(*args)
        )
        line += f"   compiled {t_cy*1e3:8.1f} ms   speedup {t_py/t_cy:5.2f}x   identical={same}"
    print(line)


def bench_em_refit(sweeps: int) -> None:
    import math

    xs = np.array([1.0, 2.0, 3.0, 4.0, 5.0, 7.0, 10.0])
    nx = np.array([1434.0, 253.0, 71.0, 33.0, 11.0, 4.0, 3.0])
    lgx = np.array([math.lgamma(x + 1.0) for x in xs])
    atoms = np.array([0.3, 1.5, 4.0, 9.0])
    weights = np.array([0.7, 0.2, 0.07, 0.03])
    args = (xs, nx, lgx, atoms, weights, sweeps, 0.0, 1e-12, 1e-6)
    t_py = _time(_kernels_py.em_refit, *args, repeat=1)
    line = f"em_refit           sweeps={sweeps:<9d}      numpy {t_py*1e3:8.1f} ms"
    if _kernels_cy is not None:
        t_cy = _time(_kernels_cy.em_refit, *args)
        a = _kernels_py.em_refit(*args)
        b = _kernels_cy.em_refit(*args)
        close = a[0].size == b[0].size and np.allclose(a[0], b[0], rtol=1e-9)
        line += f"   compiled {t_cy*1e3:8.1f} ms   speedup {t_py/t_cy:5.2f}x   agree(1e-9)={close}"
    print(line)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--reps", type=int, default=20_000)
    parser.add_argument("--n", type=int, default=1825)
    parser.add_argument("--draws", type=int, default=2_000_000)
    parser.add_argument("--sweeps", type=int, default=4000)
    args = parser.parse_args()
    if _kernels_cy is None:
        print("compiled backend unavailable; timing the NumPy fallback only")
    bench_ks(args.reps, args.n)
    bench_sampler(args.draws)
    bench_em_refit(args.sweeps)


if __name__ == "__main__":
    main()
