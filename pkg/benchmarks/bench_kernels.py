#!/usr/bin/env python3
"""Benchmark the compiled propagation kernel against the pure-numpy fallback.

Runs the same piecewise-constant propagation workload through both backends
and reports wall time per call plus the maximum state deviation.  The
compiled backend is loaded in-process; the pure backend is imported from the
fallback module directly, so no re-exec is needed.

Usage:
    python benchmarks/bench_kernels.py [--steps N] [--repeats R]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from flipflopsim._kernels import BACKEND, propagate_density, propagate_vector
from flipflopsim._kernels import _stepper_py


def _workload(steps: int, rng: np.random.Generator):
    """A stack of random Hermitian 4x4 Hamiltonians and step lengths."""
    a = rng.standard_normal((steps, 4, 4)) + 1j * rng.standard_normal((steps, 4, 4))
    h_stack = 0.5 * (a + np.conj(np.transpose(a, (0, 2, 1))))
    dts = rng.uniform(0.001, 0.01, size=steps)
    psi = np.zeros(4, dtype=complex)
    psi[2] = 1.0
    rho = np.outer(psi, np.conj(psi))
    return h_stack, dts, psi, rho


def _time(fn, *args, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=2000,
                        help="number of piecewise-constant steps per call")
    parser.add_argument("--repeats", type=int, default=5,
                        help="repeats per measurement (best time reported)")
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    h_stack, dts, psi, rho = _workload(args.steps, rng)

    print(f"active backend: {BACKEND}   steps per call: {args.steps}")
    if BACKEND == "python":
        print("compiled backend unavailable (or FLIPFLOPSIM_PURE=1); "
              "benchmarking the fallback only")

    rows = []
    for label, vec_fn, den_fn in (
        (BACKEND, propagate_vector, propagate_density),
        ("python", _stepper_py.propagate_vector, _stepper_py.propagate_density),
    ):
        t_vec = _time(vec_fn, psi, h_stack, dts, repeats=args.repeats)
        t_den = _time(den_fn, rho, h_stack, dts, repeats=args.repeats)
        rows.append((label, t_vec, t_den))
        if label == BACKEND and BACKEND == "python":
            break  # identical backends; one row is enough

    print(f"{'backend':<10} {'vector (ms)':>12} {'density (ms)':>13}")
    for label, t_vec, t_den in rows:
        print(f"{label:<10} {t_vec * 1e3:>12.3f} {t_den * 1e3:>13.3f}")

    if len(rows) == 2:
        dev_vec = np.abs(
            propagate_vector(psi, h_stack, dts)
            - _stepper_py.propagate_vector(psi, h_stack, dts)
        ).max()
        dev_den = np.abs(
            propagate_density(rho, h_stack, dts)
            - _stepper_py.propagate_density(rho, h_stack, dts)
        ).max()
        speedup = rows[1][1] / rows[0][1]
        print(f"vector speedup: {speedup:.2f}x   "
              f"max deviation: vector {dev_vec:.2e}, density {dev_den:.2e}")


if __name__ == "__main__":
    main()
