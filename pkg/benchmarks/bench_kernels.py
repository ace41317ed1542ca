"""Time the numba kernels against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 2000] [--no-phase1]

Each kernel is called once before timing so JIT compilation is excluded.
The Phase I comparison runs the identification loop in two subprocesses,
one with ``KOOPBOTS_NO_NUMBA=1``, and reports wall time including imports.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from koopbots import kernels


def _time(fn, repeat):
    fn()
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn()
    return (time.perf_counter() - t0) / repeat


def kernel_cases(rng):
    X = np.concatenate([rng.uniform(-5, 5, 6), rng.normal(0, 1, 6)])
    targets = rng.uniform(-5, 5, (3, 2))
    d1, d2, u = rng.normal(size=12), rng.normal(size=18), rng.normal(size=6)
    cases = {
        "distances": lambda k: (lambda: k.distances(X, 11.0, 2.0, 0.0, 0.0, 2.0)),
        "utility": lambda k: (lambda: k.utility(X, targets, 11.0, 2.0, 0.0, 0.0, 2.0)),
        "bilinear": lambda k: (lambda out=np.empty(901): k.bilinear(d1, d2, u, out)),
    }
    for q in (36, 109, 901):
        zeta = rng.normal(size=q)
        y = rng.normal(size=18)

        def make(k, q=q, zeta=zeta, y=y):
            theta, P = np.zeros((q, 18)), 100.0 * np.eye(q)
            return lambda: k.rls(theta, P, zeta, y, 1e-4)

        cases[f"rls q={q}"] = make
    return cases


def phase1_seconds(variant, no_numba):
    env = dict(os.environ, KOOPBOTS_NO_NUMBA="1" if no_numba else "0")
    code = (
        "import time; t=time.perf_counter();"
        "from koopbots.config import RunConfig; from koopbots.harness import run_identification;"
        f"run_identification(RunConfig(variant={variant!r}));"
        "print(time.perf_counter()-t)"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.split()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=2000)
    ap.add_argument("--no-phase1", action="store_true")
    args = ap.parse_args(argv)
    if kernels.NUMBA_KERNELS is None:
        sys.exit("numba is not importable; nothing to compare")

    print(f"{'kernel':14s} {'numpy us':>10s} {'numba us':>10s} {'speedup':>8s}")
    for name, make in kernel_cases(np.random.default_rng(0)).items():
        rep = max(20, args.repeat // 20) if "901" in name else args.repeat
        a = _time(make(kernels.NUMPY_KERNELS), rep) * 1e6
        b = _time(make(kernels.NUMBA_KERNELS), rep) * 1e6
        print(f"{name:14s} {a:10.2f} {b:10.2f} {a / b:8.2f}")

    if not args.no_phase1:
        print()
        print(f"{'phase I':24s} {'numpy s':>8s} {'numba s':>8s}")
        for variant in ("linear", "bilinear", "decentralized-bilinear"):
            a, b = phase1_seconds(variant, True), phase1_seconds(variant, False)
            print(f"{variant:24s} {a:8.2f} {b:8.2f}")


if __name__ == "__main__":
    main()
