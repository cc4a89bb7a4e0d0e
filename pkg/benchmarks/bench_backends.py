"""Benchmark the numba kernels against the pure-numpy fallback.

Runs each hot kernel on a representative workload, checks that the two
backends agree, and reports per-call timings plus one end-to-end pipeline
trial per backend.

Usage: python benchmarks/bench_backends.py [--skip-pipeline]
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from pwdlab.kernels import numpy_impl

try:
    from pwdlab.kernels import numba_impl
except ImportError:
    numba_impl = None


def _time(fn, *args, repeats=5):
    fn(*args)  # warm-up (JIT compile for numba)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels():
    rng = np.random.default_rng(7)
    m, n, k, b, n_concepts = 200_000, 10, 8, 3, 57

    xbits = (rng.random((m, n)) < 0.5).astype(np.uint8)
    labels = (rng.random(m) < 0.4).astype(np.uint8)
    kinds = rng.integers(0, 3, n_concepts).astype(np.int8)
    v1 = rng.integers(0, n, n_concepts)
    v2 = rng.integers(-1, n, n_concepts)
    v2[kinds != 2] = -1
    v1[kinds != 2] = -1
    v1, v2 = v1.astype(np.int64), v2.astype(np.int64)

    ybits = (rng.random((m, k)) < 0.4).astype(np.int8)
    biases = rng.uniform(0.05, 0.95, k)
    log_b, log_c = np.log2(biases), np.log2(1 - biases)

    ybary = rng.integers(0, b, (m, k)).astype(np.int8)
    logtab = np.log2(rng.dirichlet(np.ones(b), size=k))

    ygauss = rng.normal(size=(m, k))
    mean = rng.uniform(0, 1, k)

    cases = [
        ("conjunction_disagreements", (xbits, labels, kinds, v1, v2), np.array_equal),
        ("bernoulli_log_density", (ybits, log_b, log_c), np.allclose),
        ("bary_log_density", (ybary, logtab), np.allclose),
        ("gaussian_log_density", (ygauss, mean, 1.0), np.allclose),
    ]

    print(f"kernel benchmark: m={m}, {n_concepts} concepts, k={k}")
    print(f"{'kernel':30s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}  agree")
    for name, args, same in cases:
        t_np = _time(getattr(numpy_impl, name), *args)
        if numba_impl is None:
            print(f"{name:30s} {t_np * 1e3:9.2f}ms {'n/a':>10s}")
            continue
        t_nb = _time(getattr(numba_impl, name), *args)
        agree = same(getattr(numpy_impl, name)(*args), getattr(numba_impl, name)(*args))
        print(
            f"{name:30s} {t_np * 1e3:9.2f}ms {t_nb * 1e3:9.2f}ms "
            f"{t_np / t_nb:7.1f}x  {agree}"
        )


def bench_pipeline():
    code = (
        "import time\n"
        "from pwdlab.kernels import backend_name\n"
        "from pwdlab.harness.config import bundled_scenario\n"
        "from pwdlab.harness.runner import run_trial\n"
        "sc = bundled_scenario('forward-product-easy')\n"
        "run_trial(sc, 0)\n"
        "t0 = time.perf_counter()\n"
        "row = run_trial(sc, 1)\n"
        "print(f'{backend_name()}: {time.perf_counter() - t0:.2f}s per trial, "
        "err_T={row.err_T:.5f}')\n"
    )
    print("\nend-to-end forward trial per backend:")
    for backend in ("numba", "numpy"):
        env = dict(os.environ, PWDLAB_BACKEND=backend)
        out = subprocess.run(
            [sys.executable, "-c", code], env=env, capture_output=True, text=True
        )
        sys.stdout.write(out.stdout or out.stderr)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--skip-pipeline", action="store_true")
    args = parser.parse_args()
    bench_kernels()
    if not args.skip_pipeline:
        bench_pipeline()


if __name__ == "__main__":
    main()
