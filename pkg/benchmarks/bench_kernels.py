"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import math
import time

import numpy as np

from apamoeba import _kernels


def workloads(rng):
    amp = rng.uniform(0.2, 2, (256, 3)) * np.exp(1j * rng.uniform(-np.pi, np.pi, (256, 3)))
    W = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    samples = rng.uniform(0, 2 * np.pi, (512, 2))
    logamp = rng.normal(size=(4, 3))
    phase = rng.uniform(-np.pi, np.pi, 3)
    pts = rng.uniform(-50, 50, (16, 1024, 2))
    line = np.array([1.0, 0.3j, -2.0], dtype=complex)
    omega = np.array([1.0, math.sqrt(2), 0.0])
    mu = np.array([1.0, math.sqrt(2), math.sqrt(3)])
    a = np.array([0.5, -1.0, 2.0])
    eps = 0.02
    h = eps / (2 * np.linalg.norm(mu))
    return {
        "fiber_search (256 cells)": lambda k: k.fiber_search(amp, W, samples, 4, 40),
        "log_abs_means (4 x 16k pts)": lambda k: k.log_abs_means(logamp, phase, W, pts, 40.0),
        "track_argument (T = 200)": lambda k: k.track_argument(line, omega, -200.0, 200.0, 0.4, 1e-9),
        "kronecker_scan (2e6 steps)": lambda k: k.kronecker_scan(mu, a, eps, h, h, 2_000_000),
    }


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    nb, npk = _kernels.numba_backend, _kernels.numpy_backend
    rng = np.random.default_rng(0)
    print(f"{'kernel':32s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s}")
    for name, run in workloads(rng).items():
        t_np = best_of(lambda: run(npk), args.repeat)
        if nb is None:
            print(f"{name:32s} {t_np:10.4f} {'-':>10s} {'-':>8s}")
            continue
        run(nb)  # compile or load from cache
        t_nb = best_of(lambda: run(nb), args.repeat)
        print(f"{name:32s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
