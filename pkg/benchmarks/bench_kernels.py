"""Compare the compiled and numpy kernel backends, then time full fits.

Usage: python benchmarks/bench_kernels.py [--repeat 5] [--n 16000]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from turf import kernels


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def kernel_cases(rng, rows=4000, d=2):
    C = rng.standard_normal((rows, d + 1))
    seq = np.cumsum(rng.standard_normal(rows * 10))
    offsets = np.arange(0, seq.size + 1, 10)
    return {
        "roots_batch": lambda m: m.roots_batch(C, -1.0, 1.0),
        "abs_integrals": lambda m: m.abs_integrals(C, -1.0, 1.0),
        "segmented_ak": lambda m: m.segmented_ak(seq, offsets, 3),
        "max_k_profit": lambda m: m.max_k_profit(seq[:20000], 3),
    }


def fit_case(n, seed=0):
    from turf.estimator import EstimatorConfig, turf
    from turf.measures import EmpiricalMeasure
    from turf.synth import named_model

    e = EmpiricalMeasure(named_model("gauss").draw(seed, n, "bench"))
    cfg = EstimatorConfig()
    return lambda: turf(e, 1, 1, 0.5, cfg)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--n", type=int, default=16000)
    a = p.parse_args(argv)
    backends = kernels.backends()
    rng = np.random.default_rng(0)
    cases = kernel_cases(rng)
    names = sorted(backends)
    print(f"{'kernel':<16}" + "".join(f"{b:>12}" for b in names) + f"{'speedup':>10}")
    for label, fn in cases.items():
        t = {b: best_of(lambda: fn(backends[b]), a.repeat) for b in names}
        speed = t["python"] / t["cython"] if "cython" in t else float("nan")
        print(f"{label:<16}" + "".join(f"{t[b] * 1e3:>10.2f}ms" for b in names) + f"{speed:>9.1f}x")

    # full fits go through the module-level dispatch, so swap it per backend
    saved = {k: getattr(kernels, k) for k in ("poly_roots", "abs_integral", "abs_integrals",
                                             "roots_batch", "max_k_profit", "segmented_ak", "ak_rows")}
    fit = fit_case(a.n)
    t = {}
    for b in names:
        for k in saved:
            setattr(kernels, k, getattr(backends[b], k))
        t[b] = best_of(fit, max(1, a.repeat // 2))
    for k, v in saved.items():
        setattr(kernels, k, v)
    speed = t["python"] / t["cython"] if "cython" in t else float("nan")
    print(f"{'turf n=' + str(a.n):<16}" + "".join(f"{t[b] * 1e3:>10.1f}ms" for b in names) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
