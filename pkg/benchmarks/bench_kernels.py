"""Compare the numba and numpy kernel backends on representative workloads.

Run ``python benchmarks/bench_kernels.py`` (``--quick`` for smaller sizes).
Each kernel is run once on both backends to warm up (this triggers numba
compilation), then timed as the best of ``--repeat`` runs.  Outputs agree to
roundoff; the largest difference is printed next to the timings.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from liphilbert._kernels import SYMBOL_HILBERT, get_kernels


def _workloads(quick: bool, rng: np.random.Generator) -> dict:
    n = 16 if quick else 32
    B, P, M, nlev = (32, 256, 64, 4) if quick else (64, 1024, 128, 8)
    freq = np.fft.fftfreq(n, d=1.0 / n)
    XI, ETA = np.meshgrid(freq, freq, indexing="ij")
    pts = rng.random(n * n)
    pts_y = rng.random(n * n)
    spec = rng.standard_normal(n * n) + 1j * rng.standard_normal(n * n)
    coeffs = rng.standard_normal((nlev, B, M)) + 1j * rng.standard_normal((nlev, B, M))
    P_pts = rng.random((B, P))
    level = rng.integers(0, nlev, P).astype(np.int64)
    vals = rng.standard_normal((B, P)) + 1j * rng.standard_normal((B, P))
    xs = np.sort(rng.random(4096 if quick else 16384))
    ys = 0.1 * np.sin(7 * xs) + 0.3 * xs
    arr = rng.random((128, 128))
    di = rng.integers(-4, 5, 40).astype(np.int64)
    dj = rng.integers(-4, 5, 40).astype(np.int64)
    params = np.array([0.0, 0.0, 1.0])
    return {
        "directional_sum": lambda k: k.directional_sum(
            spec, XI.ravel().astype(float), ETA.ravel().astype(float), pts, pts_y,
            0.05 * np.sin(2 * np.pi * pts), SYMBOL_HILBERT, params, False),
        "nudft_type2": lambda k: k.nudft_type2(coeffs, -M // 2, P_pts, level),
        "nudft_type1": lambda k: k.nudft_type1(vals, P_pts, level, nlev, -M // 2, M),
        "minimax_line": lambda k: np.array(k.minimax_line(xs, ys)),
        "stencil_max": lambda k: k.stencil_max(arr, di, dj),
    }


def _best(fn, repeat: int) -> float:
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    work = _workloads(args.quick, np.random.default_rng(0))
    nb, npk = get_kernels("numba"), get_kernels("numpy")
    print(f"{'kernel':<18}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}{'max diff':>12}")
    for name, fn in work.items():
        a = np.asarray(fn(npk))
        b = np.asarray(fn(nb))  # warm-up and compile
        diff = float(np.max(np.abs(a - b)))
        t_np = _best(lambda: fn(npk), args.repeat)
        t_nb = _best(lambda: fn(nb), args.repeat)
        print(f"{name:<18}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
