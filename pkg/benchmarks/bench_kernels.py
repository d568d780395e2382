"""Compiled-vs-fallback kernel benchmark.

Times the five hot kernels on workloads shaped like the real call sites
(density inversion grids, Monte Carlo batches, table-wide splitting-type
sweeps, coefficient sieves, telescope reductions) against both backends,
and checks that the results agree.

Run:  python3 benchmarks/bench_kernels.py [--quick]
"""

import argparse
import time

import numpy as np

from cubicartin._kernels import fallback
from cubicartin import euler, primes

try:
    from cubicartin._kernels import core
except ImportError:
    core = None


def _time(fn, *args, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def _row(name, compiled_s, fallback_s):
    speed = fallback_s / compiled_s if compiled_s else float("nan")
    print(f"{name:<16} compiled {compiled_s * 1e3:9.2f} ms   "
          f"fallback {fallback_s * 1e3:9.2f} ms   x{speed:6.1f}")


def bench(quick: bool) -> None:
    if core is None:
        raise SystemExit("compiled backend is not built; run pip install -e .")
    scale = 4 if quick else 1

    # char_grid: density-inversion shape
    ps, theta, weights = euler.local_data("F", 1.0, 10_000)
    n = (1 << 14) // scale
    tc, vc = _time(core.char_grid, theta, weights, n, 1e-2)
    tf, vf = _time(fallback.char_grid, theta, weights, n, 1e-2)
    assert np.allclose(vc, vf, rtol=1e-12, atol=1e-12)
    _row("char_grid", tc, tf)

    # mc_block: one sampling batch
    cumw = np.ascontiguousarray(np.cumsum(weights, axis=1))
    nsamp = 20_000 // scale
    tc, vc = _time(core.mc_block, 7, 0, nsamp, cumw, theta, 0.0)
    tf, vf = _time(fallback.mc_block, 7, 0, nsamp, cumw, theta, 0.0)
    assert np.array_equal(vc, vf)
    _row("mc_block", tc, tf)

    # types_block: a table chunk against every odd prime below 1e5
    odd = primes.sieve(100_000)[1:]
    n_f = 64 // scale
    rng = np.random.default_rng(1)
    discs = (4 * rng.integers(6, 40_000, n_f) + 1).astype(np.int64)
    bcd = np.array([[0, -1, -(int(d) % 97 + 2)] for d in discs], np.int64)
    Q = int(odd[-1]) + 1
    chi = rng.integers(-1, 2, (n_f, Q)).astype(np.int8)
    off = (np.arange(n_f + 1) * Q).astype(np.int64)
    mod = np.full(n_f, Q, dtype=np.int64)
    skips = np.zeros(0, dtype=np.int64)
    skoff = np.zeros(n_f + 1, dtype=np.int64)
    tc, vc = _time(core.types_block, odd, bcd, chi.reshape(-1), off, mod,
                   skips, skoff, repeat=1)
    tf, vf = _time(fallback.types_block, odd, bcd, chi.reshape(-1), off, mod,
                   skips, skoff, repeat=1)
    assert np.array_equal(vc, vf)
    _row("types_block", tc, tf)

    # lambda_from_spf: coefficient sieve at smoothed-series size
    N = 2_000_000 // scale
    spf = primes.spf_sieve(N)
    tags = np.zeros(N + 1, dtype=np.uint8)
    pr = np.nonzero(spf == np.arange(N + 1, dtype=spf.dtype))[0][1:]
    tags[pr] = (pr % 5).astype(np.uint8)
    hr = rng.uniform(-1, 1, (5, 22))
    hr[:, 0] = 1.0
    tc, vc = _time(core.lambda_from_spf, spf, tags, hr, repeat=1)
    tf, vf = _time(fallback.lambda_from_spf, spf, tags, hr, repeat=1)
    assert np.allclose(vc, vf, rtol=1e-12, atol=1e-12)
    _row("lambda_from_spf", tc, tf)

    # telescope_sums: weighted reductions over the same coefficient array
    base = np.exp(-np.arange(N + 1, dtype=np.float64) / 1e4)
    tc, vc = _time(core.telescope_sums, vf, base, 5)
    tf, vf2 = _time(fallback.telescope_sums, vf, base, 5)
    assert np.allclose(vc, vf2, rtol=1e-9)
    _row("telescope_sums", tc, tf)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--quick", action="store_true",
                    help="smaller workloads (CI smoke)")
    bench(ap.parse_args().quick)
