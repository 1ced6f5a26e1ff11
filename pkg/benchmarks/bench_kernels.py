"""Timing comparison of the numba kernels against their numpy fallbacks.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N] [--lmax L]``.
Each kernel is called once before timing so compilation is excluded, and
the outputs of both implementations are compared before timing starts.
"""

from __future__ import annotations

import argparse
import json
import time

import numpy as np

from waveharm import kernels
from waveharm.gram import compute_moments, gram_quadrature
from waveharm.special import hankel_coeff_table
from waveharm.surface import HarmonicStarSurface


def best_of(fn, args, repeat):
    fn(*args)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def max_rel(a, b):
    if isinstance(a, tuple):
        return max(max_rel(x, y) for x, y in zip(a, b) if isinstance(x, np.ndarray))
    a, b = np.asarray(a), np.asarray(b)
    return float(np.abs(a - b).max() / max(np.abs(b).max(), 1e-300))


def cases(lmax: int, rng):
    surf = HarmonicStarSurface({(0, 0): np.sqrt(4 * np.pi), (2, 0): 0.1, (3, 1): 0.02 + 0.01j})
    th = rng.uniform(0, np.pi, 20000)
    t = rng.uniform(0.5, 10.0, 20000)
    count = (lmax + 1) ** 2
    mom = compute_moments(surf, (lmax, lmax))
    G = np.ascontiguousarray(gram_quadrature(surf, 1.0, (lmax, lmax)).matrix)
    sign = np.where(mom.ms % 2 == 0, 1.0, -1.0)
    C, _, _ = kernels.numpy_impl.gram_schmidt(G, 1e-13)
    u = rng.standard_normal(count) + 1j * rng.standard_normal(count)
    return {
        "legendre_table": (2 * lmax, np.cos(th), np.sin(th)),
        "hankel_table": (hankel_coeff_table(2 * lmax), t),
        "assemble_moments": (np.ascontiguousarray(mom.p), sign, 1.3),
        "gram_schmidt": (G, 1e-13),
        "sigma_double_sum": (C, u, 1.3),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--lmax", type=int, default=8)
    ap.add_argument("--json", action="store_true", help="print results as JSON")
    args = ap.parse_args(argv)
    if kernels.jit_impl is None:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(0)
    results = []
    for name, call_args in cases(args.lmax, rng).items():
        ref = getattr(kernels.numpy_impl, name)
        jit = getattr(kernels.jit_impl, name)
        diff = max_rel(jit(*call_args), ref(*call_args))
        t_np = best_of(ref, call_args, args.repeat)
        t_jit = best_of(jit, call_args, args.repeat)
        results.append({"kernel": name, "numpy_s": t_np, "numba_s": t_jit, "speedup": t_np / t_jit, "max_rel_diff": diff})
    if args.json:
        print(json.dumps(results, indent=2))
        return
    import numba

    print(f"lmax={args.lmax}  repeat={args.repeat}  numba threads={numba.get_num_threads()}")
    print(f"{'kernel':<18} {'numpy [ms]':>11} {'numba [ms]':>11} {'speedup':>8} {'max rel diff':>13}")
    for r in results:
        print(f"{r['kernel']:<18} {1e3 * r['numpy_s']:>11.3f} {1e3 * r['numba_s']:>11.3f} {r['speedup']:>8.2f} {r['max_rel_diff']:>13.2e}")


if __name__ == "__main__":
    main()
