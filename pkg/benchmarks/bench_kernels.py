"""Time the numba kernels against their pure-numpy counterparts.

Usage: python3 benchmarks/bench_kernels.py [--repeats R] [--size N]

Each kernel is called once before timing so that JIT compilation is not
counted. Results are checked for agreement before timings are printed.
"""

import argparse
import time

import numpy as np

from graphon_aug import _accel, kernels


def _best_time(func, args, repeats):
    func(*args)  # warm-up / compile
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        func(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _cases(n, rng):
    a = (rng.random((n, n)) < 0.3).astype(np.float64)
    a = np.triu(a, 1)
    a = a + a.T
    b = rng.random((n // 2, n // 2))
    b = 0.5 * (b + b.T)
    mu = np.full(n, 1.0 / n)
    nu = np.full(n // 2, 2.0 / n)
    kernel = np.exp(-rng.random((n, n // 2)) / 0.05)
    plan = np.outer(mu, nu)
    small = n // 4
    return {
        "sinkhorn_scaling": (kernel, mu, nu, 300, 1e-12),
        "gw_order_one_cost": (a[:small, :small], b[:small, :small], plan[:small, :small]),
        "sba_blocks": (a, 0.2),
        "box_filter": (rng.random((n, n)), 5),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--size", type=int, default=128)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if not _accel.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<20}{'numpy (ms)':>12}{'numba (ms)':>12}{'speedup':>10}")
    for name, call_args in _cases(args.size, rng).items():
        f_np = getattr(kernels, f"{name}_numpy")
        f_nb = getattr(kernels, f"{name}_numba")
        out_np, out_nb = f_np(*call_args), f_nb(*call_args)
        for x, y in zip(np.atleast_1d(out_np) if name != "sinkhorn_scaling" else out_np[:2],
                        np.atleast_1d(out_nb) if name != "sinkhorn_scaling" else out_nb[:2]):
            np.testing.assert_allclose(x, y, rtol=1e-8, atol=1e-12)
        t_np = _best_time(f_np, call_args, args.repeats)
        t_nb = _best_time(f_nb, call_args, args.repeats)
        print(f"{name:<20}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
