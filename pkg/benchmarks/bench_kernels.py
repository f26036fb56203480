"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--paths 20000] [--repeat 3]

Both versions are called directly (the env switch only picks the default),
outputs are compared for equality before timing.
"""
import argparse
import time

import numpy as np

from defaultgap.kernels import IMPLEMENTATIONS


def _cases(n, rng):
    steps = 243
    inc = rng.normal(0.0, 0.05, (n, steps))
    x0 = np.zeros(n)
    unif = rng.random((n, steps))
    m = 32
    fine = rng.normal(0.0, 0.05 / np.sqrt(m), (max(n // 8, 1), 40 * m))
    wsteps = np.array([-2, -1, 1, 2], dtype=np.int64)
    wprobs = np.array([0.2, 0.3, 0.3, 0.2])
    n_dp = 400
    return {
        "first_passage": (x0, -0.9, inc),
        "bridge_first_hit": (x0, -0.9, inc, unif, 0.25, 15 / 365),
        "subgrid_first_passage": (np.zeros(fine.shape[0]), -0.5, fine, m),
        "walk_dp": (wsteps, wprobs, n_dp, 2 * n_dp, 4 * n_dp + 1, -20, 4 * n_dp),
    }


def _same(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    return all(np.allclose(x, y, rtol=0, atol=1e-12, equal_nan=True) for x, y in zip(a, b))


def _best(f, args, repeat):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        f(*args)
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    cases = _cases(args.paths, np.random.default_rng(0))
    print(f"{'kernel':<24}{'numba s':>10}{'numpy s':>10}{'speedup':>10}  same")
    for name, (nb, npf) in IMPLEMENTATIONS.items():
        a = cases[name]
        same = _same(nb(*a), npf(*a))       # first call also compiles
        t_nb = _best(nb, a, args.repeat)
        t_np = _best(npf, a, args.repeat)
        print(f"{name:<24}{t_nb:>10.4f}{t_np:>10.4f}{t_np / t_nb:>10.1f}  {same}")


if __name__ == "__main__":
    main()
