"""Time the numba kernels against the pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The first numba call compiles (or loads the on-disk cache); it is timed
separately and excluded from the steady-state numbers.
"""

import argparse
import time

import numpy as np

from catsize import _kernels


def _cases(rng):
    lam = np.sort(rng.random(300))[::-1]
    lam /= lam.sum()
    absx2 = rng.random((300, 300))
    absx2 = absx2 + absx2.T
    w1 = rng.uniform(-1, 1, 2000 * 240)
    w2 = rng.uniform(-1, 1, 2000 * 240)
    dth = np.full_like(w1, 0.02)
    p = rng.dirichlet(np.ones(40), size=20000)
    q = rng.dirichlet(np.ones(40), size=20000)
    w = rng.uniform(-1, 1, 400)
    theta = np.linspace(-1, 1, 400)
    return {
        "qfi_pair_sum (dim 300)": lambda k: k.qfi_pair_sum(lam, absx2, 1e-12),
        "pair_weights (dim 300)": lambda k: k.pair_weights(lam, 1e-12),
        "two_outcome_bound (480k pairs)": lambda k: k.two_outcome_bound(w1, w2, dth),
        "distribution_bound (20k x 40 bins)": lambda k: k.distribution_bound(p, q, 0.05),
        "pair_matrix (400 x 400)": lambda k: k.pair_matrix(w, theta),
    }


def _best(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        print("numba not importable; nothing to compare")
        return 0
    rng = np.random.default_rng(0)
    print(f"{'kernel':<36} {'first numba':>12} {'numba':>10} {'numpy':>10} {'speedup':>8}")
    for name, call in _cases(rng).items():
        t0 = time.perf_counter()
        a = call(_kernels.numba_impl)
        first = time.perf_counter() - t0
        b = call(_kernels.numpy_impl)
        if not np.allclose(a, b, rtol=1e-10, atol=1e-12):
            raise SystemExit(f"{name}: implementations disagree")
        tn = _best(lambda: call(_kernels.numba_impl), args.repeat)
        tp = _best(lambda: call(_kernels.numpy_impl), args.repeat)
        print(f"{name:<36} {first * 1e3:>10.1f}ms {tn * 1e3:>8.2f}ms {tp * 1e3:>8.2f}ms "
              f"{tp / tn:>7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
