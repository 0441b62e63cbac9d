"""Time the compiled kernels against the NumPy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--n 60] [--points 20000]

Both backends are imported directly, so one process measures both and the
results are checked for agreement before any timing is reported.
"""

import argparse
import time

import numpy as np
from scipy.linalg import hessenberg

from wh2mor import _kernels_py, lti

try:
    from wh2mor import _kernels
except ImportError:  # extension not built
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(n, points, seed):
    G = lti.random_system(n, seed=seed, descriptor=False)
    prf = G.prf
    s = 1j * np.logspace(-3, 3, points)
    poles = np.ascontiguousarray(prf.poles, complex)
    res = np.ascontiguousarray(prf.residues, complex)
    h2 = np.zeros_like(poles)

    A = np.linalg.solve(G.E, G.A)
    b = np.linalg.solve(G.E, G.b)
    H, Q = hessenberg(A, calc_q=True)
    H = np.ascontiguousarray(H, complex)
    bh = np.ascontiguousarray(Q.T @ b, complex)
    ch = np.ascontiguousarray(Q.T @ G.c, complex)

    dt = 1e-3
    steps = points
    u = np.cos(np.arange(steps) * dt)
    umid = np.cos((np.arange(steps) + 0.5) * dt)
    At = np.ascontiguousarray(A)
    x0 = np.zeros(n)

    return {
        "pr_eval": (lambda k, out: k.pr_eval(poles, res, h2, 0j, s, out, 1e-14),
                    lambda: np.empty(points, complex)),
        "hess_eval": (lambda k, out: k.hess_eval(H, bh, ch, 0j, s, out, 1e-14),
                      lambda: np.empty(points, complex)),
        "rk4": (lambda k, out: k.rk4(At, b, G.c, 0.0, u, umid, dt, x0, out),
                lambda: np.empty(steps)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=60, help="state dimension")
    ap.add_argument("--points", type=int, default=20000, help="evaluation points or time steps")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if _kernels is None:
        print("compiled extension not available; only the fallback can be timed")
    print(f"n={args.n}, points={args.points}, best of {args.repeat}")
    print(f"{'kernel':<10} {'python [s]':>12} {'compiled [s]':>13} {'speedup':>8}")
    for name, (call, alloc) in cases(args.n, args.points, args.seed).items():
        out_py = alloc()
        t_py = best_of(lambda: call(_kernels_py, out_py), args.repeat)
        if _kernels is None:
            print(f"{name:<10} {t_py:12.4f} {'-':>13} {'-':>8}")
            continue
        out_c = alloc()
        t_c = best_of(lambda: call(_kernels, out_c), args.repeat)
        scale = max(np.abs(out_py).max(), 1.0)
        if np.abs(out_py - out_c).max() > 1e-9 * scale:
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:<10} {t_py:12.4f} {t_c:13.4f} {t_py / t_c:8.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
