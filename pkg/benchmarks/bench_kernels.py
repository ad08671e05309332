"""Compare the numba and numpy kernel paths.

    python3 benchmarks/bench_kernels.py --n 300 --repeat 5
"""

import argparse
import time

import numpy as np

from vascutherm import kernels
from vascutherm.mesh import generate_rect_mesh


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=300, help="cells per side")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    mesh = generate_rect_mesh(0.1, 0.1, args.n, args.n)
    nodes, tris, area = mesh.nodes, mesh.triangles, mesh.areas
    k = np.broadcast_to(0.5593 * np.eye(2), (len(tris), 2, 2))
    theta = np.random.default_rng(0).uniform(290.0, 330.0, mesh.n_nodes)

    cases = {
        "stiffness": lambda use: kernels.stiffness_batch(nodes, tris, k, 4.31e-3, use_numba=use),
        "radiation": lambda use: kernels.radiation_batch(tris, area, theta, 0.95 * 5.67e-8, 298.15, use_numba=use),
    }
    print(f"{mesh.n_triangles} triangles, numba available: {kernels.HAS_NUMBA}")
    print(f"{'kernel':<10} {'numpy [s]':>10} {'numba [s]':>10} {'speedup':>8}")
    for name, fn in cases.items():
        t_np = best_of(lambda: fn(False), args.repeat)
        if kernels.HAS_NUMBA:
            a, b = fn(False), fn(True)
            for x, y in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
                np.testing.assert_allclose(y, x, rtol=1e-12, atol=1e-12 * np.abs(x).max())
            t_nb = best_of(lambda: fn(True), args.repeat)
            print(f"{name:<10} {t_np:>10.4f} {t_nb:>10.4f} {t_np / t_nb:>7.1f}x")
        else:
            print(f"{name:<10} {t_np:>10.4f} {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
