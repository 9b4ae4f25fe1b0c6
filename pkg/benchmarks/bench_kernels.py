"""Head-to-head timing of the numba and numpy kernel backends.

Run with:  python3 benchmarks/bench_kernels.py [--n 2] [--N 4096]
           [--reps 200]

The two backends must agree to near machine precision on every kernel;
agreement is asserted before any timing is reported, so a silent
divergence fails loudly here as well as in the test suite.
"""
from __future__ import annotations

import argparse
import importlib
import time

import numpy as np

from ksblow.grid import build_grid

KERNELS = ("thomas", "advect_upwind", "diffusion_solve", "helmholtz_solve",
           "apply_helmholtz", "cn_step", "ie_step")

# implicit solves inherit the tridiagonal condition number (~1/h0^2 on
# a clustered grid), so backend agreement there gets roundoff headroom
_AGREE_RTOL = {"thomas": 1e-12, "advect_upwind": 1e-12,
               "apply_helmholtz": 1e-12, "diffusion_solve": 1e-9,
               "helmholtz_solve": 1e-9, "cn_step": 1e-9, "ie_step": 1e-9}


def _args_for(kernel: str, grid, rng):
    m = grid.nnodes
    u = 1.0 + rng.random(m)
    v = rng.random(m)
    g = rng.random(m)
    geo = (grid.rn1_face, grid.w1d, grid.h_face)
    if kernel == "thomas":
        lo = -rng.random(m)   # lo[0] and up[-1] are unused band slots
        up = -rng.random(m)
        diag = 3.0 + rng.random(m)  # diagonally dominant
        return (lo, diag, up, g)
    if kernel == "advect_upwind":
        s_nodes = u * (1.0 + u) ** 0.2
        vr_face = rng.standard_normal(m - 1)
        return (u, s_nodes, vr_face, *geo)
    if kernel == "diffusion_solve":
        return (u, (1.0 + u) ** 0.5, *geo, 1e-4)
    if kernel == "helmholtz_solve":
        return (g, *geo)
    if kernel == "apply_helmholtz":
        return (v, *geo)
    if kernel == "cn_step":
        return (v, g, *geo, 1e-4)
    if kernel == "ie_step":
        return (v, g, *geo, 1e-4)
    raise KeyError(kernel)


def _outputs(mod, kernel: str, args):
    out = getattr(mod, kernel)(*args)
    return out if isinstance(out, tuple) else (out,)


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=2, help="space dimension")
    ap.add_argument("--N", type=int, default=4096, help="cell count")
    ap.add_argument("--reps", type=int, default=200)
    ap.add_argument("--clustering", type=float, default=10.0)
    args = ap.parse_args()

    nb = importlib.import_module("ksblow.kernels._numba")
    npk = importlib.import_module("ksblow.kernels._numpy")
    grid = build_grid(args.n, 1.0, args.N, clustering=args.clustering)
    rng = np.random.default_rng(0)
    cases = {k: _args_for(k, grid, rng) for k in KERNELS}

    print(f"grid: n={args.n} N={args.N} clustering={args.clustering} "
          f"reps={args.reps}")
    print(f"{'kernel':>16s} {'numba ms':>10s} {'numpy ms':>10s} "
          f"{'speedup':>8s} {'max |diff|':>12s}")

    for kernel, case in cases.items():
        ref = _outputs(npk, kernel, case)
        got = _outputs(nb, kernel, case)
        diff = max(float(np.max(np.abs(a - b))) for a, b in zip(got, ref))
        scale = max(float(np.max(np.abs(a))) for a in ref)
        assert diff <= _AGREE_RTOL[kernel] * (1.0 + scale), (kernel, diff)

        times = {}
        for name, mod in (("numba", nb), ("numpy", npk)):
            fn = getattr(mod, kernel)
            fn(*case)  # warm the JIT / caches outside the timing
            t0 = time.perf_counter()
            for _ in range(args.reps):
                fn(*case)
            times[name] = (time.perf_counter() - t0) / args.reps * 1e3

        print(f"{kernel:>16s} {times['numba']:>10.4f} "
              f"{times['numpy']:>10.4f} "
              f"{times['numpy'] / times['numba']:>7.1f}x {diff:>12.3e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
