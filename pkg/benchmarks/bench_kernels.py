"""Time the dense reference kernels: numba loops vs vectorized numpy.

    python3 benchmarks/bench_kernels.py [--nv 32] [--cells 32] [--repeat 5]

Both variants are imported from the same module, so the numba versions are
used even if ``TTKINETIC_NUMBA=0`` is set (in that case they are plain
Python loops and very slow; don't).
"""
import argparse
import time

import numpy as np

from ttkinetic import kernels
from ttkinetic.cases import setup_shock_case
from ttkinetic.reference import DenseScheme
from ttkinetic.solver import SolverConfig


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nv", type=int, default=32)
    ap.add_argument("--cells", type=int, default=32)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    case = setup_shock_case(2.0, n_cells=args.cells, n_v=args.nv)
    scheme = DenseScheme(case.mesh, case.grid, case.gas, case.problem, SolverConfig())
    state = scheme.initial_state()
    f = state.f
    nodes = np.asarray(case.grid.nodes)
    dv = case.grid.cell_volume
    R_g, Pr = case.gas.R_g, case.gas.Pr
    m = case.mesh
    ghosts = scheme.ghosts(f)

    def run_moments(fn):
        return lambda: [fn(f[i], nodes, dv, R_g) for i in range(len(f))]

    n, u, T, S = kernels.moments_numpy(f[0], nodes, dv, R_g)
    S = S + 0.01

    def run_shakhov(fn):
        return lambda: [fn(n, u, T, S, nodes, R_g, Pr) for _ in range(len(f))]

    def run_flux(fn):
        def go():
            rhs = np.zeros_like(f)
            fn(f, ghosts, m.face_left, m.face_right, scheme.face_ghost, m.face_area,
               m.face_normal, scheme.inv_vol, nodes, rhs)
        return go

    pairs = [
        ("moments", run_moments, kernels.moments_numpy, kernels.moments_numba),
        ("shakhov", run_shakhov, kernels.shakhov_numpy, kernels.shakhov_numba),
        ("fluxes", run_flux, kernels.accumulate_fluxes_numpy, kernels.accumulate_fluxes_numba),
    ]
    print(f"{args.cells} cells, {args.nv}^3 velocity nodes, best of {args.repeat}")
    print(f"{'kernel':<10}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, wrap, f_np, f_nb in pairs:
        wrap(f_nb)()  # compile outside the timing
        t_np = best_of(wrap(f_np), args.repeat)
        t_nb = best_of(wrap(f_nb), args.repeat)
        print(f"{name:<10}{t_np:12.4f}{t_nb:12.4f}{t_np / t_nb:10.1f}")

    t_step = best_of(lambda: scheme.explicit_step(state), args.repeat)
    print(f"full dense explicit step ({'numba' if kernels.HAVE_NUMBA else 'numpy'}): {t_step:.4f} s")


if __name__ == "__main__":
    main()
