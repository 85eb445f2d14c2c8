"""Small-step convergence experiment: iterated mountain-pass steps against
the monotone finite-difference reference for a nonconvex model.

Run:  python scripts/run_convergence_study.py [--fast]
"""

import argparse
import time

import numpy as np

from hjvar.gridfn import GridFunction
from hjvar.hamiltonians import get_model
from hjvar.operators import IterationSchedule, OperatorConfig
from hjvar.viscosity_fd import FDConfig, fd_domain_for, solve_lax_friedrichs, sup_distance
from hjvar.operators import iterated_operator


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--fast", action="store_true", help="coarser grids, ~30 s")
    ap.add_argument("--amplitude", type=float, default=2.0)
    args = ap.parse_args()

    H = get_model("nonconvex_bump", a=args.amplitude)
    T = 1.0
    window = (-1.0, 1.0)
    h_fd = 2e-3 if args.fast else 5e-4
    deltas = (0.2, 0.1, 0.05) if args.fast else (0.2, 0.1, 0.05, 0.025)
    h_u = 0.02 if args.fast else 0.01
    grid = (160, 128) if args.fast else (200, 160)

    fd_cfg = FDConfig(h=h_fd)
    lo, hi = fd_domain_for(window, H, 1.0, T, fd_cfg)
    u_fd = GridFunction.from_callable(lambda x: -np.abs(x), lo, hi, h_fd, lip=1.0)
    print(f"reference march on [{lo:.2f}, {hi:.2f}] at h={h_fd:g} ...")
    ref = solve_lax_friedrichs(H, u_fd, 0.0, T, fd_cfg)

    u0 = GridFunction.from_callable(lambda x: -np.abs(x), -4.4, 4.4, h_u, lip=1.0)
    cfg = OperatorConfig(landscape_grid=grid)
    print(f"{'step':>8} {'sup distance':>14} {'seconds':>8}")
    for delta in deltas:
        t0 = time.time()
        sched = IterationSchedule.uniform(0.0, T, delta)
        approx = iterated_operator(H, u0, sched, cfg)
        d = sup_distance(approx, ref, window)
        print(f"{delta:8.3f} {d:14.6f} {time.time() - t0:8.1f}")


if __name__ == "__main__":
    main()
