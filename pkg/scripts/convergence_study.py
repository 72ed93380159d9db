#!/usr/bin/env python3
"""Grid refinement study: 1D solve against the exact global solution, and a
disk solve against a rotated half-plane cone.  Prints the L-inf error table
and the observed orders."""

import argparse
import time

import numpy as np

from membranes import exact1d, solver2d
from membranes.cones1d import Cone1D
from membranes.problem import ProblemSpec, normalize
from membranes.solver2d import Grid


def study_1d(levels, tol):
    spec = normalize(ProblemSpec(3, (1.0, 2.0, 1.5), (2.0, 0.3, -1.0)))
    cone = Cone1D(spec, "RR")
    gamma = np.array([(19 + 2 / 3) / 64, (-13 + 2 / 3) / 64])
    pq = exact1d.gamma_to_solution(cone, gamma)
    data = lambda pts: pq.eval(pts[:, 0])
    print("1D interval [-1,1], N=3, free boundaries at", gamma)
    prev_sol = None
    prev_err = None
    for h in levels:
        grid = Grid.interval(-1, 1, h)
        init = solver2d.prolong(prev_sol, grid) if prev_sol is not None else None
        t0 = time.perf_counter()
        sol = solver2d.solve(spec, grid, data, tol=tol, max_sweeps=400000, init=init)
        itr = grid.indexing()[0]
        err = float(np.abs(sol.u[itr] - pq.eval(grid.coords()[itr, 0])).max())
        order = "" if prev_err is None else f"order {np.log2(prev_err / err):5.2f}"
        print(
            f"  h=1/{round(1 / h):<4d} err={err:.4e}  sweeps={sol.meta['sweeps']:<7d}"
            f" t={time.perf_counter() - t0:6.2f}s  {order}"
        )
        prev_sol, prev_err = sol, err


def study_disk(levels, tol, theta):
    spec = normalize(ProblemSpec(2, (1.0, 1.0), (1.0, -1.0)))
    p0 = Cone1D(spec, "L")
    data = lambda pts: p0.eval_2d(pts, theta)
    print(f"disk B_1/2, N=2, half-plane cone rotated by {theta}")
    prev_sol = None
    prev_err = None
    for h in levels:
        grid = Grid.disk(0, 0, 0.5, h)
        init = solver2d.prolong(prev_sol, grid) if prev_sol is not None else None
        t0 = time.perf_counter()
        sol = solver2d.solve(spec, grid, data, tol=tol, max_sweeps=400000, init=init)
        itr = grid.indexing()[0]
        err = float(np.abs(sol.u[itr] - p0.eval_2d(grid.coords()[itr], theta)).max())
        order = "" if prev_err is None else f"order {np.log2(prev_err / err):5.2f}"
        print(
            f"  h=1/{round(1 / h):<4d} err={err:.4e}  sweeps={sol.meta['sweeps']:<7d}"
            f" t={time.perf_counter() - t0:6.2f}s  {order}"
        )
        prev_sol, prev_err = sol, err


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--levels", type=int, nargs="+", default=[16, 32, 64, 128])
    ap.add_argument("--tol", type=float, default=3e-10)
    ap.add_argument("--theta", type=float, default=0.35)
    args = ap.parse_args()
    levels = [1.0 / n for n in args.levels]
    study_1d(levels, args.tol)
    study_disk(levels, args.tol, args.theta)


if __name__ == "__main__":
    main()
