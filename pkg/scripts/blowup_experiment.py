#!/usr/bin/env python3
"""End-to-end blow-up pipeline at a regular intersection point.

Solves the membrane system on a disk with perturbed half-plane-cone data,
computes the Weiss profile, fits the cone family over shrinking balls, and
rate-fits the misfit series.  The rate report is descriptive: it contrasts
the logarithmic model against a power law, without asserting either.
"""

import argparse
from pathlib import Path

import numpy as np

from membranes import analysis, solver2d
from membranes.cones1d import Cone1D, enumerate_cones
from membranes.problem import ProblemSpec, normalize
from membranes.solver2d import Grid


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", type=float, default=1 / 128)
    ap.add_argument("--theta", type=float, default=0.3)
    ap.add_argument("--perturb", type=float, default=0.02)
    ap.add_argument("--out", type=Path, default=Path("blowup_out"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    spec = normalize(ProblemSpec(2, (1.0, 1.0), (1.0, -1.0)))
    p0 = Cone1D(spec, "L")

    def data(pts):
        base = p0.eval_2d(pts, args.theta)
        wob = args.perturb * np.sin(3.0 * np.arctan2(pts[:, 1], pts[:, 0]))
        return base + np.column_stack([np.abs(wob), -np.abs(wob)]) * 0.5

    grid = Grid.disk(0, 0, 1.0, args.h)
    print(f"solving disk at h={args.h} ...")
    sol = solver2d.solve(spec, grid, data)
    print(f"  {sol.meta['sweeps']} sweeps, converged={sol.meta['converged']}")

    # Probe at the subgrid free boundary point nearest the origin, since the
    # perturbation moves the contact set.
    fb_pts = solver2d.free_boundary_points(sol, 1)
    center = tuple(fb_pts[np.argmin(np.linalg.norm(fb_pts, axis=1))])
    print(f"probing at free boundary point ({center[0]:.4f}, {center[1]:.4f})")

    radii = np.array([0.5, 0.35, 0.25, 0.18, 0.12, 0.09])
    prof = analysis.weiss(sol, center, radii)
    prof.to_csv(args.out / "weiss.csv")
    c_q = analysis.calibrate_weiss_slack(sol, center, radii)
    verdict = analysis.monotonicity_check(prof, c_q)
    print(f"Weiss monotone within slack: {verdict.ok} (C_q={c_q:.3f})")

    catalogue = [c for c in enumerate_cones(spec) if c.connected]
    series = []
    for r in radii:
        fit = analysis.fit_cone(sol, center, float(r), catalogue=catalogue)
        series.append((float(r), fit.epsilon))
        print(
            f"  r={r:5.2f}  cone={fit.cone_id}  theta={fit.angle: .4f}"
            f"  eps={fit.epsilon:.3e}  |b|/sqrt(eps)={fit.b_ratio:.2f}"
        )
    with open(args.out / "blowup.csv", "w") as fh:
        fh.write("r,epsilon\n")
        for r, e in series:
            fh.write(f"{r:.17g},{e:.17g}\n")
    try:
        rf = analysis.rate_fit(series)
        print(
            f"rate fit: preferred={rf.preferred}"
            f"  log resid={rf.log_residual:.3e}  power alpha={rf.power_alpha:.3f}"
        )
        (args.out / "rate.json").write_text(rf.to_json())
    except Exception as exc:  # noqa: BLE001 - descriptive script
        print(f"rate fit skipped: {exc}")
    print(f"artifacts in {args.out}/")


if __name__ == "__main__":
    main()
