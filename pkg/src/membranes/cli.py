"""Scenario runner: load a JSON scenario, execute its pipeline, write CSV and
JSON artifacts plus a manifest recording inputs, versions and timings.

Exit codes: 0 success, 2 scenario validation error, 3 solver not converged.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from importlib import metadata, resources
from pathlib import Path

import numpy as np

from . import analysis, cones1d, exact1d, gamesim, solver2d, verify as verify_mod
from .errors import MembraneError, ScenarioError
from .problem import ProblemSpec, normalize

PIPELINES = ("cones", "solve", "weiss", "blowup", "game", "rate")


def _schema():
    with resources.files("membranes.schemas").joinpath("scenario_schema.json").open() as fh:
        return json.load(fh)


def validate_scenario(obj):
    """Schema validation; returns a list of 'json-pointer: message' strings."""
    errors = []
    if not isinstance(obj, dict):
        return ["/: scenario must be a JSON object"]
    pipeline = obj.get("pipeline")
    if pipeline not in PIPELINES:
        errors.append(f"/pipeline: expected one of {list(PIPELINES)}, got {pipeline!r}")
        return errors
    required = _schema()["pipeline_requirements"][pipeline]
    for key in required:
        if key not in obj:
            errors.append(f"/{key}: required for pipeline {pipeline!r}")
    if errors:
        return errors
    if "problem" in obj:
        errors.extend(_check_problem(obj["problem"]))
    if "domain" in obj:
        errors.extend(_check_domain(obj["domain"]))
    if "boundary" in obj:
        b = obj["boundary"]
        if not isinstance(b, dict) or b.get("kind") not in ("cone", "profile"):
            errors.append("/boundary/kind: expected 'cone' or 'profile'")
        elif "pattern" not in b:
            errors.append("/boundary/pattern: required")
    if "h" in obj and not (isinstance(obj["h"], (int, float)) and obj["h"] > 0):
        errors.append("/h: expected a positive number")
    if "radii" in obj:
        rs = obj["radii"]
        if not isinstance(rs, list) or not rs or any(
            not isinstance(r, (int, float)) or r <= 0 for r in rs
        ):
            errors.append("/radii: expected a nonempty array of positive numbers")
    if "series" in obj:
        s = obj["series"]
        if not isinstance(s, list) or any(
            not isinstance(p, list) or len(p) != 2 for p in s
        ):
            errors.append("/series: expected an array of [r, epsilon] pairs")
    if "n_walks" in obj and not (isinstance(obj["n_walks"], int) and obj["n_walks"] >= 1):
        errors.append("/n_walks: expected a positive integer")
    return errors


def _check_problem(p):
    errors = []
    if not isinstance(p, dict):
        return ["/problem: expected an object"]
    n = p.get("n")
    if not isinstance(n, int) or n < 1:
        errors.append("/problem/n: expected a positive integer")
        return errors
    for key in ("weights", "forces"):
        v = p.get(key)
        if not isinstance(v, list) or len(v) != n:
            errors.append(f"/problem/{key}: expected an array of {n} numbers")
            continue
        for i, x in enumerate(v):
            if not isinstance(x, (int, float)):
                errors.append(f"/problem/{key}/{i}: expected a number")
    if not errors:
        if any(x <= 0 for x in p["weights"]):
            errors.append("/problem/weights: entries must be strictly positive")
        f = p["forces"]
        if any(f[i] <= f[i + 1] for i in range(n - 1)):
            errors.append("/problem/forces: entries must be strictly decreasing")
    return errors


def _check_domain(d):
    if not isinstance(d, dict):
        return ["/domain: expected an object"]
    kind = d.get("kind")
    needs = {
        "interval": ("lo", "hi"),
        "rectangle": ("x0", "x1", "y0", "y1"),
        "disk": ("center", "radius"),
    }
    if kind not in needs:
        return [f"/domain/kind: expected one of {list(needs)}, got {kind!r}"]
    return [f"/domain/{key}: required for kind {kind!r}" for key in needs[kind] if key not in d]


def _build_grid(domain, h):
    kind = domain["kind"]
    if kind == "interval":
        return solver2d.Grid.interval(domain["lo"], domain["hi"], h)
    if kind == "rectangle":
        return solver2d.Grid.rectangle(domain["x0"], domain["x1"], domain["y0"], domain["y1"], h)
    cx, cy = domain["center"]
    return solver2d.Grid.disk(cx, cy, domain["radius"], h)


def _build_boundary(spec, boundary, dimension):
    cone = cones1d.Cone1D(spec, boundary["pattern"])
    shift = np.asarray(boundary.get("shift", [0.0, 0.0][:dimension]), dtype=float)
    angle = float(boundary.get("angle", 0.0))
    if boundary["kind"] == "cone":
        if dimension == 1:
            return lambda pts: cone.eval(pts[:, 0] - shift[0])
        return lambda pts: cone.eval_2d(pts - shift, angle)
    b1 = exact1d.BranchVector(cone, np.asarray(boundary["b"], dtype=float))
    b0 = exact1d.BranchVector(
        cone, np.asarray(boundary.get("b0", [0.0] * (2 * cone.n)), dtype=float)
    )
    prof = exact1d.ApproximateProfile2D(cone, b0, b1, angle)
    if dimension == 1:
        sol = exact1d.solution_for(cone, b0)
        return lambda pts: sol.eval(pts[:, 0] - shift[0])
    return lambda pts: prof.eval(pts - shift)


def _fmt(x):
    return f"{float(x):.17g}"


def run(scenario_path, out_dir, seed=None, threads=1, tol=None):
    """Execute the scenario's pipeline and write artifacts plus manifest."""
    t_start = time.perf_counter()
    raw = Path(scenario_path).read_bytes()
    try:
        scenario = json.loads(raw)
    except json.JSONDecodeError as exc:
        print(f"scenario is not valid JSON: {exc}", file=sys.stderr)
        return 2
    errors = validate_scenario(scenario)
    if errors:
        for e in errors:
            print(f"scenario error at {e}", file=sys.stderr)
        return 2

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pipeline = scenario["pipeline"]
    if seed is None:
        seed = scenario.get("seed", 0)
    timings = {}
    outputs = []
    tolerances = {}
    exit_code = 0

    try:
        if pipeline == "cones":
            spec = normalize(ProblemSpec.from_json(scenario["problem"]))
            entries = cones1d.catalogue_json(spec)
            _write_json(out / "cones.json", entries)
            print(json.dumps(entries, indent=2, sort_keys=True))
            outputs.append("cones.json")
        elif pipeline in ("solve", "weiss", "blowup"):
            spec = normalize(ProblemSpec.from_json(scenario["problem"]))
            grid = _build_grid(scenario["domain"], scenario["h"])
            data = _build_boundary(spec, scenario["boundary"], grid.dimension)
            t0 = time.perf_counter()
            sol = solver2d.solve(
                spec,
                grid,
                data,
                tol=tol if tol is not None else scenario.get("tol"),
                max_sweeps=scenario.get("max_sweeps"),
            )
            timings["solve_s"] = time.perf_counter() - t0
            tolerances["solve_tol"] = sol.meta["tol"]
            solver2d.save_solution_csv(sol, out / "solution.csv", out / "solution.json")
            outputs += ["solution.csv", "solution.json"]
            if not sol.meta["converged"]:
                exit_code = 3
            if pipeline == "weiss" and exit_code == 0:
                center = tuple(scenario["center"])[: grid.dimension]
                radii = np.asarray(scenario["radii"], dtype=float)
                prof = analysis.weiss(sol, center, radii)
                prof.to_csv(out / "weiss.csv")
                c_q = analysis.calibrate_weiss_slack(sol, center, radii)
                verdict = analysis.monotonicity_check(prof, c_q)
                tolerances["weiss_slack_cq"] = c_q
                _write_json(
                    out / "weiss.json",
                    {
                        "monotone_within_slack": verdict.ok,
                        "worst_violation": verdict.worst_violation,
                        "c_q": c_q,
                    },
                )
                outputs += ["weiss.csv", "weiss.json"]
            if pipeline == "blowup" and exit_code == 0:
                center = tuple(scenario["center"])[: grid.dimension]
                series = []
                fits = []
                catalogue = [c for c in cones1d.enumerate_cones(spec) if c.connected]
                for r in sorted(scenario["radii"], reverse=True):
                    fit = analysis.fit_cone(sol, center, float(r), catalogue=catalogue)
                    series.append((float(r), fit.epsilon))
                    fits.append(json.loads(fit.to_json()))
                with open(out / "blowup.csv", "w") as fh:
                    fh.write("r,epsilon\n")
                    for r, e in series:
                        fh.write(f"{_fmt(r)},{_fmt(e)}\n")
                _write_json(out / "blowup.json", fits)
                outputs += ["blowup.csv", "blowup.json"]
                try:
                    rf = analysis.rate_fit(series)
                    _write_json(out / "rate.json", json.loads(rf.to_json()))
                    outputs.append("rate.json")
                except MembraneError as exc:
                    _write_json(out / "rate.json", {"skipped": str(exc)})
                    outputs.append("rate.json")
        elif pipeline == "game":
            spec = normalize(ProblemSpec.from_json(scenario["problem"]))
            grid = _build_grid(scenario["domain"], scenario["h"])
            data = _build_boundary(spec, scenario["boundary"], grid.dimension)
            game = gamesim.membrane_game(spec, grid, data)
            _write_json(out / "game_spec.json", game.to_json_obj())
            outputs.append("game_spec.json")
            t0 = time.perf_counter()
            vt = gamesim.bellman_solve(game, tol=tol if tol is not None else scenario.get("tol", 1e-13))
            timings["bellman_s"] = time.perf_counter() - t0
            records = []
            n_walks = scenario["n_walks"]
            tickets = scenario.get("tickets", [1])
            shape = grid.shape
            for probe in scenario["probes"]:
                node = int(np.ravel_multi_index(tuple(probe), shape))
                for ticket in tickets:
                    t1 = time.perf_counter()
                    mean, se = gamesim.monte_carlo_eval(game, vt, node, ticket, n_walks, seed)
                    timings[f"mc_{node}_{ticket}_s"] = time.perf_counter() - t1
                    records.append(
                        {
                            "node": node,
                            "ticket": ticket,
                            "bellman": float(vt.v[node, ticket - 1]),
                            "mean": mean,
                            "se": se,
                            "n_walks": n_walks,
                            "seed": seed,
                        }
                    )
            _write_json(out / "game.json", records)
            with open(out / "game.csv", "w") as fh:
                fh.write("node,ticket,bellman,mean,se\n")
                for r in records:
                    fh.write(
                        f"{r['node']},{r['ticket']},{_fmt(r['bellman'])},{_fmt(r['mean'])},{_fmt(r['se'])}\n"
                    )
            outputs += ["game.json", "game.csv"]
        elif pipeline == "rate":
            rf = analysis.rate_fit(scenario["series"])
            _write_json(out / "rate.json", json.loads(rf.to_json()))
            rf.to_csv(out / "rate.csv")
            outputs += ["rate.json", "rate.csv"]
    except ScenarioError as exc:
        for e in exc.messages:
            print(f"scenario error at {e}", file=sys.stderr)
        return 2
    except MembraneError as exc:
        print(f"pipeline failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3

    manifest = {
        "pipeline": pipeline,
        "scenario_sha256": hashlib.sha256(raw).hexdigest(),
        "seed": seed,
        "threads": threads,
        "versions": {
            "membranes": _version(),
            "python": sys.version.split()[0],
            "numpy": np.__version__,
        },
        "tolerances": tolerances,
        "timings_s": {k: round(v, 6) for k, v in timings.items()},
        "total_s": round(time.perf_counter() - t_start, 6),
        "outputs": outputs,
    }
    _write_json(out / "manifest.json", manifest)
    return exit_code


def _version():
    try:
        return metadata.version("membranes")
    except metadata.PackageNotFoundError:
        return "unknown"


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def verify(suite_name, out_dir=None):
    """Run a module's acceptance checks; prints a pass/fail table."""
    try:
        rows = verify_mod.run_suite(suite_name)
    except KeyError:
        print(f"unknown suite {suite_name!r}; choose from {verify_mod.SUITES}", file=sys.stderr)
        return 2
    width = max(len(r[0]) for r in rows)
    failed = 0
    for name, ok, detail in rows:
        status = "PASS" if ok else "FAIL"
        failed += not ok
        print(f"{status}  {name.ljust(width)}  {detail}")
    print(f"{len(rows) - failed}/{len(rows)} checks passed")
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        _write_json(
            Path(out_dir) / f"verify_{suite_name}.json",
            [{"name": n, "passed": bool(ok), "detail": d} for n, ok, d in rows],
        )
    return 0 if failed == 0 else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="membranes",
        description="Solve and analyze the N-membrane problem with constant forces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in PIPELINES:
        p = sub.add_parser(name, help=f"run a {name!r} scenario")
        p.add_argument("--scenario", required=True, help="path to the scenario JSON")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=1, help="worker cap; results are thread-count independent")
        p.add_argument("--tol", type=float, default=None)
    pv = sub.add_parser("verify", help="run a module's acceptance checks")
    pv.add_argument("suite", choices=verify_mod.SUITES)
    pv.add_argument("--out", default=None)
    args = parser.parse_args(argv)

    if args.command == "verify":
        return verify(args.suite, args.out)
    scenario = json.loads(Path(args.scenario).read_text()) if Path(args.scenario).exists() else None
    if scenario is not None and scenario.get("pipeline", args.command) != args.command:
        print(
            f"scenario pipeline {scenario.get('pipeline')!r} does not match subcommand {args.command!r}",
            file=sys.stderr,
        )
        return 2
    return run(args.scenario, args.out, seed=args.seed, threads=args.threads, tol=args.tol)


if __name__ == "__main__":
    sys.exit(main())
