import json

import numpy as np
import pytest

from membranes import cli


def write_scenario(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return path


PROBLEM2 = {"n": 2, "weights": [1, 1], "forces": [1, -1]}
PROBLEM3 = {"n": 3, "weights": [1, 1, 1], "forces": [1, 0, -1]}


class TestValidation:
    def test_unknown_pipeline(self):
        assert cli.validate_scenario({"pipeline": "nope"})
        assert cli.validate_scenario([1, 2, 3])

    def test_pointer_paths(self):
        errs = cli.validate_scenario(
            {"pipeline": "solve", "problem": {"n": 2, "weights": [1, "x"], "forces": [1, -1]},
             "domain": {"kind": "disk", "center": [0, 0], "radius": 0.5},
             "h": 0.125, "boundary": {"kind": "cone", "pattern": "L"}}
        )
        assert any(e.startswith("/problem/weights/1") for e in errs)

    def test_missing_required(self):
        errs = cli.validate_scenario({"pipeline": "weiss", "problem": PROBLEM2})
        paths = {e.split(":")[0] for e in errs}
        assert {"/domain", "/h", "/boundary", "/center", "/radii"} <= paths

    def test_bad_forces(self):
        errs = cli.validate_scenario(
            {"pipeline": "cones", "problem": {"n": 2, "weights": [1, 1], "forces": [-1, 1]}}
        )
        assert any("/problem/forces" in e for e in errs)


class TestRun:
    def test_cones_pipeline(self, tmp_path):
        scen = write_scenario(tmp_path, "c.json", {"pipeline": "cones", "problem": PROBLEM3})
        out = tmp_path / "out"
        assert cli.run(scen, out) == 0
        entries = json.loads((out / "cones.json").read_text())
        assert len(entries) == 9
        assert sum(e["connected"] for e in entries) == 4
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["pipeline"] == "cones"
        assert "scenario_sha256" in manifest

    def test_malformed_no_partial_outputs(self, tmp_path):
        scen = write_scenario(tmp_path, "bad.json", {"pipeline": "solve", "problem": PROBLEM2})
        out = tmp_path / "out_bad"
        assert cli.run(scen, out) == 2
        assert not out.exists()

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "nojson.json"
        path.write_text("{not json")
        assert cli.run(path, tmp_path / "o") == 2

    def test_solve_disk(self, tmp_path):
        scen = write_scenario(
            tmp_path,
            "solve.json",
            {
                "pipeline": "solve",
                "problem": PROBLEM2,
                "domain": {"kind": "disk", "center": [0, 0], "radius": 0.5},
                "h": 1 / 32,
                "boundary": {"kind": "cone", "pattern": "L", "angle": 0.3},
            },
        )
        out = tmp_path / "out_solve"
        assert cli.run(scen, out) == 0
        header = json.loads((out / "solution.json").read_text())
        assert header["residual"]["kkt_residual"] < 1e-6
        assert (out / "solution.csv").exists()

    def test_not_converged_exit_3(self, tmp_path):
        scen = write_scenario(
            tmp_path,
            "nc.json",
            {
                "pipeline": "solve",
                "problem": PROBLEM2,
                "domain": {"kind": "rectangle", "x0": 0, "x1": 1, "y0": 0, "y1": 1},
                "h": 1 / 16,
                "boundary": {"kind": "cone", "pattern": "L", "shift": [0.5, 0.5]},
                "max_sweeps": 2,
            },
        )
        assert cli.run(scen, tmp_path / "out_nc") == 3

    def test_reproducible_outputs(self, tmp_path):
        scen = write_scenario(
            tmp_path,
            "game.json",
            {
                "pipeline": "game",
                "problem": PROBLEM2,
                "domain": {"kind": "rectangle", "x0": 0, "x1": 1, "y0": 0, "y1": 1},
                "h": 1 / 8,
                "boundary": {"kind": "cone", "pattern": "L", "angle": 0.2, "shift": [0.5, 0.5]},
                "probes": [[4, 4]],
                "tickets": [1, 2],
                "n_walks": 2000,
                "seed": 7,
            },
        )
        out1, out2 = tmp_path / "g1", tmp_path / "g2"
        assert cli.run(scen, out1) == 0
        assert cli.run(scen, out2) == 0
        assert (out1 / "game.csv").read_bytes() == (out2 / "game.csv").read_bytes()
        records = json.loads((out1 / "game.json").read_text())
        for rec in records:
            assert abs(rec["mean"] - rec["bellman"]) <= 4 * rec["se"] + 1e-12

    def test_rate_pipeline(self, tmp_path):
        rs = np.geomspace(1e-4, 0.5, 8)
        scen = write_scenario(
            tmp_path,
            "rate.json",
            {"pipeline": "rate", "series": [[float(r), float(1 / -np.log(r))] for r in rs]},
        )
        out = tmp_path / "out_rate"
        assert cli.run(scen, out) == 0
        rate = json.loads((out / "rate.json").read_text())
        assert rate["preferred"] == "log"

    def test_blowup_pipeline(self, tmp_path):
        scen = write_scenario(
            tmp_path,
            "blowup.json",
            {
                "pipeline": "blowup",
                "problem": PROBLEM2,
                "domain": {"kind": "rectangle", "x0": -1, "x1": 1, "y0": -1, "y1": 1},
                "h": 1 / 32,
                "boundary": {"kind": "cone", "pattern": "L", "angle": 0.3},
                "center": [0, 0],
                "radii": [0.5, 0.35, 0.25],
            },
        )
        out = tmp_path / "out_blowup"
        assert cli.run(scen, out) == 0
        lines = (out / "blowup.csv").read_text().splitlines()
        assert lines[0] == "r,epsilon"
        assert len(lines) == 4
        fits = json.loads((out / "blowup.json").read_text())
        assert all(f["epsilon"] < 1e-2 for f in fits)
        # Too few radii for a rate fit; reported as skipped, not an error.
        rate = json.loads((out / "rate.json").read_text())
        assert "skipped" in rate

    def test_weiss_pipeline(self, tmp_path):
        scen = write_scenario(
            tmp_path,
            "weiss.json",
            {
                "pipeline": "weiss",
                "problem": PROBLEM2,
                "domain": {"kind": "rectangle", "x0": -1, "x1": 1, "y0": -1, "y1": 1},
                "h": 1 / 32,
                "boundary": {"kind": "cone", "pattern": "L", "angle": 0.1},
                "center": [0, 0],
                "radii": [0.3, 0.5, 0.7, 0.9],
            },
        )
        out = tmp_path / "out_weiss"
        assert cli.run(scen, out) == 0
        lines = (out / "weiss.csv").read_text().splitlines()
        assert lines[0] == "r,E,F,W"
        assert len(lines) == 5
        info = json.loads((out / "weiss.json").read_text())
        assert info["monotone_within_slack"]
        manifest = json.loads((out / "manifest.json").read_text())
        assert "weiss_slack_cq" in manifest["tolerances"]
        assert "solve_tol" in manifest["tolerances"]


class TestMain:
    def test_verify_subcommand(self, capsys):
        assert cli.main(["verify", "projection"]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out

    def test_verify_writes_report(self, tmp_path):
        assert cli.verify("cones", out_dir=tmp_path) == 0
        rows = json.loads((tmp_path / "verify_cones.json").read_text())
        assert all(r["passed"] for r in rows)

    def test_unknown_suite(self):
        with pytest.raises(SystemExit):
            cli.main(["verify", "bogus"])

    def test_pipeline_mismatch(self, tmp_path, capsys):
        scen = write_scenario(tmp_path, "c.json", {"pipeline": "cones", "problem": PROBLEM2})
        assert cli.main(["solve", "--scenario", str(scen), "--out", str(tmp_path / "o")]) == 2

    def test_cones_main(self, tmp_path):
        scen = write_scenario(tmp_path, "c.json", {"pipeline": "cones", "problem": PROBLEM2})
        assert cli.main(["cones", "--scenario", str(scen), "--out", str(tmp_path / "o")]) == 0
