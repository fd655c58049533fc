import csv
import json

import pytest

from hfproj import operators
from hfproj.cli import (
    EXIT_GAP_VIOLATION,
    EXIT_INVALID_CONFIG,
    EXIT_NOT_CONVERGED,
    EXIT_OK,
    EXIT_REPORT_FAILED,
    main,
    parse_run_config,
)
from hfproj.core import ConfigurationError

HELIUM = {
    "mode": "uhf",
    "z": 35,
    "q": 2,
    "shells": [1],
    "grid": {"scheme": "log-linear", "r_max": 60, "count": 600},
    "solver": {"tol": 1e-10, "max_iter": 30, "seed": 0},
}


def _run(tmp_path, command, config, *extra):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config))
    out = tmp_path / "out"
    return main([command, "--config", str(path), "--out", str(out), *extra]), out


class TestSolve:
    def test_outputs(self, tmp_path):
        code, out = _run(tmp_path, "solve", HELIUM)
        assert code == EXIT_OK
        report = json.loads((out / "report.json").read_text())
        assert report["converged"] is True
        (eps,) = report["occupied_eigenvalues"]
        assert -1.0 <= eps <= -1.0 + 8 / 35
        with open(out / "orbitals.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["r", "n1l0"]
        assert len(rows) == 601

    def test_not_converged(self, tmp_path):
        cfg = dict(HELIUM, solver={"tol": 1e-14, "max_iter": 2})
        assert _run(tmp_path, "solve", cfg)[0] == EXIT_NOT_CONVERGED

    def test_gap_violation(self, tmp_path):
        cfg = dict(HELIUM, z=20, shells=[1, 2])
        assert _run(tmp_path, "solve", cfg)[0] == EXIT_GAP_VIOLATION

    @pytest.mark.parametrize(
        "patch, field",
        [
            ({"shells": [1, 1]}, "shells"),
            ({"z": -3}, "z"),
            ({"mode": "dft"}, "mode"),
            ({"grid": {"count": 3}}, "grid.count"),
            ({"solver": {"damping": 2.0}}, "solver.damping"),
            ({"colour": "blue"}, "colour"),
        ],
    )
    def test_invalid_config(self, tmp_path, capsys, patch, field):
        code, _ = _run(tmp_path, "solve", dict(HELIUM, **patch))
        assert code == EXIT_INVALID_CONFIG
        assert f"'{field}'" in capsys.readouterr().err

    def test_bad_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        assert main(["solve", "--config", str(path)]) == EXIT_INVALID_CONFIG

    def test_negative_seed(self, tmp_path):
        assert _run(tmp_path, "solve", HELIUM, "--seed", "-1")[0] == EXIT_INVALID_CONFIG


def test_parse_defaults():
    run = parse_run_config({"mode": "rhf", "z": 150, "shells": [[1, 0], [2, 0], [2, 1]]})
    assert run.configuration().n_electrons == 5
    with pytest.raises(ConfigurationError):
        parse_run_config({"mode": "rhf", "z": 150, "q": 2, "shells": [[1, 0]]})


class TestScan:
    def test_single_point_flags_slope(self, tmp_path):
        cfg = dict(HELIUM, experiment={"name": "scan", "z_values": [100]})
        code, out = _run(tmp_path, "scan-z", cfg)
        assert code == EXIT_OK
        report = json.loads((out / "report.json").read_text())
        assert "slope" not in report and report["slope_flag"]
        header = (out / "scan.csv").read_text().splitlines()[0]
        assert header == "z,hs_distance_to_hydrogenic,corollary_bound,converged_iterations"


class TestVerify:
    def test_deterministic_and_complete(self, tmp_path):
        cfg = dict(HELIUM, experiment={"sweep_trials": 200})
        (tmp_path / "a").mkdir()
        (tmp_path / "b").mkdir()
        code, out = _run(tmp_path / "a", "verify", cfg)
        code2, out2 = _run(tmp_path / "b", "verify", cfg)
        assert code == code2 == EXIT_OK
        first, second = (out / "verify.json").read_bytes(), (out2 / "verify.json").read_bytes()
        assert first == second
        groups = json.loads(first)["groups"]
        assert len(groups) >= 7 and all(g["passed"] for g in groups)

    def test_corrupted_angular_table(self, tmp_path, monkeypatch):
        true_weight = operators.angular_weight
        monkeypatch.setattr(operators, "angular_weight", lambda l, lb, k: 1.05 * true_weight(l, lb, k))
        cfg = dict(HELIUM, experiment={"sweep_trials": 50})
        code, out = _run(tmp_path, "verify", cfg)
        assert code == EXIT_REPORT_FAILED
        groups = {g["name"]: g for g in json.loads((out / "verify.json").read_text())["groups"]}
        assert not groups["coulomb_oracle_gate"]["passed"]


class TestHartree:
    def test_large_charge_symmetric(self, tmp_path):
        cfg = {"mode": "hartree", "z": 35, "q": 2, "shells": [1], "experiment": {"name": "both"},
               "grid": {"scheme": "log-linear", "r_max": 400, "count": 800, "transition": 4.0}}
        code, out = _run(tmp_path, "hartree", cfg)
        assert code == EXIT_OK
        report = json.loads((out / "report.json").read_text())
        assert report["unrestricted"]["symmetric"]
        assert abs(report["energy_difference"]) < 1e-8
        assert (out / "orbitals.csv").read_text().splitlines()[0] == "r,orbital1,orbital2"

    def test_requires_hartree_mode(self, tmp_path):
        assert _run(tmp_path, "hartree", HELIUM)[0] == EXIT_INVALID_CONFIG

    def test_unknown_experiment(self, tmp_path):
        cfg = {"mode": "hartree", "z": 35, "q": 2, "shells": [1], "experiment": {"name": "nope"}}
        assert _run(tmp_path, "hartree", cfg)[0] == EXIT_INVALID_CONFIG
