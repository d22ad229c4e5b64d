from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from sbpsolver.cli import EXIT_ERROR, EXIT_NO_SOLUTION, EXIT_SOLVED, cmd_eigen, cmd_solve, cmd_verify, main
from sbpsolver.config import ENV_SEED, RunConfig
from sbpsolver.io import read_field, write_field

SMALL = {
    "domain": {"dim": 3, "n_per_axis": 7, "lengths": 1.0},
    "omega_list": [0.0, 1.0],
    "boundary": {"h1": 0.2, "h2": 0.0},
    "nonlinearity": {"family": "power", "p": 5.0},
    "solver": {"deflation_count": 1, "geometry": False},
}


def _write(tmp_path, raw, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(raw))
    return path


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    out = tmp / "run"
    assert main(["solve", str(_write(tmp, SMALL)), "-o", str(out)]) == EXIT_SOLVED
    return out


def test_solve_writes_report_and_fields(small_run):
    report = json.loads((small_run / "report.json").read_text())
    assert report["exit_code"] == EXIT_SOLVED and report["status"] == "solved"
    assert [r["omega"] for r in report["runs"]] == [0.0, 1.0]
    for run in report["runs"]:
        assert len(run["records"]) == 1
        meta = run["records"][0]
        assert meta["verification"]["residual"]["verdict"] == "pass"
        assert read_field(small_run / meta["files"]["u"]).domain.n_per_axis == (7, 7, 7)
    assert RunConfig.from_dict(report["config"]).to_dict() == report["config"]


def test_verify_passes_then_detects_tampering(small_run, tmp_path):
    import shutil

    work = tmp_path / "copy"
    shutil.copytree(small_run, work)
    results, code = cmd_verify(work)
    assert code == EXIT_SOLVED and all(r["passed"] for r in results)
    assert main(["verify", str(work / "report.json")]) == EXIT_SOLVED

    report = json.loads((work / "report.json").read_text())
    u_path = work / report["runs"][0]["records"][0]["files"]["u"]
    u = read_field(u_path)
    write_field(u_path.with_suffix(""), u.with_values(u.values * 1.01))
    assert cmd_verify(work)[1] == EXIT_ERROR

    data = u_path.with_suffix(".f64")
    data.write_bytes(data.read_bytes()[:100])
    assert main(["verify", str(work)]) == EXIT_ERROR


def test_export_csv_and_vtk(small_run, tmp_path):
    assert main(["export", str(small_run), "--format", "csv", "-o", str(tmp_path)]) == EXIT_SOLVED
    rows = list(csv.DictReader((tmp_path / "branch_table.csv").open()))
    assert len(rows) == 2 and [float(r["omega"]) for r in rows] == [0.0, 1.0]
    assert main(["export", str(small_run), "--format", "vtk", "-o", str(tmp_path)]) == EXIT_SOLVED
    text = (tmp_path / "omega1_rec0_phi.vtk").read_text()
    assert "DIMENSIONS 9 9 9" in text
    assert (tmp_path / "chi.vtk").exists()


def test_zero_family_below_threshold_exits_no_solution(tmp_path):
    raw = {"domain": {"n_per_axis": 7}, "omega": {"times_lambda1": 0.25},
           "nonlinearity": {"family": "zero"}, "solver": {"deflation_count": 1, "geometry": False}}
    report, code = cmd_solve(_write(tmp_path, raw), tmp_path / "out", env={})
    assert code == EXIT_NO_SOLUTION
    assert report.runs[0]["nonexistence"]["status"] == "consistent"
    assert main(["solve", str(_write(tmp_path, raw)), "-o", str(tmp_path / "o2")]) == EXIT_NO_SOLUTION


def test_invalid_inputs_exit_one(tmp_path, capsys):
    bad = _write(tmp_path, {"nonlinearity": {"p": 3.0}})
    assert main(["solve", str(bad), "-o", str(tmp_path / "x")]) == EXIT_ERROR
    assert "exponent p outside (4,6)" in capsys.readouterr().err
    assert main(["solve", str(_write(tmp_path, {"domain": {"foo": 1}}, "u.json"))]) == EXIT_ERROR
    assert main(["verify", str(tmp_path / "nothing")]) == EXIT_ERROR
    with pytest.raises(SystemExit):
        main(["export", str(tmp_path), "--format", "xml"])


def test_env_seed_override_is_recorded(tmp_path):
    raw = dict(SMALL, omega_list=[0.0])
    report, code = cmd_solve(_write(tmp_path, raw), tmp_path / "out", env={ENV_SEED: "5"})
    assert code == EXIT_SOLVED
    assert report.env_overrides == {ENV_SEED: 5} and report.config["solver"]["seed"] == 5


def test_eigen_matches_closed_form(tmp_path, capsys):
    path = _write(tmp_path, {"domain": {"dim": 1, "n_per_axis": 31}})
    rows = cmd_eigen(path, 3)
    h = 1 / 32
    expect = [(4 / h**2) * np.sin(k * np.pi * h / 2) ** 2 for k in (1, 2, 3)]
    assert np.allclose([r[1] for r in rows], expect, rtol=1e-9)
    assert main(["eigen", str(path), "--count", "2"]) == EXIT_SOLVED
    assert "lambda_k" in capsys.readouterr().out
