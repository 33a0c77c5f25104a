"""Tests for the wlab command-line interface."""

import csv
import json

import pytest

from willmore_lab import cli


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps({"lmax": 8, "verify_lmax": 8, "output": {"root": str(tmp_path / "out")}}))
    return path


@pytest.fixture
def round_family(tmp_path):
    path = tmp_path / "round.json"
    path.write_text(json.dumps({"family": {"kind": "round"}}))
    return path


def test_version(capsys):
    assert cli.main(["version"]) == 0
    out = capsys.readouterr().out
    assert "WillmoreLab v0.3.0" in out
    assert "AGPL-3.0" in out


def test_no_command_prints_help(capsys):
    assert cli.main([]) == 0
    assert "usage: wlab" in capsys.readouterr().out


def test_list_suites(capsys):
    assert cli.main(["list-suites"]) == 0
    out = capsys.readouterr().out
    assert "spectral" in out
    assert "einstein/berger_is_case_one" in out


def test_curvature_writes_results(tmp_path, small_config, capsys):
    out_dir = tmp_path / "curv"
    assert cli.main(["curvature", "--config", str(small_config), "--out", str(out_dir)]) == 0
    report = json.loads((out_dir / "curvature.json").read_text())
    assert report["family"] == {"kind": "berger", "lambda": 1.05}
    assert len(report["points"]) == 4
    assert report["linearization"]["t2"] == pytest.approx(32.0 / 3.0, rel=1e-6)
    assert json.loads((out_dir / "config.json").read_text())["lmax"] == 8
    with open(out_dir / "curvature.csv", newline="") as f:
        assert len(list(csv.DictReader(f))) == 4
    summary = json.loads(capsys.readouterr().out)
    assert summary["out"] == str(out_dir)


def test_timestamped_output_directory(tmp_path, small_config):
    assert cli.main(["curvature", "--config", str(small_config), "--family", str(tmp_path / "none.json")]) == 1
    assert cli.main(["curvature", "--config", str(small_config)]) == 0
    runs = list((tmp_path / "out").iterdir())
    assert len(runs) == 1
    assert (runs[0] / "curvature" / "curvature.json").is_file()


def test_sphere_and_energy(tmp_path, small_config, round_family):
    out_dir = tmp_path / "sphere"
    args = ["--config", str(small_config), "--family", str(round_family), "--out", str(out_dir), "--rho", "0.7"]
    assert cli.main(["sphere", *args]) == 0
    summary = json.loads((out_dir / "sphere.json").read_text())
    assert summary["rho"] == 0.7
    assert (out_dir / "sphere.csv").is_file()
    assert cli.main(["energy", *args]) == 0
    report = json.loads((out_dir / "energy.json").read_text())
    assert abs(report["I"]) < 1e-9
    assert report["gradient_mode"] == "analytic"


def test_energy_with_coefficient_file(tmp_path, small_config):
    w_path = tmp_path / "w.json"
    w_path.write_text(json.dumps({"lmax": 8, "w": [0.0] * 81}))
    out_dir = tmp_path / "energy"
    assert cli.main(["energy", "--config", str(small_config), "--w", str(w_path), "--out", str(out_dir)]) == 0
    w_path.write_text(json.dumps({"lmax": 8, "w": [0.0] * 5}))
    assert cli.main(["energy", "--config", str(small_config), "--w", str(w_path), "--out", str(out_dir)]) == 1


def test_reduce(tmp_path, small_config):
    out_dir = tmp_path / "reduce"
    assert cli.main(["reduce", "--config", str(small_config), "--out", str(out_dir)]) == 0
    point = json.loads((out_dir / "reduced.json").read_text())
    assert point["converged"] is True
    assert point["aux_residual"] < 1e-8
    assert (out_dir / "residuals.csv").is_file()


def test_reduce_without_convergence_exits_two(tmp_path, capsys):
    path = tmp_path / "strict.json"
    path.write_text(json.dumps({"lmax": 8, "solver": {"max_iter": 1, "tol": 1e-15}}))
    out_dir = tmp_path / "strict"
    assert cli.main(["reduce", "--config", str(path), "--out", str(out_dir)]) == 2
    assert json.loads((out_dir / "reduced.json").read_text())["converged"] is False
    assert "NoConvergence" in capsys.readouterr().err


def test_classify(tmp_path, small_config, capsys):
    out_dir = tmp_path / "classify"
    assert cli.main(["classify", "--config", str(small_config), "--out", str(out_dir), "--pretty"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["case"] == "I"
    assert summary["k0"] == 2
    assert (out_dir / "classification.json").is_file()


def test_verify_spectral(tmp_path, small_config, capsys):
    out_dir = tmp_path / "verify"
    assert cli.main(["verify", "--config", str(small_config), "--suite", "spectral", "--out", str(out_dir)]) == 0
    assert "PASS  spectral/parseval" in capsys.readouterr().out
    with open(out_dir / "verify.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    assert rows and all(r["passed"] == "True" for r in rows)


def test_verify_unknown_suite(small_config):
    assert cli.main(["verify", "--config", str(small_config), "--suite", "nonsense"]) == 1


def test_invalid_config_exits_one(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"lmax": 2}))
    assert cli.main(["curvature", "--config", str(path)]) == 1
    assert "lmax" in capsys.readouterr().err


@pytest.mark.slow
def test_asymptotics_energy(tmp_path, small_config):
    out_dir = tmp_path / "asym"
    assert cli.main(["asymptotics", "--config", str(small_config), "--quantity", "energy", "--out", str(out_dir)]) == 0
    summary = json.loads((out_dir / "asymptotics.json").read_text())
    energy = summary["energy"]
    assert energy["geodesic"]["exponent"] == pytest.approx(4.0, abs=0.15)
    assert energy["profile"]["relative_error"] < 0.1
    assert energy["reduced"]["exponent"] > 5.0
    for branch in ("reduced", "geodesic", "profile"):
        assert (out_dir / f"energy_{branch}.csv").is_file()
