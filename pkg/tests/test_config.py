"""Tests for configuration loading, validation and result files."""

import csv
import json
import logging
import math
from pathlib import Path

import numpy as np
import pytest

from willmore_lab.core.errors import ConfigError, NonPositiveDefinite
from willmore_lab.core.metrics import MetricFamily, check_validity
from willmore_lab.data.loader import load_config_data, load_family, save_data, save_rows_csv
from willmore_lab.utils.config import (
    RunConfig,
    get_default_config,
    load_config_file,
    merge_config,
    read_json,
    save_config_file,
)
from willmore_lab.utils.validation import validate_point, validate_rho, validate_run_config


def test_defaults_are_valid():
    doc = get_default_config()
    validate_run_config(doc)
    config = RunConfig.from_document(doc)
    assert config.family == MetricFamily.berger(1.05)
    assert config.solver.lmax == config.lmax == 16
    assert config.solver.ode.method == "DOP853"
    assert config.solver.fd_step == 1e-4
    assert config.rho_list == [0.06, 0.09, 0.12, 0.15, 0.18]
    assert config.timestamped is True


def test_merge_replaces_family_whole():
    base = {"family": {"kind": "berger", "lambda": 1.05}, "solver": {"tol": 1e-8, "max_iter": 60}}
    merged = merge_config(base, {"family": {"kind": "round"}, "solver": {"tol": 1e-6}})
    assert merged["family"] == {"kind": "round"}
    assert merged["solver"] == {"tol": 1e-6, "max_iter": 60}
    assert base["solver"]["tol"] == 1e-8


def test_load_with_user_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"rho": 1.0, "family": {"kind": "homothety", "scale": 1.1}}))
    config = RunConfig.load(path, overrides={"seed": 5})
    assert config.rho == 1.0
    assert config.seed == 5
    assert config.family.kind == "homothety"
    assert config.family.epsilon == pytest.approx(0.1)


def test_missing_config_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config_file(tmp_path / "absent.json")


def test_json_errors_report_position(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "rho": 0.8,\n  "lmax": \n}')
    with pytest.raises(ConfigError, match=r"broken\.json:4:1: invalid JSON"):
        read_json(path)
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError, match="top level"):
        read_json(path)


@pytest.mark.parametrize("override, key", [
    ({"lmax": 4}, "lmax"),
    ({"lmax": 16.0}, "lmax"),
    ({"solver": {"delta": 1.7}}, "solver.delta"),
    ({"solver": {"gradient_mode": "exact"}}, "solver.gradient_mode"),
    ({"rho": 0.1}, "window"),
    ({"ode": {"method": "Euler"}}, "ode.method"),
    ({"curvature": {"chart_step": 1e-9}}, "chart_step"),
    ({"asymptotics": {"rho_list": [0.1, 0.3]}}, "asymptotics.rho_list"),
    ({"einstein": {"probe_count": 3}}, "einstein.probe_count"),
    ({"output": {"timestamped": "yes"}}, "output.timestamped"),
    ({"jobs": 0}, "jobs"),
    ({"point": [0, 0, 0, 0]}, "point"),
    ({"family": {"kind": "berger"}}, "berger"),
])
def test_invalid_configs_name_the_key(override, key):
    doc = merge_config(get_default_config(), override)
    with pytest.raises(ConfigError, match=key.replace(".", r"\.")):
        validate_run_config(doc)


def test_rho_and_point_validation():
    assert validate_rho(1.0) == 1.0
    with pytest.raises(ConfigError):
        validate_rho(math.pi)
    with pytest.raises(ConfigError):
        validate_rho(0.1, delta=0.15)
    with pytest.raises(ConfigError):
        validate_point([1.0, 0.0, True])
    assert validate_point((1, 0, 0, 0)) == [1.0, 0.0, 0.0, 0.0]


def test_run_config_document_round_trip(tmp_path):
    config = RunConfig.load(overrides={"family": {"kind": "left_invariant", "lambdas": [1.1, 0.95, 1.0]}})
    path = tmp_path / "snapshot.json"
    save_config_file(config.to_document(), path)
    again = RunConfig.load(path)
    assert again.family.kind == "left_invariant"
    assert np.allclose(again.family.constant_metric(), config.family.constant_metric())
    assert again.solver == config.solver


def test_load_family_sources(tmp_path):
    doc = {"kind": "berger", "lambda": 1.2}
    assert load_family(doc) == MetricFamily.berger(1.2)
    assert load_family({"family": doc}) == MetricFamily.berger(1.2)
    path = tmp_path / "berger.json"
    path.write_text(json.dumps({"family": doc}))
    assert load_family(path) == MetricFamily.berger(1.2)
    with pytest.raises(FileNotFoundError):
        load_family(tmp_path / "nope.json")


def test_load_config_directory(tmp_path, caplog):
    (tmp_path / "a.json").write_text(json.dumps({"kind": "round"}))
    (tmp_path / "b.json").write_text("{not json")
    with caplog.at_level(logging.WARNING, logger="willmore_lab.data.loader"):
        data = load_config_data(tmp_path)
    assert data == {"a": {"kind": "round"}}
    assert "b.json" in caplog.text
    with pytest.raises(FileNotFoundError):
        load_config_data(tmp_path / "missing")


def test_save_data_converts_numpy(tmp_path):
    path = tmp_path / "nested" / "out.json"
    save_data({"a": np.arange(3), "b": np.float64(0.5), "c": tmp_path}, path)
    text = path.read_text()
    assert text.endswith("\n")
    assert json.loads(text) == {"a": [0, 1, 2], "b": 0.5, "c": str(tmp_path)}


def test_save_rows_csv(tmp_path):
    path = tmp_path / "rows.csv"
    save_rows_csv([{"rho": 0.1, "phi": 1e-17}, {"rho": 0.2, "extra": [1, 2]}], path)
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["rho", "phi", "extra"]
    assert rows[1] == ["0.1", "1e-17", ""]
    assert rows[2] == ["0.2", "", "[1, 2]"]


@pytest.mark.parametrize("name", ["round", "berger", "left_invariant", "homothety",
                                  "conformal_linear", "hopf_modulated", "chart_table"])
def test_example_family_files_load(name):
    path = Path(__file__).resolve().parent.parent / "data" / f"{name}.json"
    family = load_family(path)
    assert family.kind in ("round", "berger", "left_invariant", "homothety", "round_plus_tensor")
    if name == "round":
        assert family == MetricFamily.round()
    else:
        check_validity(family)


def test_validity_floor_reaches_family():
    # Berger min eigenvalue is lambda = 0.15: valid above a 0.1 floor, not above 0.2
    family = {"kind": "berger", "lambda": 0.15}
    loose = RunConfig.load(overrides={"family": family})
    strict = RunConfig.load(overrides={"family": family, "curvature": {"validity_floor": 0.2}})
    assert loose.family.validity_floor == pytest.approx(0.1)
    assert strict.family.validity_floor == pytest.approx(0.2)
    check_validity(loose.family)
    with pytest.raises(NonPositiveDefinite):
        check_validity(strict.family)
    assert strict.family.with_epsilon(0.0).validity_floor == pytest.approx(0.2)


def test_validity_floor_below_one():
    doc = get_default_config()
    doc["curvature"]["validity_floor"] = 1.0
    with pytest.raises(ConfigError):
        validate_run_config(doc)
