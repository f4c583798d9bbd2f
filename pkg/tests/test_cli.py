import csv
import json
import math

import pytest

from cyclebif.cli import ENV_OUT, ConfigError, RunConfig, main


def _read(path):
    return json.loads(path.read_text())


def test_cycle_command(tmp_path):
    assert main(["--scenario", "harmonic", "--out", str(tmp_path), "cycle"]) == 0
    rep = _read(tmp_path / "cycle.json")
    assert abs(rep["T"] - 2 * math.pi) < 1e-9
    assert rep["unit_multiplicity"] == 2
    assert rep["config"]["scenario"] == "harmonic"
    assert rep["config"]["output_dir"] == str(tmp_path)
    with open(tmp_path / "cycle.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x1", "x2"] and len(rows) == 514


def test_csv_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        args = ["--scenario", "greenspan_holmes", "--param", "delta=0.02",
                "--set", "integrator.method=\"rk4\"", "--set", "integrator.rk4_step=0.001",
                "--out", str(d), "cycle"]
        assert main(args) == 0
    assert (a / "cycle.csv").read_bytes() == (b / "cycle.csv").read_bytes()


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(ENV_OUT, str(tmp_path / "env"))
    assert main(["--scenario", "harmonic", "cycle"]) == 0
    assert (tmp_path / "env" / "cycle.json").exists()


def test_config_file_and_flag_override(tmp_path):
    cfg = {"scenario": "greenspan_holmes", "params": {"delta": 0.1}, "output_dir": str(tmp_path)}
    p = tmp_path / "run.json"
    p.write_text(json.dumps(cfg))
    assert main(["--config", str(p), "--param", "delta=0.02", "cycle"]) == 0
    rep = _read(tmp_path / "cycle.json")
    assert abs(rep["T"] - 2 * math.pi / 0.98) < 1e-8


@pytest.mark.parametrize("bad", [
    {"scenario": "harmonic", "colour": "red"},
    {"scenario": "harmonic", "grids": {"bogus": 1}},
    {"scenario": "nowhere"},
    {"scenario": "greenspan_holmes", "params": {"delta": 2.0}},
])
def test_config_errors_exit_one(tmp_path, bad):
    p = tmp_path / "bad.json"
    bad = {**bad, "output_dir": str(tmp_path)}
    p.write_text(json.dumps(bad))
    assert main(["--config", str(p), "cycle"]) == 1


def test_missing_cycle_is_config_error(tmp_path):
    assert main(["--scenario", "duffing", "--param", "delta=0", "--out", str(tmp_path),
                 "cycle"]) == 1


def test_unknown_key_rejected_in_code():
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"scenario": "harmonic", "options": {"nope": 1}})


def test_biffun_zero_forcing_tables(tmp_path):
    args = ["--scenario", "greenspan_holmes", "--param", "delta=0.02",
            "--set", "options.zero_forcing=true", "--set", "grids.theta_points=16",
            "--set", "grids.phi_theta=4", "--set", "grids.phi_s=2",
            "--out", str(tmp_path), "biffun"]
    assert main(args) == 0
    with open(tmp_path / "phi.csv") as fh:
        rows = list(csv.reader(fh))[1:]
    assert rows and all(float(v) == 0.0 for r in rows for v in r[2:])


def test_degree_linear(tmp_path):
    args = ["--scenario", "linear_asym", "--param", "mu=1", "--param", "nu=0",
            "--set", "grids.theta_points=32", "--out", str(tmp_path), "degree"]
    assert main(args) == 0
    rep = _read(tmp_path / "degree.json")
    assert rep["f_on_cycle"]["value"] == 1
    assert rep["minus_phi_T"]["value"] in (0, 2)
    assert rep["borsuk"]["holds"]
