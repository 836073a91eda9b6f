import json

import pytest

from torusflow import cli

QUICK = {
    "heat-maxreg": ["--N_space", "4", "--K_time", "4", "--n_trials", "5"],
    "stokes-tp": ["--N_space", "4", "--K_time", "2", "--n_trials", "3"],
    "ns-picard": ["--N_space", "8", "--K_time", "2", "--sweep", "0.01,0.02,0.04"],
    "kernel-decay": ["--radii", "2..16:6", "--K_time", "2", "--method", "closed", "--steady_radii", "5..40:5",
                     "--h", "0.25"],
    "rbound": ["--n_families", "4"],
    "transfer-check": ["--n_repeats", "1", "--band_limit", "8"],
    "moving-domain-check": ["--motion", "breathing", "--n_grid", "6", "--n_time", "3", "--levels", "2"],
}


def run_cli(tmp_path, name, extra=(), sub="out"):
    out = tmp_path / sub
    code = cli.main([name, *QUICK[name], "--output_dir", str(out), *extra])
    return code, out


@pytest.mark.parametrize("name", sorted(QUICK))
def test_experiment_runs_and_writes_outputs(tmp_path, name):
    code, out = run_cli(tmp_path, name)
    rep = json.loads((out / "report.json").read_text())
    assert code == 0, rep
    assert rep["schema_version"] == cli.SCHEMA_VERSION
    assert rep["experiment"] == name and rep["passed"]
    for csv_name in rep["series"]:
        data = (out / csv_name).read_bytes()
        assert b"\r" not in data and data.endswith(b"\n")


def test_rerun_is_deterministic(tmp_path):
    _, a = run_cli(tmp_path, "heat-maxreg", sub="a")
    _, b = run_cli(tmp_path, "heat-maxreg", sub="b")
    ra, rb = (json.loads((d / "report.json").read_text()) for d in (a, b))
    ra.pop("wall_time")
    rb.pop("wall_time")
    assert ra == rb
    for name in ra["series"]:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# quick run\nN_space = 4\nK_time=3  # inline comment\nn_trials = 2\nseed = 5\n")
    out = tmp_path / "o"
    assert cli.main(["heat-maxreg", "--config", str(cfg), "--n_trials", "3", "--output_dir", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["config"]["K_time"] == 3 and rep["config"]["n_trials"] == 3 and rep["config"]["seed"] == 5


@pytest.mark.parametrize("argv", [
    ["heat-maxreg", "--bogus", "1"],
    ["heat-maxreg", "--N_space", "zero"],
    ["heat-maxreg", "--N_space", "-4"],
    ["heat-maxreg", "--p", "1"],
    ["kernel-decay", "--method", "spline"],
    ["kernel-decay", "--radii", "16..2"],
    ["nope"],
    ["heat-maxreg", "--config", "/nonexistent/file.cfg"],
    ["heat-maxreg", "--N_space"],
])
def test_invalid_config_exits_2(tmp_path, argv, capsys):
    assert cli.main(argv + ["--output_dir", str(tmp_path / "x")]) == 2
    assert "torusflow:" in capsys.readouterr().err
    assert not (tmp_path / "x" / "report.json").exists()


def test_malformed_config_line(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("N_space 8\n")
    assert cli.main(["heat-maxreg", "--config", str(cfg)]) == 2


def test_invariant_failure_exits_1_with_report(tmp_path):
    code, out = run_cli(tmp_path, "heat-maxreg", ["--stability_limit", "1e-9"])
    assert code == 1
    rep = json.loads((out / "report.json").read_text())
    assert not rep["passed"] and not rep["flags"]["stable_under_K_doubling"]


def test_numerical_guard_exits_1(tmp_path):
    code, out = run_cli(tmp_path, "moving-domain-check", ["--eps", "1.5"])
    assert code == 1
    rep = json.loads((out / "report.json").read_text())
    assert rep["errors"] and rep["errors"][0]["type"] == "SmallnessViolation"


def test_zero_amplitude_picard(tmp_path):
    code, out = run_cli(tmp_path, "ns-picard", ["--amplitude", "0", "--sweep", ""])
    rep = json.loads((out / "report.json").read_text())
    assert code == 0
    assert rep["payload"]["picard"]["n_iter"] == 1
    assert rep["flags"]["single_iteration"]


def test_float_list_parsing():
    assert cli._float_list("1,2.5") == [1.0, 2.5]
    assert len(cli._float_list("2..16")) == 10
    assert cli._float_list("1..4:3") == pytest.approx([1, 2, 4])
    assert cli._float_list("") == []
    with pytest.raises(ValueError):
        cli._float_list("0..4")


def test_build_config_defaults():
    cfg = cli.build_config("rbound", {})
    assert cfg.seed == 0 and cfg.parameters["n_families"] == 20
    with pytest.raises(cli.ConfigError):
        cli.build_config("rbound", {"N_space": "4"})
