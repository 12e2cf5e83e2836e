import json
import subprocess

import pytest

from gpcert.cli import EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK, cmd_simulate, cmd_sweep, main, parse_values
from gpcert.config import load_config, parse_config, set_param
from gpcert.errors import ConfigError

LAG = {"certification": {"vertices": [[[-2.0]]], "b_in": [1.0], "c_out": [1.0]}}
UNSTABLE = {"certification": {"vertices": [[[1.0]]], "b_in": [1.0], "c_out": [1.0]}}
SHORT = {
    "plant": {"kind": "cubic"},
    "controller": {"K_P": 10.0, "K_I": 20.0},
    "scenario": {
        "duration": 0.01,
        "reference": {"kind": "uniform_steps", "lo": 1.5, "hi": 2.5, "hold": 0.5},
        "disturbance": {"kind": "gaussian_ramp", "sigma": 1.0, "hold": 0.5, "rate_limit": 0.2},
    },
}


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run(argv, capsys):
    code = main(argv)
    return code, capsys.readouterr()


def test_certify_reports_gain(tmp_path, capsys):
    code, out = run(["certify", write(tmp_path, "lag.json", LAG)], capsys)
    assert code == EXIT_OK
    rep = json.loads(out.out)
    assert rep["status"] == "Optimal"
    assert rep["gamma"] == pytest.approx(0.5, rel=1e-3)
    assert rep["gamma_hinf"] == pytest.approx(0.5, rel=1e-3)


def test_certify_unstable_exits_3(tmp_path, capsys):
    code, out = run(["certify", write(tmp_path, "bad.json", UNSTABLE)], capsys)
    assert code == EXIT_INFEASIBLE
    assert json.loads(out.out)["status"] == "Infeasible"


def test_certify_is_reproducible(tmp_path, capsys):
    path = write(tmp_path, "lag.json", LAG)
    reports = []
    for _ in range(2):
        run(["certify", path, "--out-dir", str(tmp_path)], capsys)
        rep = json.loads((tmp_path / "cert.json").read_text())
        rep.pop("wall_time_s")
        reports.append(json.dumps(rep, sort_keys=True))
    assert reports[0] == reports[1]


def test_simulate_short_run(tmp_path, capsys):
    path = write(tmp_path, "short.json", SHORT)
    out_dir = tmp_path / "a"
    code, out = run(["simulate", path, "--seed", "5", "--out-dir", str(out_dir)], capsys)
    assert code == EXIT_OK
    summary = json.loads(out.out)["metrics"]
    assert summary["seed"] == 5
    first = (out_dir / "run.csv").read_bytes()
    assert len(first.splitlines()) == 12
    run(["simulate", path, "--seed", "5", "--out-dir", str(out_dir)], capsys)
    assert (out_dir / "run.csv").read_bytes() == first
    doc = json.loads((out_dir / "run.json").read_text())
    assert doc["config"]["effective"]["seed"] == 5


def test_sweep_single_value_matches_simulate(tmp_path, capsys):
    path = write(tmp_path, "short.json", SHORT)
    rows = cmd_sweep(path, "controller.K_P", [12.0], runs=1, seed=3)
    doc = json.loads(json.dumps(SHORT))
    doc["controller"]["K_P"] = 12.0
    m, _ = cmd_simulate(write(tmp_path, "kp.json", doc), seed=3)
    for key in ("e_y_inf", "cae", "cae_early", "zdot_e_inf"):
        assert rows[0][key] == m.summary()[key]
    code, out = run(["sweep", path, "--param", "controller.K_P", "--values", "8,12", "--out-dir", str(tmp_path)], capsys)
    assert code == EXIT_OK
    assert out.out.splitlines()[0].startswith("param,value,runs,e_y_inf")
    assert len(out.out.splitlines()) == 3


@pytest.mark.parametrize(
    "argv",
    [
        ["sweep", "{cfg}", "--param", "controller.K_P", "--values", ""],
        ["sweep", "{cfg}", "--param", "controller.nope", "--values", "1"],
        ["simulate", "does-not-exist.json"],
    ],
)
def test_config_errors_exit_2(tmp_path, capsys, argv):
    cfg = write(tmp_path, "short.json", SHORT)
    code, out = run([a.replace("{cfg}", cfg) for a in argv], capsys)
    assert code == EXIT_CONFIG
    assert "config error" in out.err


def test_unknown_key_rejected(tmp_path, capsys):
    doc = dict(SHORT, extra_section={})
    code, _ = run(["simulate", write(tmp_path, "x.json", doc)], capsys)
    assert code == EXIT_CONFIG
    with pytest.raises(ConfigError):
        parse_config({"derl": {"sigma_fac": 3.0, "p_lim": 0.9}})


def test_fixture_root_override(tmp_path, monkeypatch):
    write(tmp_path, "mine.json", LAG)
    monkeypatch.setenv("GPCERT_FIXTURES", str(tmp_path))
    assert load_config("mine").certification.vertices == [[[-2.0]]]


def test_shipped_fixtures_load():
    for name in ("benchmark_polytope", "pneumatic_polytope", "benchmark", "pneumatic", "pneumatic_ablation"):
        load_config(name)


def test_set_param_and_values():
    out = set_param(SHORT, "scenario.reference.hold", 2.0)
    assert out["scenario"]["reference"]["hold"] == 2.0 and SHORT["scenario"]["reference"]["hold"] == 0.5
    assert parse_values("0.02, 0.05,0.1") == [0.02, 0.05, 0.1]
    assert parse_values("[1, 2]") == [1, 2]
    with pytest.raises(ConfigError):
        set_param(SHORT, "scenario", 1)


def test_console_script(tmp_path):
    res = subprocess.run(["gpcert", "certify", write(tmp_path, "bad.json", UNSTABLE)], capture_output=True, text=True)
    assert res.returncode == EXIT_INFEASIBLE
