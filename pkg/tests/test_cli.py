import json
import math
import subprocess
import sys

import pytest

from randers_sphere import cli
from randers_sphere.errors import ConfigError


def run(tmp_path, *argv):
    out = tmp_path / "out"
    code = cli.main([*argv, "--out", str(out)])
    return code, json.loads((out / "report.json").read_text())


def test_check_twisted_sine(tmp_path):
    code, rep = run(tmp_path, "check", "--profile", "twisted-sine", "--alpha", "0.25")
    assert code == 0
    assert rep["schema"] == 1 and rep["experiment"] == "check"
    assert {c["name"] for c in rep["checks"]} == {"c1", "c2", "c3"}
    assert all(c["passed"] for c in rep["checks"])
    assert set(rep["provenance"]) >= {"seed", "step", "fan_n", "version"}


def test_check_from_config_file(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"experiment": "check", "profile": "twisted-sine", "alpha": 0.25}))
    code, rep = run(tmp_path, "check", "--config", str(cfg))
    assert code == 0 and rep["config"]["alpha"] == 0.25


def test_verify_lemmas_deterministic(tmp_path):
    c1, r1 = run(tmp_path / "a", "verify-lemmas", "--seed", "42")
    c2, r2 = run(tmp_path / "b", "verify-lemmas", "--seed", "42")
    assert c1 == c2 == 0
    assert r1["hash"] == r2["hash"] == cli.report_hash(r1)
    assert len(r1["checks"]) == 5
    _, r3 = run(tmp_path / "c", "verify-lemmas", "--seed", "7")
    assert r3["hash"] != r1["hash"]


def test_cutlocus_round_single_antipode(tmp_path):
    code, rep = run(tmp_path, "cutlocus", "--profile", "round", "--q-r", "1.5708",
                    "--fan-n", "64", "--no-svg")
    assert code == 0
    assert rep["results"]["n_unique"] == 1
    r, th = rep["results"]["single_point"]
    assert th == pytest.approx(math.pi, abs=1e-5)
    assert r == pytest.approx(math.pi - 1.5708, abs=1e-5)
    assert "cutlocus.svg" not in rep["artifacts"]


def test_curve_experiments_write_artifacts(tmp_path):
    code, rep = run(tmp_path, "curvature", "--profile", "arcsin-ratio", "--lambda", "1")
    assert code == 0
    assert {"curvature.csv", "curvature.svg"} <= set(rep["artifacts"])
    code, rep = run(tmp_path, "geodesic", "--wind", "rotation:0.3", "--length", "1")
    assert code == 0 and "trace.csv" in rep["artifacts"]
    assert rep["results"]["trace"]["winds"] == ["rotation:0.3"]
    code, rep = run(tmp_path, "halfperiod", "--n-grid", "8")
    assert code == 0 and rep["results"]["table"]["monotone"]
    code, rep = run(tmp_path, "fan", "--fan-n", "64", "--length", "0.5", "--projection", "azimuthal")
    assert code == 0 and rep["results"]["members"] == 64


def test_exit_code_config_error(tmp_path, capsys):
    assert cli.main(["check", "--alpha", "0.7", "--out", str(tmp_path)]) == 2
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"profile": "round", "colour": "red"}))
    assert cli.main(["check", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    cfg.write_text("{not json")
    assert cli.main(["check", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert "config error" in capsys.readouterr().err


def test_exit_code_precondition(tmp_path):
    cfg = tmp_path / "pre.json"
    cfg.write_text(json.dumps({"q_r": 1.0, "fan_n": 64,
                               "winds": [{"type": "radial", "A": "sin", "c": 0.3, "role": "killing"}]}))
    code, rep = run(tmp_path, "cutlocus", "--config", str(cfg))
    assert code == 3
    assert rep["error"]["type"] == "PreconditionFailed" and "C0" in rep["error"]["failures"]


def test_exit_code_numeric_failure(tmp_path):
    code, rep = run(tmp_path, "geodesic", "--wind", "rotation:1.5")
    assert code == 4
    assert rep["error"]["type"] == "NonConvexError"


def test_runconfig_validation():
    cfg = cli.RunConfig.from_dict({"preset": "paper-s4", "experiment": "cutlocus"})
    killing, closing = cfg.wind_chain()
    assert [w.id for w in killing] == ["rotation:0.2", "rotation:0.1"]
    assert closing[0].id == "sum:[radial:ratio,rotation:-0.3]"
    for bad in ({"fan_n": 65}, {"step": 0}, {"q_r": 0.0}, {"preset": "nope"},
                {"winds": [{"type": "rotation", "mu": 0.1, "role": "closing"},
                           {"type": "rotation", "mu": 0.1, "role": "killing"}]},
                {"winds": [{"type": "radial", "A": "cos"}]},
                {"winds": ["rotation:x"]}, {"profile": "custom"}, {"seed": -1}):
        with pytest.raises(ConfigError):
            cli.RunConfig.from_dict(bad)


def test_wind_entries():
    spec, role = cli.wind_from_config("rotation:0.2")
    assert role == "killing"
    spec, role = cli.wind_from_config({"type": "radial", "A": "r/sqrt(r^2+1)"})
    assert spec.id == "radial:ratio" and role == "closing"


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "randers_sphere", "check", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "PASS c1" in proc.stdout
    bad = subprocess.run([sys.executable, "-m", "randers_sphere", "nope"], capture_output=True)
    assert bad.returncode == 2
