import json
import subprocess
import sys

import pytest

from pdolab.cli import EXPERIMENTS, format_report, main


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_list(capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out
    for name in EXPERIMENTS:
        assert name in out


def test_unknown_experiment(tmp_path, capsys):
    assert main(["run", write(tmp_path, {"experiment": "foo"})]) == 2
    err = capsys.readouterr().err
    assert "split-identity" in err and "foo" in err


@pytest.mark.parametrize("cfg", [
    {"experiment": "split-identity", "grid": {"n": 1, "M": 1000}},
    {"experiment": "split-identity", "grid": {"n": 2, "M": 64}},
    {"experiment": "split-identity", "symbol": {"kind": "ching", "J_max": 30}},
    {"experiment": "split-identity", "symbol": {"kind": "weird"}},
    {"grid": {"n": 1, "M": 256}},
])
def test_invalid_config(tmp_path, cfg):
    assert main(["run", write(tmp_path, cfg), "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_unreadable_config(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    assert main(["run", str(p)]) == 2


def test_report_empty_dir(tmp_path):
    assert main(["report", str(tmp_path)]) == 2
    (tmp_path / "manifest.json").write_text("{]")
    assert main(["report", str(tmp_path)]) == 2


def test_split_identity_run_and_report(tmp_path, capsys):
    cfg = write(tmp_path, {"experiment": "split-identity"})
    out = tmp_path / "run"
    assert main(["run", cfg, "--out", str(out)]) == 0
    man = json.loads((out / "manifest.json").read_text())
    assert man["status"] == "pass" and man["config"]["grid"]["M"] == 1024
    res = {v["name"]: v for v in man["verdicts"]}
    assert res["operator_identity"]["measured"] <= 1e-10
    assert (out / "series.csv").exists() and (out / "output.cplx").exists()
    capsys.readouterr()
    assert main(["report", str(out)]) == 0
    text = capsys.readouterr().out
    assert "operator_identity" in text and "fitted exponents" in text


def test_overrides_and_determinism(tmp_path):
    cfg = write(tmp_path, {"experiment": "spectral-support"})
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", cfg, "--out", str(a), "--grid-M", "256", "--seed", "3"]) == 0
    assert main(["run", cfg, "--out", str(b), "--grid-M", "256", "--seed", "3"]) == 0
    man = json.loads((a / "manifest.json").read_text())
    assert man["config"]["grid"]["M"] == 256 and man["config"]["seed"] == 3
    assert (a / "support.csv").read_bytes() == (b / "support.csv").read_bytes()


def test_failing_verdict_exits_one(tmp_path, capsys):
    cfg = write(tmp_path, {"experiment": "a2-divergence", "grid": {"n": 1, "M": 256},
                           "probe": {"J_list": [3, 4, 5, 6]}})
    code = main(["run", cfg, "--out", str(tmp_path / "o")])
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert code == (1 if man["failed"] else 0)
    if man["failed"]:
        assert man["failed"][0] in capsys.readouterr().err


def test_report_marks_informational():
    man = {"experiment": "x", "status": "pass", "fits": {}, "failed": [],
           "verdicts": [{"name": "v", "target": "> 0", "measured": 0.1, "tolerance": 0.3, "pass": False,
                         "gated": False}]}
    assert "FAIL (info)" in format_report(man)


def test_console_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "pdolab.cli", "list"], capture_output=True, text=True)
    assert r.returncode == 0 and "ching-growth" in r.stdout
