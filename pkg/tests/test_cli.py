from __future__ import annotations

import json
import subprocess
import sys

import pytest

from unistar import cli
from unistar.suites import CheckResult, Loaded, Report, UnknownSuiteError, run_suite
from unistar.scenario import load_shipped


def test_verify_pass_and_json(tmp_path, capsys):
    out = tmp_path / "report.json"
    code = cli.main(["verify", "cocycle-s3", "--scenario", "flat2_moyal", "--json", str(out)])
    assert code == 0
    text = capsys.readouterr().out
    assert text.splitlines()[-1] == "1/1 checks passed"
    assert text.startswith("PASS  cocycle-s3")
    doc = json.loads(out.read_text())
    assert doc["passed"] is True
    (check,) = doc["checks"]
    assert {"suite", "scenario", "claim", "verdict", "counterexample"} <= set(check)
    assert check["verdict"] == "PASS" and check["scenario"] == "flat2_moyal"


def test_failure_sets_exit_status(monkeypatch, capsys):
    def fake(name, items, **kw):
        return Report([CheckResult(name, "x", "claim", False, counterexample={"args": ["x1"], "residual": "nu^1: 1"})])

    monkeypatch.setattr(cli, "run_suite", fake)
    assert cli.main(["verify", "assoc3", "--scenario", "flat2_moyal"]) == 1
    text = capsys.readouterr().out
    assert "FAIL" in text and "first counterexample: args=['x1'] residual=nu^1: 1" in text
    assert text.splitlines()[-1] == "0/1 checks passed"


def test_unknown_suite_is_rejected(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["verify", "nope", "--scenario", "flat2_moyal"])
    assert info.value.code == 2
    with pytest.raises(UnknownSuiteError):
        run_suite("nope", [])


def test_scenario_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text("dim 2\nP 1 2 = x1 +\n")
    assert cli.main(["verify", "assoc3", "--scenario", str(bad)]) == 2
    err = capsys.readouterr().err
    assert f"{bad}:2:" in err
    assert cli.main(["verify", "assoc3", "--scenario", str(tmp_path / "missing.scn")]) == 2


def test_threads_env_validated(monkeypatch, capsys):
    monkeypatch.setenv(cli.THREADS_ENV, "many")
    assert cli.main(["verify", "cocycle-s3", "--scenario", "flat2_moyal"]) == 2
    monkeypatch.setenv(cli.THREADS_ENV, "2")
    assert cli.main(["verify", "cocycle-s3", "--scenario", "flat2_moyal"]) == 0


def test_duplicate_warnings_go_to_stderr(capsys, monkeypatch):
    monkeypatch.setattr(cli, "run_suite", lambda name, items, **kw: Report([CheckResult(name, "r4", "c", True)]))
    assert cli.main(["verify", "jet", "--scenario", "r4_paper", "--dup-mode", "first"]) == 0
    err = capsys.readouterr().err
    assert "G 3 4 4 already assigned" in err and "earlier value" in err


def test_list_shipped(capsys):
    assert cli.main(["list"]) == 0
    assert capsys.readouterr().out.split() == ["flat2_moyal", "r4_paper", "r7_paper"]


def test_report_is_deterministic():
    item = Loaded(*load_shipped("flat2_moyal"))
    a = run_suite("h2-pol2", [item]).to_json()
    b = run_suite("h2-pol2", [item]).to_json()
    for doc in (a, b):
        for c in doc["checks"]:
            c.pop("seconds")
    assert a == b
    with pytest.raises(ValueError):
        run_suite("assoc3", [])


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "unistar.cli", "list"], capture_output=True, text=True)
    assert proc.returncode == 0 and "r4_paper" in proc.stdout
