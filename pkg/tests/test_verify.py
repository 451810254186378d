import json
import math
import pathlib

import pytest

from rvm.cli import main
from rvm.config import default_config
from rvm.verify import (CheckResult, VerificationReport, suite_force, suite_ode, verify_all)

ROOT = pathlib.Path(__file__).resolve().parents[1]
QUICK = {"verify": {"scale": "quick"}}


@pytest.fixture(scope="module")
def quick_report():
    return verify_all(default_config().with_overrides(**QUICK))


def test_report_structure(quick_report):
    ids = [e.id for e in quick_report.entries]
    assert ids == [f"C{i:02d}" for i in range(1, 44)]
    data = json.loads(quick_report.to_json())
    assert data["n_checks"] == 43 and data["scale"] == "quick"
    for c in data["checks"]:
        assert set(c) >= {"id", "anchor", "status", "measured", "bound", "tolerance"}
        assert c["anchor"]


def test_anchors_documented(quick_report):
    doc = (ROOT / "docs" / "checks.md").read_text()
    for e in quick_report.entries:
        assert f"| {e.id} | {e.anchor} |" in doc, e.anchor


def test_default_failures_are_the_single_log_factor_envelope(quick_report):
    # the only failure at the defaults is the envelope with one log factor
    assert [e.id for e in quick_report.failures] == ["C38"]
    assert quick_report.exit_code == 1
    c39 = next(e for e in quick_report.entries if e.id == "C39")
    assert c39.passed


def test_corrected_envelope_passes():
    cfg = default_config().with_overrides(verify={"scale": "quick"}, ode={"log_factor": 2})
    rep = verify_all(cfg, suites=(suite_ode,))
    assert rep.exit_code == 0 and len(rep.entries) == 6


def test_suite_results_are_deterministic():
    cfg = default_config().with_overrides(**QUICK)
    a = verify_all(cfg, suites=(suite_force, suite_ode))
    b = verify_all(cfg.with_overrides(verify={"workers": 2}), suites=(suite_force, suite_ode))
    assert a.to_dict()["checks"] == b.to_dict()["checks"]


def test_check_relations():
    assert CheckResult("X", "a", "d", 1.0 + 1e-7, 1.0, 1e-6).passed
    assert not CheckResult("X", "a", "d", 1.1, 1.0, 1e-6).passed
    assert CheckResult("X", "a", "d", 1.95, 1.9, 0.0, ">=").passed
    assert not CheckResult("X", "a", "d", 1.8, 1.9, 0.0, ">=").passed
    nan = CheckResult("X", "a", "d", math.nan, 1.0, 0.0)
    assert not nan.passed and nan.to_dict()["measured"] == "nan"


def test_exit_code_is_capped():
    entries = [CheckResult(f"C{i:03d}", "a", "d", 2.0, 1.0, 0.0) for i in range(200)]
    rep = VerificationReport(entries, default_config().to_dict())
    assert len(rep.failures) == 200 and rep.exit_code == 125


def test_counterexample_fails_envelope_checks(tmp_path, capsys):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"force": {"A": 0.01, "enforce_admissibility": False},
                               "ode": {"log_factor": 2}, **QUICK}))
    code = main(["verify", "--config", str(cfg), "--out", str(tmp_path / "out")])
    assert code != 0
    failed = json.loads((tmp_path / "out" / "report.json").read_text())["failed"]
    assert {"C01", "C06"} <= set(failed)
    assert "FAIL sign condition" in capsys.readouterr().out
