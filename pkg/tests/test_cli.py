"""End-to-end command-line tests over the bundled models."""

import json

import pytest

from fmaf.casestudy import load_bundle
from fmaf.cli import main


@pytest.fixture(scope="module")
def paths():
    return {name: str(load_bundle(name).model_file) for name in
            ("nominal", "fault1", "fault2", "fault3")}


WARNING_ONLY = """
sos Warned {
  cs A "A" { nominal GA }
  cs B "B" { nominal GB }
  connection Spare: A <-> B { kind recovery_only }
  process GA owner A { entry a exits [a] action a 1t }
  process GB owner B { entry b exits [b] action b 1t }
}
"""


class TestCheck:
    def test_clean_model_exits_zero(self, paths, capsys):
        assert main(["check", paths["nominal"]]) == 0
        assert "no findings" in capsys.readouterr().out

    def test_violation_exits_one_and_names_rule(self, paths, capsys):
        assert main(["check", paths["fault3"]]) == 1
        out = capsys.readouterr().out
        assert "R2" in out and "F3.1" in out

    def test_json_format_mirrors_finding_fields(self, paths, capsys):
        assert main(["check", paths["fault3"], "--format", "json"]) == 1
        records = json.loads(capsys.readouterr().out)
        assert len(records) == 1
        record = records[0]
        assert record["rule"] == "R2"
        assert record["severity"] == "violation"
        assert record["subject"] == "F3.1"
        assert set(record) == {"rule", "severity", "subject", "chain", "message"}

    def test_warnings_do_not_affect_exit_code(self, tmp_path, capsys):
        path = tmp_path / "warned.fmaf"
        path.write_text(WARNING_ONLY)
        assert main(["check", str(path)]) == 0
        assert "R8" in capsys.readouterr().out

    def test_missing_file_exits_three(self, capsys):
        assert main(["check", "no-such-model.fmaf"]) == 3
        assert "no-such-model.fmaf" in capsys.readouterr().err

    def test_parse_error_exits_three_with_diagnostics(self, tmp_path, capsys):
        path = tmp_path / "broken.fmaf"
        path.write_text("sos Broken {\n  cs X\n")
        assert main(["check", str(path)]) == 3
        assert capsys.readouterr().err.strip()


class TestSimulate:
    def test_nominal_run(self, paths, capsys):
        assert main(["simulate", paths["nominal"]]) == 0
        out = capsys.readouterr().out
        assert "outcome: nominal" in out
        assert "TimeToArrive: 8" in out

    def test_recovered_run_names_detector_and_recovery(self, paths, capsys):
        assert main([
            "simulate", paths["fault2"], "--scenario", "F2.1",
            "--guard", "NextAction=transport",
        ]) == 0
        out = capsys.readouterr().out
        assert "outcome: recovered" in out
        assert "detected-by: ERU" in out
        assert "recovery: R2.1_ERU" in out
        assert "ReportBreakdown" in out

    def test_crashed_guard_creates_a_new_rescue_event(self, paths, capsys):
        assert main([
            "simulate", paths["fault2"], "--scenario", "F2.1",
            "--detectors", "CallCentre", "--guard", "cause=crashed",
            "--seed", "1",
        ]) == 0
        out = capsys.readouterr().out
        assert "recovery: R2.1a" in out
        assert "a new rescue event" in out

    def test_no_recovery_fails_at_boundary(self, paths, capsys):
        assert main([
            "simulate", paths["fault3"], "--scenario", "F3.2", "--no-recovery",
        ]) == 0
        out = capsys.readouterr().out
        assert "outcome: failed-at-boundary" in out
        assert "failure to attend the target casualty" in out

    def test_blocked_scenario_exits_one(self, paths, capsys):
        assert main(["simulate", paths["fault3"], "--scenario", "F3.1"]) == 1
        assert "R2" in capsys.readouterr().err

    def test_unknown_scenario_exits_two(self, paths, capsys):
        assert main(["simulate", paths["fault2"], "--scenario", "NOPE"]) == 2
        assert "NOPE" in capsys.readouterr().err

    def test_bad_horizon_exits_two(self, paths):
        assert main(["simulate", paths["nominal"], "--horizon", "0"]) == 2

    def test_bad_guard_syntax_exits_two(self, paths, capsys):
        assert main(["simulate", paths["fault2"], "--guard", "nonsense"]) == 2
        assert "--guard" in capsys.readouterr().err

    def test_unknown_flag_exits_two(self, paths, capsys):
        assert main(["simulate", paths["nominal"], "--bogus"]) == 2
        capsys.readouterr()

    def test_trace_file_is_jsonl_with_summary(self, paths, tmp_path, capsys):
        out_path = tmp_path / "run.jsonl"
        assert main([
            "simulate", paths["fault1"], "--scenario", "F1",
            "--seed", "1", "--trace", str(out_path),
        ]) == 0
        capsys.readouterr()
        lines = out_path.read_text().splitlines()
        records = [json.loads(line) for line in lines]
        assert all("kind" in r for r in records[:-1])
        assert "summary" in records[-1]
        assert records[-1]["summary"]["outcome"] == "recovered"


class TestExport:
    def test_tcv_to_file_is_deterministic(self, paths, tmp_path, capsys):
        a, b = tmp_path / "a.dot", tmp_path / "b.dot"
        for target in (a, b):
            assert main([
                "export", paths["fault3"], "--view", "tcv",
                "--focus", "F3.2", "--out", str(target),
            ]) == 0
        capsys.readouterr()
        assert a.read_bytes() == b.read_bytes()
        text = a.read_text()
        assert text.startswith("digraph")
        assert "SoS boundary" in text

    def test_fav_stdout_has_two_detection_regions(self, paths, capsys):
        assert main([
            "export", paths["fault2"], "--view", "fav", "--focus", "F2.1",
        ]) == 0
        out = capsys.readouterr().out
        assert out.count('class="detection-region"') == 2

    def test_fts_needs_no_focus(self, paths, capsys):
        assert main(["export", paths["nominal"], "--view", "fts"]) == 0
        assert capsys.readouterr().out.startswith("digraph")

    def test_missing_focus_exits_two(self, paths, capsys):
        assert main(["export", paths["fault2"], "--view", "fav"]) == 2
        assert "focus" in capsys.readouterr().err

    def test_unknown_view_exits_two(self, paths, capsys):
        assert main(["export", paths["fault2"], "--view", "sideways"]) == 2
        capsys.readouterr()


class TestTopLevel:
    def test_no_subcommand_is_usage_error(self, capsys):
        assert main([]) == 2
        capsys.readouterr()

    def test_help_exits_zero(self, capsys):
        assert main(["--help"]) == 0
        assert "check" in capsys.readouterr().out
