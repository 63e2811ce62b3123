"""
Tests for the pcv command line
"""

import json
from pathlib import Path

import pytest

import pcv.cli
from pcv.cli import (
    EXIT_CONSISTENT,
    EXIT_DISAGREEMENT,
    EXIT_ERROR,
    EXIT_INCONSISTENT,
    PolicyCheckCLI,
    exit_status,
    format_report,
    main,
)
from pcv.config import RunConfig
from pcv.verdicts import InconsistencyReport, Verdict, Witness

CORPUS = Path(__file__).resolve().parent.parent / "corpus"

PRIVATE = str(CORPUS / "private.spl")
PRIVATE_DOM = str(CORPUS / "private.dom")
NOSEND_DOM = str(CORPUS / "private_nosend.dom")


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch, tmp_path):
    for name in ("PCV_BUDGET", "PCV_FORMAT", "PCV_ASSUME", "PCV_LOG_LEVEL"):
        monkeypatch.delenv(name, raising=False)
    monkeypatch.chdir(tmp_path)


def _check(*extra: str, domain: str = PRIVATE_DOM) -> int:
    return main(["check", "--policy", PRIVATE, "--domain", domain, *extra])


def _report(verdict: Verdict) -> InconsistencyReport:
    return InconsistencyReport(goal="inapplicability", policies=["Private"], domain="private", verdict=verdict)


class TestCheckCommand:
    """Exit codes and report formats"""

    def test_consistent(self, capsys):
        assert _check("--goal", "inapplicability") == EXIT_CONSISTENT
        output = capsys.readouterr().out
        assert "✅ inapplicability: no inconsistency" in output
        assert "Witness: event(" in output

    def test_inconsistent(self, capsys):
        assert _check("--goal", "inapplicability", domain=NOSEND_DOM) == EXIT_INCONSISTENT
        assert "❌ inapplicability: inconsistency found" in capsys.readouterr().out

    def test_structured(self, capsys):
        code = _check("--goal", "inapplicability", "--goal", "monotonic-deny", "--format", "structured")
        assert code == EXIT_CONSISTENT
        lines = capsys.readouterr().out.strip().splitlines()
        reports = [json.loads(line) for line in lines]
        assert [r["goal"] for r in reports] == ["inapplicability", "monotonic-deny"]
        assert reports[0]["schema_version"] == 1
        assert reports[0]["verdict"]["kind"] == "no_inconsistency"
        assert reports[0]["verdict"]["search"] == "witness_found"
        assert reports[0]["statistics"]["elapsed"] == 0.0

    def test_output_file(self, tmp_path, capsys):
        target = tmp_path / "report.jsonl"
        assert _check("--goal", "inapplicability", "--format", "structured", "--output", str(target)) == 0
        assert json.loads(target.read_text(encoding="utf-8"))["domain"] == "private"
        assert "Report written to" in capsys.readouterr().out

    def test_budget_exhaustion_is_an_error(self, capsys):
        assert _check("--goal", "inapplicability", "--budget", "1") == EXIT_ERROR
        assert "step budget exhausted" in capsys.readouterr().out

    @pytest.mark.parametrize("extra", [
        ["--goal", "everything"],
        ["--goal", "inapplicability", "--budget", "0"],
        ["--goal", "wf-consistency"],
    ])
    def test_invalid_configuration(self, extra, capsys):
        assert _check(*extra) == EXIT_ERROR
        assert "Invalid configuration" in capsys.readouterr().out

    def test_missing_file(self, capsys):
        code = main(["check", "--policy", "missing.spl", "--domain", PRIVATE_DOM, "--goal", "inapplicability"])
        assert code == EXIT_ERROR
        assert "Cannot read input" in capsys.readouterr().out

    def test_no_command(self, capsys):
        assert main([]) == EXIT_ERROR

    def test_oracle_agrees(self, capsys):
        assert _check("--goal", "inapplicability", "--oracle-check") == EXIT_CONSISTENT
        assert "Oracle agrees" in capsys.readouterr().out

    def test_oracle_disagreement(self, monkeypatch, capsys):
        monkeypatch.setattr(pcv.cli, "oracle_goal", lambda inputs, request: Verdict.inconsistency())
        assert _check("--goal", "inapplicability", "--oracle-check") == EXIT_DISAGREEMENT
        err = capsys.readouterr().err
        discrepancies = json.loads(err[err.index("[\n"):])
        assert discrepancies[0]["goal"] == "inapplicability"
        assert discrepancies[0]["oracle"]["kind"] == "inconsistency_found"

    def test_dump_rules(self, capsys):
        assert _check("--goal", "inapplicability", "--dump-rules") == EXIT_CONSISTENT
        assert "% policy Private" in capsys.readouterr().out

    async def test_check_coroutine(self):
        config = RunConfig(policies=[PRIVATE], domain=PRIVATE_DOM, goals=["monotonic-allow"])
        cli = PolicyCheckCLI(config)
        assert await cli.check() == EXIT_CONSISTENT
        assert cli.inputs.domain.name == "private"


class TestDumpCommand:
    """Printing compiled rules"""

    def test_policy_and_workflow(self, capsys):
        code = main(["dump", "--policy", PRIVATE, "--workflow", str(CORPUS / "budget.wf")])
        assert code == EXIT_CONSISTENT
        output = capsys.readouterr().out
        assert "% policy Private" in output
        assert "private @ private(" in output
        assert "% workflow BudgetApproval" in output

    def test_packs(self, capsys):
        assert main(["dump", "--packs"]) == EXIT_CONSISTENT
        assert "% pack order_equality" in capsys.readouterr().out

    def test_validate(self, capsys):
        code = main(["dump", "--policy", PRIVATE, "--workflow", str(CORPUS / "budget.wf"), "--validate"])
        assert code == EXIT_CONSISTENT
        assert "All packs and the program are valid" in capsys.readouterr().out

    def test_bad_policy(self, tmp_path, capsys):
        broken = tmp_path / "broken.spl"
        broken.write_text("policy P( {", encoding="utf-8")
        assert main(["dump", "--policy", str(broken)]) == EXIT_ERROR
        assert "broken.spl:1" in capsys.readouterr().out


class TestReports:
    """Exit status and human-readable lines"""

    def test_exit_status(self):
        assert exit_status([]) == EXIT_CONSISTENT
        assert exit_status([_report(Verdict.consistent()), _report(Verdict.inconsistency())]) == EXIT_INCONSISTENT
        assert exit_status([_report(Verdict.inconsistency()), _report(Verdict.error("x"))]) == EXIT_ERROR

    def test_trace_lines(self):
        verdict = Verdict.consistent(Witness(trace={"a0": "event(a)", "a1": "event(b)"}))
        text = format_report(_report(verdict))
        assert "Trace:" in text
        assert "a1: event(b)" in text

    def test_error_lines(self):
        assert "⚠️  inapplicability: error - boom" in format_report(_report(Verdict.error("boom")))
