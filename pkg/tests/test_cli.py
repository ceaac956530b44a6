import json
import subprocess
import sys

from irqverify.cli import main

from conftest import corpus_path


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------


def test_analyze_exit_one_on_warnings(capsys):
    code, out, _ = run_cli(capsys, "analyze", str(corpus_path("three_priorities")))
    assert code == 1
    assert "irq_M#0" in out and "Proved" in out and "Warning" in out


def test_analyze_exit_zero_when_all_proved(capsys, tmp_path):
    src = tmp_path / "ok.irq"
    src.write_text("global x = 0; handler h priority 0 { x = 1; assert(x == 1); }\n")
    code, out, _ = run_cli(capsys, "analyze", str(src))
    assert code == 0
    assert "Proved" in out


def test_analyze_exit_zero_without_assertions(capsys):
    code, out, _ = run_cli(capsys, "analyze", str(corpus_path("trace_subset")))
    assert code == 0
    assert "(no assertions)" in out


def test_analyze_json_schema_and_values(capsys):
    code, out, _ = run_cli(capsys, "analyze", "--json", str(corpus_path("three_priorities")))
    assert code == 1
    payload = json.loads(out)
    verdicts = {v["assertion_id"]: v["verdict"] for v in payload["verdicts"]}
    assert verdicts == {"irq_H#0": "Warning", "irq_L#0": "Warning", "irq_M#0": "Proved"}
    assert payload["pairs"] == {"total": 3, "pruned": 1, "ratio": 1 / 3}
    assert payload["pruning_enabled"] is True


def test_analyze_no_pruning_degrades_verdict(capsys):
    code, out, _ = run_cli(capsys, "analyze", "--json", "--no-pruning",
                           str(corpus_path("three_priorities")))
    payload = json.loads(out)
    verdicts = {v["assertion_id"]: v["verdict"] for v in payload["verdicts"]}
    assert verdicts["irq_M#0"] == "Warning"
    assert payload["pruning_enabled"] is False


def test_analyze_parse_error_exit_two(capsys, tmp_path):
    src = tmp_path / "bad.irq"
    src.write_text("handler h priority 0 { y = 1; }\n")
    code, out, err = run_cli(capsys, "analyze", str(src))
    assert code == 2
    assert "error" in err and "y" in err


def test_analyze_missing_file_exit_two(capsys):
    code, _, err = run_cli(capsys, "analyze", "/nonexistent/file.irq")
    assert code == 2
    assert "error" in err


def test_analyze_bad_config_exit_two(capsys):
    code, _, err = run_cli(capsys, "analyze", "--max-iters", "0",
                           str(corpus_path("three_priorities")))
    assert code == 2
    assert "error" in err


def test_analyze_dump_flags(capsys):
    code, out, _ = run_cli(capsys, "analyze", "--dump-cfg", "--dump-facts",
                           str(corpus_path("loop_store_overwrite")))
    assert "cfg irq0" in out and "cfg irq1" in out
    assert "MustNotReadFrom(irq0:1, irq1:4, x)" in out
    assert any(line.startswith("dom ") for line in out.splitlines())


# ---------------------------------------------------------------------------
# facts / oracle / compare
# ---------------------------------------------------------------------------


def test_facts_output_sorted(capsys):
    code, out, _ = run_cli(capsys, "facts", str(corpus_path("three_priorities")))
    assert code == 0
    lines = [l for l in out.splitlines() if l]
    assert lines == sorted(lines)
    assert any(l.startswith("NoPreempt(") for l in lines)


def test_oracle_json_output(capsys):
    code, out, _ = run_cli(capsys, "oracle", "--track-flows", "--oracle-budget", "1",
                           str(corpus_path("three_priorities")))
    assert code == 0
    payload = json.loads(out)
    assert payload["violated"] == ["irq_H#0", "irq_L#0"]
    assert payload["truncated"] is False
    assert any(f["var"] == "x" for f in payload["flows"])


def test_compare_reports_all_columns(capsys):
    code, out, _ = run_cli(capsys, "compare", "--json", "--oracle-budget", "2",
                           str(corpus_path("loop_store_overwrite")))
    assert code == 0
    payload = json.loads(out)
    (row,) = payload["rows"]
    assert row == {"assertion_id": "irq0#0", "handler": "irq0", "pruning": "Proved",
                   "no_pruning": "Warning", "oracle": "ok"}
    assert payload["sound"] is True
    assert payload["oracle_skipped"] is False
    assert payload["pairs"]["total"] == 2


def test_compare_human_table(capsys):
    code, out, _ = run_cli(capsys, "compare", str(corpus_path("three_priorities")))
    assert code == 0
    assert "no-pruning" in out and "oracle" in out
    assert "violated" in out  # the two genuine warnings


def test_compare_oracle_ceiling_marks_skipped(capsys, tmp_path, monkeypatch):
    import irqverify.cli as cli_mod
    from irqverify import OracleLimitError

    def boom(program, config):
        raise OracleLimitError("too many executions")

    monkeypatch.setattr(cli_mod, "enumerate_executions", boom)
    code, out, _ = run_cli(capsys, "compare", "--json", str(corpus_path("three_priorities")))
    assert code == 0
    payload = json.loads(out)
    assert payload["oracle_skipped"] is True
    assert all(row["oracle"] == "skipped" for row in payload["rows"])


def test_entry_point_via_module():
    proc = subprocess.run(
        [sys.executable, "-m", "irqverify", "analyze", "--json", str(corpus_path("three_priorities"))],
        capture_output=True, text=True)
    assert proc.returncode == 1
    assert json.loads(proc.stdout)["iterations"] >= 1


def test_cli_byte_identical_across_runs():
    args = [sys.executable, "-m", "irqverify"]
    for sub in (["analyze", "--json"], ["facts"],
                ["oracle", "--track-flows", "--oracle-budget", "1"],
                ["compare", "--json", "--oracle-budget", "1"]):
        cmd = args + sub + [str(corpus_path("branch_overwrites"))]
        a = subprocess.run(cmd, capture_output=True)
        b = subprocess.run(cmd, capture_output=True)
        assert a.stdout == b.stdout and a.returncode == b.returncode
