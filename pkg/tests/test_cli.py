"""Command-line entry points: play, bench, grade, and exit codes."""
from __future__ import annotations

import json
import subprocess
import sys

import pytest

from haplan.bench import read_report
from haplan.cli import cli_main


@pytest.fixture(scope="module")
def play_report(tmp_path_factory):
    """One finished episode report, shared by the play and grade tests."""
    out = tmp_path_factory.mktemp("play") / "report.json"
    code = cli_main(["play", "--layout", "solo_pot",
                     "--partner", "proxy:delivery::all",
                     "--backend", "oracle", "--out", str(out)])
    assert code == 0
    return out


class TestPlay:
    def test_report_carries_the_episode(self, play_report):
        report = json.loads(play_report.read_text())
        assert report["layout"] == "solo_pot"
        assert report["score"] >= 20
        assert report["score"] == report["deliveries"] * 20
        assert report["transcripts"]
        assert report["convention"]
        assert set(report["event_proportions"]) == {"ai", "human"}

    def test_summary_names_the_score(self, play_report, capsys, tmp_path):
        out = tmp_path / "r.json"
        code = cli_main(["play", "--layout", "solo_pot",
                         "--partner", "proxy:delivery::all",
                         "--horizon", "40", "--out", str(out)])
        captured = capsys.readouterr()
        assert code == 0
        assert "score" in captured.out
        assert str(out) in captured.out

    def test_unknown_layout_fails_with_message(self, capsys, tmp_path):
        code = cli_main(["play", "--layout", "atlantis",
                         "--partner", "proxy:delivery::all",
                         "--out", str(tmp_path / "r.json")])
        assert code == 1
        assert "unknown layout" in capsys.readouterr().err

    def test_bad_partner_spec_fails(self, capsys, tmp_path):
        code = cli_main(["play", "--layout", "solo_pot",
                         "--partner", "proxy:nonsense",
                         "--out", str(tmp_path / "r.json")])
        assert code == 1
        assert "error:" in capsys.readouterr().err


class TestUsage:
    def test_unknown_flag_exits_2(self, capsys):
        assert cli_main(["play", "--layout", "solo_pot",
                         "--partner", "proxy:delivery::all",
                         "--frobnicate"]) == 2

    def test_missing_required_flag_exits_2(self, capsys):
        assert cli_main(["play", "--layout", "solo_pot"]) == 2

    def test_no_subcommand_exits_2(self, capsys):
        assert cli_main([]) == 2

    def test_help_exits_0(self, capsys):
        assert cli_main(["--help"]) == 0
        assert "play" in capsys.readouterr().out

    def test_bad_profile_choice_exits_2(self, capsys):
        assert cli_main(["play", "--layout", "solo_pot",
                         "--partner", "proxy:delivery::all",
                         "--profile", "haplan-9"]) == 2

    def test_module_invocation_works(self):
        proc = subprocess.run([sys.executable, "-m", "haplan", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "bench" in proc.stdout


class TestBenchReasoning:
    def test_oracle_hits_everything(self, capsys):
        code = cli_main(["bench", "reasoning", "--task", "lastletter",
                         "--sessions", "2", "--lengths", "4",
                         "--backend", "oracle", "--n", "10"])
        captured = capsys.readouterr()
        assert code == 0
        assert "accuracy 1.000" in captured.out

    def test_one_record_per_length(self, tmp_path, capsys):
        out = tmp_path / "reasoning.jsonl"
        code = cli_main(["bench", "reasoning", "--task", "lastletter",
                         "--lengths", "4,8", "--n", "4",
                         "--out", str(out)])
        assert code == 0
        records = read_report(out)
        assert [r["length"] for r in records] == [4, 8]
        assert all(r["mean"] == 1.0 for r in records)

    def test_scan_ignores_lengths(self, tmp_path, capsys):
        out = tmp_path / "scan.jsonl"
        code = cli_main(["bench", "reasoning", "--task", "scan",
                         "--sessions", "3", "--n", "5", "--out", str(out)])
        assert code == 0
        records = read_report(out)
        assert len(records) == 1
        assert records[0]["length"] is None

    def test_bad_lengths_fail_with_message(self, capsys):
        code = cli_main(["bench", "reasoning", "--task", "lastletter",
                         "--lengths", "4,x"])
        assert code == 1
        assert "--lengths" in capsys.readouterr().err

    def test_bad_task_exits_2(self, capsys):
        assert cli_main(["bench", "reasoning", "--task", "sudoku"]) == 2


class TestBenchCoord:
    def test_sweep_writes_a_report(self, tmp_path, capsys):
        out = tmp_path / "coord.jsonl"
        code = cli_main(["bench", "coord", "--layouts", "solo_pot",
                         "--partners", "proxy:delivery::all",
                         "--episodes", "2", "--out", str(out)])
        captured = capsys.readouterr()
        assert code == 0
        records = read_report(out)
        assert len(records) == 1
        assert set(records[0]) == {"layout", "partner", "sessions",
                                   "backend", "n", "mean", "std"}
        assert records[0]["mean"] >= 20
        assert "solo_pot" in captured.out

    def test_empty_partner_list_fails(self, capsys):
        code = cli_main(["bench", "coord", "--layouts", "solo_pot",
                         "--partners", ","])
        assert code == 1
        assert "--partners" in capsys.readouterr().err


class TestGrade:
    def test_clean_report_grades_clean(self, play_report, capsys):
        code = cli_main(["grade", "--report", str(play_report)])
        captured = capsys.readouterr()
        assert code == 0
        assert "final" in captured.out
        assert "FAIL" not in captured.out

    def test_corrupted_transcript_fails_its_stage(self, play_report,
                                                  tmp_path, capsys):
        report = json.loads(play_report.read_text())
        victim = next(t for t in report["transcripts"]
                      if t["stage"] == "rough")
        victim["response"] = "no plan today"
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(report))
        code = cli_main(["grade", "--report", str(bad)])
        captured = capsys.readouterr()
        assert code == 1
        assert "rough" in captured.out and "FAIL" in captured.out

    def test_missing_file_fails(self, capsys, tmp_path):
        code = cli_main(["grade", "--report", str(tmp_path / "nope.json")])
        assert code == 1

    def test_non_json_file_fails(self, capsys, tmp_path):
        path = tmp_path / "scrambled.json"
        path.write_text("not json {")
        code = cli_main(["grade", "--report", str(path)])
        assert code == 1
        assert "not valid JSON" in capsys.readouterr().err

    def test_report_without_fields_fails(self, capsys, tmp_path):
        path = tmp_path / "thin.json"
        path.write_text(json.dumps({"layout": "solo_pot"}))
        code = cli_main(["grade", "--report", str(path)])
        assert code == 1
        assert "required field" in capsys.readouterr().err
