"""Tests for the command-line interface."""

import csv

from click.testing import CliRunner

from genusdiff.cli import main
from genusdiff.validate import CHECKS


def test_run_writes_csv_and_summary(tmp_path):
    out = tmp_path / "costs.csv"
    args = [
        "run",
        "--depth", "2",
        "--branching", "2",
        "--encounters-per-leaf", "1",
        "--runs", "2",
        "--dim", "6",
        "--tail-size", "4",
        "--seed", "3",
        "--out", str(out),
    ]
    result = CliRunner().invoke(main, args)
    assert result.exit_code == 0, result.output
    assert "wrote" in result.output
    assert "predict_genus" in result.output
    rows = list(csv.DictReader(out.read_text().splitlines()))
    assert len(rows) == 4 * 2  # 4 encounters, 2 models
    assert {row["model"] for row in rows} == {"predict_genus", "naive"}


def test_run_reads_environment_overrides(tmp_path):
    out = tmp_path / "env.csv"
    env = {
        "GD_RUN_DEPTH": "2",
        "GD_RUN_BRANCHING": "2",
        "GD_RUN_ENCOUNTERS_PER_LEAF": "1",
        "GD_RUN_RUNS": "1",
        "GD_RUN_DIM": "6",
        "GD_RUN_TAIL_SIZE": "4",
        "GD_RUN_OUT": str(out),
    }
    result = CliRunner().invoke(main, ["run"], env=env)
    assert result.exit_code == 0, result.output
    assert out.exists()


def test_validate_reports_every_check():
    result = CliRunner().invoke(main, ["validate"])
    assert result.exit_code == 0, result.output
    lines = [line for line in result.output.splitlines() if line]
    assert len(lines) == len(CHECKS)
    assert all(line.startswith("PASS ") for line in lines)


def test_demo_help_mentions_the_ui():
    result = CliRunner().invoke(main, ["demo", "--help"])
    assert result.exit_code == 0
    assert "--interactive" in result.output
    assert "--port" in result.output
