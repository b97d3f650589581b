"""
Tests for the command-line harness
"""
import json

import pytest

from harness_cli import (
    EXIT_CONFIG,
    EXIT_GOLDEN_MISMATCH,
    EXIT_OK,
    EXIT_REJECT,
    GOLDEN,
    cmd_demo_example,
    format_positions,
    format_signature,
    format_tree,
    main,
    parse_op,
    parse_ops,
    worked_example_values,
)
from qubit_core import HADAMARD, PAULI_X, PAULI_Z, InvalidArgumentError


# =============================================================================
# Worked example
# =============================================================================

def test_worked_example_matches_golden_values():
    assert worked_example_values() == GOLDEN


def test_demo_example_prints_golden_values(capsys):
    assert main(["demo-example"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "(10; 1, 0 · 11; 1, 1)" in out
    assert "(2; 1 · 3; 1)" in out
    assert "(|1⟩,|0⟩,|0⟩,|0⟩,|+⟩,|0⟩,|0⟩,|0⟩)" in out
    assert "(2,4,6,7)" in out


def test_demo_example_reports_mismatch(capsys):
    golden = dict(GOLDEN, diff=(1, 2, 3, 4))
    assert cmd_demo_example(golden) == EXIT_GOLDEN_MISMATCH
    assert "diff" in capsys.readouterr().out


def test_formatters():
    assert format_tree((("11",), ("1", "1")), (("10",),)) == "(11; 1, 1 · 10)"
    assert format_signature(["0", None]) == "(|0⟩,|?⟩)"
    assert format_positions((3, 5)) == "(3,5)"


# =============================================================================
# Ops parsing
# =============================================================================

def test_parse_ops_defaults_to_every_rank():
    ops = parse_ops("X", 3)
    assert [rank for rank, _ in ops] == [1, 2, 3]
    assert all(u is PAULI_X for _, u in ops)


def test_parse_ops_ranked_items():
    ops = parse_ops("1:H; 3:z", 4)
    assert ops == [(1, HADAMARD), (3, PAULI_Z)]
    assert len(parse_ops("all:identity", 2)) == 2


def test_parse_custom_matrix():
    u = parse_op("custom=[[[0, 0], [1, 0]], [[1, 0], [0, 0]]]")
    assert u.name == "custom"
    assert u.matrix[0, 1] == 1


@pytest.mark.parametrize("spec", ["5:X", "Q", "", "custom=[[1]]", "custom=[[[1,0],[1,0]],[[0,0],[1,0]]]"])
def test_parse_ops_rejects_bad_specs(spec):
    with pytest.raises(InvalidArgumentError):
        parse_ops(spec, 4)


# =============================================================================
# Subcommands
# =============================================================================

def test_run_honest_writes_deterministic_transcript(tmp_path, config_file):
    path = config_file()
    outputs = [tmp_path / "t1.json", tmp_path / "t2.json"]
    for out in outputs:
        assert main(["run-honest", "--config", str(path), "--out", str(out)]) == EXIT_OK
    assert outputs[0].read_bytes() == outputs[1].read_bytes()
    doc = json.loads(outputs[0].read_text(encoding="utf-8"))
    assert doc["verdict"]["accepted"] is True
    assert doc["header"]["seed"] == 7


def test_run_honest_seed_override(tmp_path, config_file):
    out = tmp_path / "t.json"
    assert main(["run-honest", "--config", str(config_file()), "--seed", "11", "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text(encoding="utf-8"))["header"]["seed"] == 11


def test_run_honest_config_error(tmp_path, config_file):
    path = config_file(key_a="10")
    assert main(["run-honest", "--config", str(path), "--out", str(tmp_path / "t.json")]) == EXIT_CONFIG


def test_run_attack_succeeds_under_ideal_comparator(tmp_path, config_file, capsys):
    out = tmp_path / "attack.json"
    code = main(["run-attack", "--config", str(config_file()), "--trials", "3", "--oracle", "--out", str(out)])
    assert code == EXIT_OK
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["success_rate"] == 1.0
    assert report["unsigned_forgeries"] == 3
    assert report["attempts"][0]["expected_positions"] == [2, 4, 6, 7]
    assert "(2,4,6,7)" in capsys.readouterr().out


def test_run_attack_below_threshold_with_weak_swap_test(tmp_path, config_file):
    path = config_file(comparator={"kind": "swap", "m": 1})
    code = main(["run-attack", "--config", str(path), "--trials", "200", "--threshold", "0.5",
                 "--out", str(tmp_path / "attack.json")])
    assert code == EXIT_REJECT


def test_run_attack_bad_ops(tmp_path, config_file):
    code = main(["run-attack", "--config", str(config_file()), "--ops", "9:X",
                 "--out", str(tmp_path / "attack.json")])
    assert code == EXIT_CONFIG


def test_tamper_stats_message_class(config_file, capsys):
    code = main(["tamper-stats", "--class", "message", "--op", "X", "--trials", "50",
                 "--config", str(config_file())])
    assert code == EXIT_OK
    assert "0.0000 (0/50)" in capsys.readouterr().out


def test_swap_stats_table(capsys):
    assert main(["swap-stats", "--m", "1,2", "--cases", "0,1", "--trials", "200"]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 5


def test_swap_stats_bad_lists():
    assert main(["swap-stats", "--m", "a", "--cases", "0", "--trials", "10"]) == EXIT_CONFIG
    assert main(["swap-stats", "--m", "0", "--cases", "0", "--trials", "10"]) == EXIT_CONFIG


def test_log_file_option(tmp_path):
    log_path = tmp_path / "run.log"
    assert main(["--log-file", str(log_path), "--verbose", "demo-example"]) == EXIT_OK
    assert log_path.exists()
