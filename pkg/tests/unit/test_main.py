"""
Unit tests for the command-line entry point.

This module tests parser wiring, the JSON summary on stdout and the error
payload and exit status on failures.
"""

import json

import pytest

from etnet import main as cli
from etnet.commands import COMMANDS

pytestmark = pytest.mark.unit


def last_json(text):
    return json.loads(text.strip().splitlines()[-1])


@pytest.fixture
def spec_file(tmp_path):
    path = tmp_path / "spec.json"
    path.write_text(
        json.dumps(
            {
                "seed": 3,
                "length": 16,
                "directives": [
                    {"type": "wave", "kind": "sine", "count": 4, "period": 8, "phase_jitter": 0.5},
                    {"type": "anomaly", "anomaly_type": 3, "fraction": 0.25, "segment_length": 4},
                ],
            }
        )
    )
    return str(path)


def test_parser_registers_every_command():
    """Test that all subcommands are reachable."""
    # Given
    parser = cli.build_parser()

    # When
    args = parser.parse_args(["synth", "--spec", "s.json"])

    # Then
    assert len(COMMANDS) == 7
    assert args.command == "synth"
    assert callable(args.handler)
    assert parser.parse_args(["eval-dist", "--data", "d.csv"]).metric == "euclidean"


def test_missing_required_argument():
    """Test that usage errors exit with status 2."""
    with pytest.raises(SystemExit) as exc:
        cli.main(["score", "--data", "d.csv"])
    assert exc.value.code == 2


def test_synth_success(capsys, tmp_path, spec_file):
    """Test a successful command printing its summary."""
    # When
    status = cli.main(["--log-level", "ERROR", "synth", "--spec", spec_file, "--out", str(tmp_path / "out")])

    # Then
    assert status == 0
    summary = last_json(capsys.readouterr().out)
    assert summary["rows"] == 4
    assert summary["labels"] == {"normal": 3, "anomaly-3": 1}
    assert len(summary["sha256"]) == 64


def test_synth_is_reproducible(capsys, tmp_path, spec_file):
    """Test that the same spec and seed give the same corpus bytes."""
    # When
    cli.main(["--log-level", "ERROR", "synth", "--spec", spec_file, "--out", str(tmp_path / "a.csv")])
    first = last_json(capsys.readouterr().out)
    cli.main(["--log-level", "ERROR", "synth", "--spec", spec_file, "--out", str(tmp_path / "b.csv")])
    second = last_json(capsys.readouterr().out)
    cli.main(["--log-level", "ERROR", "synth", "--spec", spec_file, "--seed", "4", "--out", str(tmp_path / "c.csv")])
    third = last_json(capsys.readouterr().out)

    # Then
    assert first["sha256"] == second["sha256"]
    assert first["sha256"] != third["sha256"]


def test_domain_error_payload(capsys, tmp_path):
    """Test that a domain error prints its payload and exits with 1."""
    # When
    status = cli.main(["--log-level", "ERROR", "synth", "--spec", str(tmp_path / "missing.json")])

    # Then
    assert status == 1
    payload = last_json(capsys.readouterr().err)
    assert payload["success"] is False
    assert payload["error_type"] == "ConfigError"
    assert payload["details"]["path"].endswith("missing.json")


def test_invalid_spec_names_fields(capsys, tmp_path):
    """Test a generation spec failing validation."""
    # Given
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"directives": [{"type": "wave", "kind": "sine", "count": 0}]}))

    # When
    status = cli.main(["--log-level", "ERROR", "synth", "--spec", str(path)])

    # Then
    assert status == 1
    payload = last_json(capsys.readouterr().err)
    assert payload["error_type"] == "ConfigError"
    assert payload["details"]["fields"] == ["directives.0.wave.count"]


def test_unknown_model_file(capsys, tmp_path):
    """Test scoring against a model that does not exist."""
    # Given
    data = tmp_path / "d.csv"
    data.write_text("a,60.0,,1,2,3\n")

    # When
    status = cli.main(["--log-level", "ERROR", "score", "--model", str(tmp_path / "m.json"), "--data", str(data)])

    # Then
    assert status == 1
    assert last_json(capsys.readouterr().err)["error_type"] == "ModelFormatError"
