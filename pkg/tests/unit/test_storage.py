"""
Unit tests for the storage utility.

This module tests canonical JSON and fingerprints, run output files, model
documents, JSONL and the corpus CSV format.
"""

import csv
import json

import pytest

from etnet.models import ClusterLabel, TimeSeries
from etnet.utils import storage
from etnet.utils.errors import DataFormatError, ModelFormatError
from etnet.utils.storage import RunStorage

pytestmark = pytest.mark.unit


def test_canonical_json_is_order_independent():
    """Test that key order does not change the rendering or fingerprint."""
    # Given
    a = {"b": 1, "a": [0.1, 2]}
    b = {"a": [0.1, 2], "b": 1}

    # Then
    assert storage.canonical_json(a) == '{"a":[0.1,2],"b":1}'
    assert storage.fingerprint(a) == storage.fingerprint(b)
    assert len(storage.fingerprint(a)) == 64
    assert storage.fingerprint(a) != storage.fingerprint({"a": [0.1, 3], "b": 1})


def test_run_storage_creates_directory(tmp_path):
    """Test JSON, JSONL and CSV outputs in a fresh directory."""
    # Given
    run = RunStorage(str(tmp_path / "out" / "run"))

    # When
    json_path = run.write_json("metrics.json", {"value": 0.5})
    jsonl_path = run.write_jsonl("labels.jsonl", [ClusterLabel(id="a", predicted_label=1)])
    csv_path = run.write_rows("table.csv", ["id", "x"], [["a", 1.5]])

    # Then
    assert json.loads(open(json_path).read()) == {"value": 0.5}
    assert json.loads(open(jsonl_path).read()) == {"id": "a", "predicted_label": 1, "label": None}
    assert list(csv.reader(open(csv_path))) == [["id", "x"], ["a", "1.5"]]


def test_document_round_trip(tmp_path):
    """Test write_document's fingerprint and read_document's version check."""
    # Given
    path = str(tmp_path / "model.json")
    document = {"format_version": "1.0.0", "weights": [1.0, 2.0]}

    # When
    digest = storage.write_document(document, path)

    # Then
    assert digest == storage.fingerprint(document)
    assert storage.read_document(path) == document


@pytest.mark.parametrize(
    "content",
    ["{not json", '{"weights": []}', "[1, 2]", '{"format_version": "3.0.0"}', '{"format_version": "1.5.0"}'],
)
def test_read_document_errors(tmp_path, content):
    """Test invalid JSON, missing versions and unsupported versions."""
    # Given
    path = tmp_path / "model.json"
    path.write_text(content)

    # When/Then
    with pytest.raises(ModelFormatError):
        storage.read_document(str(path))


def test_read_document_missing(tmp_path):
    """Test a model path that does not exist."""
    with pytest.raises(ModelFormatError):
        storage.read_document(str(tmp_path / "missing.json"))


def test_jsonl_round_trip(tmp_path):
    """Test writing records and reading them back, skipping blank lines."""
    # Given
    path = str(tmp_path / "rows.jsonl")
    rows = [ClusterLabel(id=str(i), predicted_label=i % 2) for i in range(3)]

    # When
    count = storage.write_jsonl(rows, path)
    with open(path, "a") as f:
        f.write("\n")

    # Then
    assert count == 3
    assert [ClusterLabel(**r) for r in storage.read_jsonl(path)] == rows


def test_jsonl_bad_line(tmp_path):
    """Test that a broken line reports its number."""
    # Given
    path = tmp_path / "rows.jsonl"
    path.write_text('{"a": 1}\n{oops\n')

    # When/Then
    with pytest.raises(DataFormatError) as exc:
        list(storage.read_jsonl(str(path)))
    assert exc.value.details["line"] == 2


def test_corpus_round_trip(tmp_path):
    """Test exact float round trip and empty labels."""
    # Given
    data = [
        TimeSeries(id="a", values=[0.1, 1 / 3, -2.5e-12], interval=90.0, label="anomaly-1"),
        TimeSeries(id="b", values=[4.0]),
    ]
    path = str(tmp_path / "c" / "corpus.csv")

    # When
    storage.write_corpus(data, path)

    # Then
    assert storage.read_corpus(path) == data


def test_parse_corpus_row_errors():
    """Test short rows and non-numeric values."""
    with pytest.raises(DataFormatError):
        storage.parse_corpus_row(["a", "60", ""], 1)
    with pytest.raises(DataFormatError) as exc:
        storage.parse_corpus_row(["a", "60", "", "x"], 7)
    assert exc.value.details["line"] == 7
    with pytest.raises(DataFormatError):
        storage.parse_corpus_row(["a", "-1", "", "1.0"], 2)


def test_read_corpus_empty(tmp_path):
    """Test that an empty corpus file is rejected."""
    path = tmp_path / "empty.csv"
    path.write_text("")
    with pytest.raises(DataFormatError):
        storage.read_corpus(str(path))
