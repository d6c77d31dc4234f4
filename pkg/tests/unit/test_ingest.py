"""
Unit tests for dataset ingestion and the train/test split.
"""

import pytest

from etnet.models import TimeSeries
from etnet.services import ingest
from etnet.utils.errors import ConfigError, DataFormatError
from etnet.utils.storage import write_corpus

pytestmark = pytest.mark.unit


def labelled(n_normal, n_anomaly):
    normals = [TimeSeries(id=f"n{i}", values=[0.0, 1.0], label="normal") for i in range(n_normal)]
    anomalies = [TimeSeries(id=f"a{i}", values=[9.0, 9.0], label="anomaly-2") for i in range(n_anomaly)]
    return normals + anomalies


def test_window_stream_drops_remainder():
    """Test non-overlapping windows with sequential ids."""
    # When
    windows = ingest.window_stream(range(10), 3, interval=30.0)

    # Then
    assert [w.values for w in windows] == [[0.0, 1.0, 2.0], [3.0, 4.0, 5.0], [6.0, 7.0, 8.0]]
    assert [w.id for w in windows] == ["000000", "000001", "000002"]
    assert windows[0].interval == 30.0
    with pytest.raises(ConfigError):
        ingest.window_stream(range(10), 1)


def test_ingest_stream_file(tmp_path):
    """Test a single-column file cut into windows."""
    # Given
    path = tmp_path / "stream.csv"
    path.write_text("\n".join(str(v) for v in range(25)) + "\n")

    # When
    data = ingest.ingest(str(path), window_length=12)

    # Then
    assert len(data) == 2
    assert data[1].values[0] == 12.0


def test_ingest_corpus_file(tmp_path, wave_corpus):
    """Test that a corpus CSV comes back row for row."""
    # Given
    path = str(tmp_path / "corpus.csv")
    write_corpus(wave_corpus, path)

    # When
    data = ingest.ingest(path, window_length=5)

    # Then
    assert data == wave_corpus


@pytest.mark.parametrize(
    "content,window",
    [
        ("", 4),
        ("1\n2\nthree\n4\n", 2),
        ("1\n2\n3\n", 4),
        ("id,60,normal\n", 4),
        ("x,sixty,,1,2\n", 4),
    ],
)
def test_ingest_malformed(tmp_path, content, window):
    """Test empty files, bad numbers, short streams and short rows."""
    # Given
    path = tmp_path / "bad.csv"
    path.write_text(content)

    # When/Then
    with pytest.raises(DataFormatError):
        ingest.ingest(str(path), window_length=window)


def test_ingest_missing_file(tmp_path):
    """Test a path that does not exist."""
    with pytest.raises(DataFormatError) as exc:
        ingest.ingest(str(tmp_path / "nope.csv"))
    assert exc.value.details["path"].endswith("nope.csv")


def test_split_sends_anomalies_to_test():
    """Test that a clean split keeps labelled anomalies out of training."""
    # Given
    data = labelled(16, 4)

    # When
    train, test = ingest.split(data, train_fraction=0.5, seed=3)

    # Then
    assert len(train) == 10
    assert len(test) == 10
    assert not any(s.is_anomaly for s in train)
    assert sum(s.is_anomaly for s in test) == 4
    assert {s.id for s in train} | {s.id for s in test} == {s.id for s in data}


def test_split_contamination_share():
    """Test floor(contamination * n_train) anomalies in training."""
    # When
    train, test = ingest.split(labelled(16, 4), train_fraction=0.5, seed=3, contamination=0.2)

    # Then
    assert sum(s.is_anomaly for s in train) == 2
    assert len(train) == 10
    assert len(test) == 10


def test_split_is_seeded():
    """Test that the same seed gives the same partition."""
    data = labelled(10, 0)
    assert ingest.split(data, seed=5) == ingest.split(data, seed=5)


@pytest.mark.parametrize("fraction", [0.0, 1.0, 1.5])
def test_split_rejects_bad_fraction(fraction):
    """Test train fractions outside (0, 1)."""
    with pytest.raises(ConfigError):
        ingest.split(labelled(4, 0), train_fraction=fraction)
