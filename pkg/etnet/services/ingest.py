"""
Dataset ingestion: corpus CSV files or raw single-column value streams cut
into non-overlapping windows, and the train/test split.
"""

import csv
import math
from typing import List, Sequence, Tuple

import numpy as np

from ..models import TimeSeries
from ..utils.errors import ConfigError, DataFormatError
from ..utils.logging import log_event
from ..utils.storage import parse_corpus_row


def window_stream(
    values: Sequence[float], window_length: int, interval: float = 60.0
) -> List[TimeSeries]:
    """Non-overlapping windows; the trailing remainder is dropped"""
    if window_length < 2:
        raise ConfigError("Window length must be at least 2", {"window_length": window_length})
    stream = np.asarray(values, dtype=np.float64)
    n = stream.size // window_length
    return [
        TimeSeries(
            id=f"{i:06d}",
            values=stream[i * window_length : (i + 1) * window_length].tolist(),
            interval=interval,
        )
        for i in range(n)
    ]


def _parse_stream(rows: List[Tuple[int, List[str]]], path: str) -> List[float]:
    values = []
    for line_no, row in rows:
        try:
            values.append(float(row[0]))
        except ValueError:
            raise DataFormatError(
                f"Line {line_no}: not a number: {row[0]!r}", {"path": path, "line": line_no}
            ) from None
    return values


def ingest(path: str, window_length: int = 120, interval: float = 60.0) -> List[TimeSeries]:
    """Read a corpus CSV as-is, or window a raw single-column stream"""
    try:
        with open(path, encoding="utf-8", newline="") as f:
            rows = [(n, row) for n, row in enumerate(csv.reader(f), start=1) if row]
    except FileNotFoundError:
        raise DataFormatError(f"Data file not found: {path}", {"path": path}) from None
    if not rows:
        raise DataFormatError(f"Data file is empty: {path}", {"path": path})

    if all(len(row) == 1 for _, row in rows):
        data = window_stream(_parse_stream(rows, path), window_length, interval)
        if not data:
            raise DataFormatError(
                f"Stream of {len(rows)} values is shorter than one window of {window_length}",
                {"path": path, "values": len(rows), "window_length": window_length},
            )
        log_event(
            "ingested",
            {"path": path, "format": "stream", "windows": len(data), "dropped": len(rows) % window_length},
        )
        return data

    data = [parse_corpus_row(row, n) for n, row in rows]
    log_event("ingested", {"path": path, "format": "corpus", "series": len(data)})
    return data


def split(
    data: Sequence[TimeSeries],
    train_fraction: float = 0.4,
    seed: int = 0,
    contamination: float = 0.0,
) -> Tuple[List[TimeSeries], List[TimeSeries]]:
    """Shuffle and split; labelled anomalies go to the test side unless
    ``contamination`` asks for a share of the training set"""
    if not 0.0 < train_fraction < 1.0:
        raise ConfigError("train_fraction must lie in (0, 1)", {"train_fraction": train_fraction})
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(data))
    normals = [data[i] for i in order if not data[i].is_anomaly]
    anomalies = [data[i] for i in order if data[i].is_anomaly]

    n_train = min(int(math.floor(train_fraction * len(data))), len(normals) + len(anomalies))
    n_bad = min(int(math.floor(contamination * n_train)), len(anomalies))
    n_good = min(n_train - n_bad, len(normals))
    train = normals[:n_good] + anomalies[:n_bad]
    test = normals[n_good:] + anomalies[n_bad:]
    log_event(
        "split",
        {"train": len(train), "test": len(test), "contaminated": n_bad, "seed": seed},
    )
    return train, test
