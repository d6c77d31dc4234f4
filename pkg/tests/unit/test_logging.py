"""
Unit tests for the logging utility.

This module tests structured event logging, metric logging and run
tracking for CLI commands.
"""

import json
import logging

import numpy as np
import pytest

from etnet.utils import logging as etnet_logging
from etnet.utils.logging import log_event, log_metrics, track_run

pytestmark = pytest.mark.unit


def events(caplog):
    return [json.loads(r.getMessage()) for r in caplog.records if r.name == "etnet"]


@pytest.fixture(autouse=True)
def capture(caplog):
    caplog.set_level(logging.INFO, logger="etnet")


def test_log_event(caplog):
    """Test structured event logging."""
    # Given
    event_type = "test_event"
    data = {"key": "value"}

    # When
    log_event(event_type, data, "run-1")

    # Then
    log_data = events(caplog)[-1]
    assert log_data["event_type"] == event_type
    assert log_data["data"] == data
    assert log_data["run_id"] == "run-1"
    assert "timestamp" in log_data


def test_log_event_numpy_values(caplog):
    """Test that numpy scalars and arrays are rendered as JSON."""
    # When
    log_event("arrays", {"x": np.float64(0.5), "v": np.arange(3), "n": np.int64(2)})

    # Then
    assert events(caplog)[-1]["data"] == {"x": 0.5, "v": [0, 1, 2], "n": 2}
    assert events(caplog)[-1]["run_id"] is None


def test_log_metrics(caplog):
    """Test numeric metrics under a namespace."""
    # When
    log_metrics("training", {"loss": np.float32(1.5), "epoch": 3})

    # Then
    log_data = events(caplog)[-1]
    assert log_data["event_type"] == "metrics"
    assert log_data["data"] == {"namespace": "training", "values": {"loss": 1.5, "epoch": 3.0}}


def test_track_run_success(caplog):
    """Test start and end events around a command."""

    # Given
    @track_run("demo")
    def command(x):
        return x * 2

    # When
    result = command(4)

    # Then
    assert result == 8
    logged = events(caplog)
    assert [e["event_type"] for e in logged[-2:]] == ["run_start", "run_end"]
    assert logged[-1]["data"]["success"] is True
    assert logged[-1]["data"]["command"] == "demo"


def test_track_run_error(caplog):
    """Test that failures are logged and re-raised."""

    # Given
    @track_run("demo")
    def command():
        raise ValueError("boom")

    # When/Then
    with pytest.raises(ValueError):
        command()
    error = events(caplog)[-1]
    assert error["event_type"] == "run_error"
    assert error["data"]["error"] == "boom"
    assert error["data"]["error_type"] == "ValueError"


def test_configure_is_idempotent():
    """Test that repeated configuration attaches a single handler."""
    # When
    etnet_logging.configure("debug")
    etnet_logging.configure("info")

    # Then
    ours = [h for h in etnet_logging.logger.handlers if getattr(h, "_etnet", False)]
    assert len(ours) == 1
    assert etnet_logging.logger.level == logging.INFO
