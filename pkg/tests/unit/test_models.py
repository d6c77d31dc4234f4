"""
Unit tests for the data models.
"""

import numpy as np
import pytest
from pydantic import ValidationError

from etnet.models import (
    EventSpec,
    ModelConfig,
    ScoredSample,
    SynthSpec,
    TimeSeries,
    WaveDirective,
)

pytestmark = pytest.mark.unit


def test_time_series_basics():
    """Test the array view, length and label helpers."""
    # Given
    series = TimeSeries(id="a", values=[1.0, 2.0, 3.0], label="anomaly-4")

    # Then
    assert series.length == 3
    assert series.array.dtype == np.float64
    assert series.interval == 60.0
    assert series.is_anomaly
    assert not TimeSeries(id="b", values=[1.0], label="normal").is_anomaly
    assert not TimeSeries(id="c", values=[1.0], label="square").is_anomaly
    assert not TimeSeries(id="d", values=[1.0]).is_anomaly


def test_time_series_with_values_is_a_copy():
    """Test that with_values leaves the original untouched."""
    # Given
    series = TimeSeries(id="a", values=[1.0, 2.0], label="normal")

    # When
    changed = series.with_values(np.array([5.0, 6.0, 7.0]), label="anomaly-1")

    # Then
    assert series.values == [1.0, 2.0]
    assert changed.values == [5.0, 6.0, 7.0]
    assert changed.id == "a"
    assert changed.label == "anomaly-1"


@pytest.mark.parametrize("values,interval", [([], 60.0), ([1.0], 0.0)])
def test_time_series_validation(values, interval):
    """Test empty series and non-positive intervals."""
    with pytest.raises(ValidationError):
        TimeSeries(id="x", values=values, interval=interval)


@pytest.mark.parametrize(
    "indicator,intensity",
    [([1, 0], [1.0]), ([2, 0], [1.0, 1.0]), ([1, 0], [-1.0, 1.0])],
)
def test_event_spec_validation(indicator, intensity):
    """Test lengths, binary indicators and non-negative intensity."""
    with pytest.raises(ValidationError):
        EventSpec(kind="MTC", indicator=indicator, intensity=intensity)


def test_model_config_short_names():
    """Test that the dump uses the short hyperparameter names."""
    # When
    dumped = ModelConfig(N_E=2, K=3, lambda_energy=0.2).dump()

    # Then
    assert dumped["N_E"] == 2
    assert dumped["K"] == 3
    assert dumped["lambda"] == 0.2
    assert dumped["eps_reg"] == 1e-6
    assert "n_tasks" not in dumped


def test_synth_spec_discriminates_directives():
    """Test directive dispatch on the type field."""
    # When
    spec = SynthSpec.model_validate(
        {"directives": [{"type": "wave", "kind": "square", "count": 2}, {"type": "noise", "noise_type": 4, "level": 0.1}]}
    )

    # Then
    assert isinstance(spec.directives[0], WaveDirective)
    assert spec.directives[1].fraction == 1.0
    with pytest.raises(ValidationError):
        SynthSpec.model_validate({"directives": []})
    with pytest.raises(ValidationError):
        SynthSpec.model_validate({"directives": [{"type": "wave", "kind": "saw", "count": 1}]})


def test_scored_sample_defaults():
    """Test optional fields of a scored sample."""
    sample = ScoredSample(id="a", score=1.0, E_w=1.0, E_d=0.5, z_w=[], z_d=[], gamma_w=[1.0], gamma_d=[1.0])
    assert sample.flag is None
    assert sample.predicted_label is None
