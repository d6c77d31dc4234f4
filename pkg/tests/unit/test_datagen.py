"""
Unit tests for synthetic data generation.

This module tests wave and event generators, anomaly injection, noise,
resampling between intervals, contamination and corpus specs.
"""

import numpy as np
import pytest

from etnet.models import EventSpec, SynthSpec, TimeSeries
from etnet.services import datagen
from etnet.utils.errors import ConfigError, SeriesError

pytestmark = pytest.mark.unit


@pytest.fixture
def sine():
    return datagen.gen_wave("sine", 120, 40.0, id="s", label="normal")


@pytest.fixture
def ramp():
    return TimeSeries(id="r", values=list(np.arange(1.0, 121.0)), label="normal")


def test_sine_range(sine):
    """Test that a unit sine spans [-1, 1]."""
    assert max(sine.values) == pytest.approx(1.0)
    assert min(sine.values) == pytest.approx(-1.0)
    assert sine.length == 120


def test_square_and_triangle_levels():
    """Test square levels and the triangle's peak and trough."""
    # When
    square = datagen.gen_wave("square", 40, 8.0, amplitude=2.0)
    triangle = datagen.gen_wave("triangle", 40, 8.0)

    # Then
    assert set(np.round(square.values, 12)) == {-2.0, 2.0}
    assert max(triangle.values) == pytest.approx(1.0)
    assert min(triangle.values) == pytest.approx(-1.0)
    np.testing.assert_allclose(np.abs(np.diff(triangle.values)), 0.5)


def test_wave_arguments_validated():
    """Test unknown kinds, short series and short periods."""
    with pytest.raises(ConfigError):
        datagen.gen_wave("sawtooth", 10, 4.0)
    with pytest.raises(SeriesError):
        datagen.gen_wave("sine", 1, 4.0)
    with pytest.raises(ConfigError):
        datagen.gen_wave("sine", 10, 1.0)


def test_random_phase_is_seeded():
    """Test that phase=None draws deterministically from the seed."""
    first = datagen.gen_wave("sine", 20, 10.0, phase=None, seed=3)
    second = datagen.gen_wave("sine", 20, 10.0, phase=None, seed=3)
    assert first.values == second.values


def test_wave_corpus_labels_and_noise():
    """Test per-kind counts, labels and reproducibility."""
    # When
    corpus = datagen.gen_wave_corpus(count=5, length=30, period=10.0, phase_jitter=0.5, awgn_sigma=0.1, seed=2)
    again = datagen.gen_wave_corpus(count=5, length=30, period=10.0, phase_jitter=0.5, awgn_sigma=0.1, seed=2)

    # Then
    assert len(corpus) == 15
    assert [s.label for s in corpus].count("square") == 5
    assert corpus[0].id == "sine-0000"
    assert [s.values for s in corpus] == [s.values for s in again]


def test_no_events_gives_zero_series():
    """Test the empty event sum."""
    assert datagen.gen_event_triggered([], 8).values == [0.0] * 8


def test_single_mtc_event_is_masked_intensity():
    """Test that one event contributes intensity where it fires."""
    # Given
    event = datagen.gen_mtc_event(24, period=4, intensity=2.0, seed=5)

    # When
    series = datagen.gen_event_triggered([event], 24)

    # Then
    expected = np.asarray(event.intensity) * np.asarray(event.indicator)
    np.testing.assert_allclose(series.values, expected)
    assert sum(event.indicator) == 6


def test_disjoint_events_form_union():
    """Test MTC plus HTC with disjoint supports."""
    # Given
    mtc = EventSpec(kind="MTC", indicator=[1, 0, 1, 0, 0, 0], intensity=[1.0] * 6)
    htc = EventSpec(kind="HTC", indicator=[0, 0, 0, 1, 1, 0], intensity=[20.0] * 6)

    # When
    series = datagen.gen_event_triggered([mtc, htc], 6)

    # Then
    assert series.values == [1.0, 0.0, 1.0, 20.0, 20.0, 0.0]


def test_htc_bursts_are_sparse():
    """Test burst placement and the length check."""
    # When
    event = datagen.gen_htc_event(60, bursts=2, burst_length=5, seed=1)

    # Then
    assert 5 <= sum(event.indicator) <= 10
    with pytest.raises(SeriesError):
        datagen.gen_htc_event(4, burst_length=5)


def test_event_length_mismatch():
    """Test that events must match the series length."""
    event = datagen.gen_mtc_event(10)
    with pytest.raises(SeriesError):
        datagen.gen_event_triggered([event], 12)


def test_zeroed_segment(ramp):
    """Test that type 3 zeroes exactly the segment."""
    # When
    out = datagen.inject_anomaly(ramp, 3, start=20, segment_length=10)

    # Then
    values = np.asarray(out.values)
    assert np.all(values[20:30] == 0.0)
    np.testing.assert_array_equal(values[:20], ramp.values[:20])
    np.testing.assert_array_equal(values[30:], ramp.values[30:])
    assert out.label == "anomaly-3"


def test_impulse_changes_one_bin(sine):
    """Test that type 4 alters a single bin to an extreme value."""
    # When
    out = datagen.inject_anomaly(sine, 4, seed=9)

    # Then
    changed = np.flatnonzero(np.asarray(out.values) != np.asarray(sine.values))
    assert changed.size == 1
    assert out.values[changed[0]] == pytest.approx(11.0)


def test_noise_segment_without_noise(sine):
    """Test that type 1 with sigma 0 leaves the values alone."""
    out = datagen.inject_anomaly(sine, 1, sigma=0.0)
    assert out.values == sine.values
    assert out.is_anomaly


def test_plateau(ramp):
    """Test that type 2 lifts the segment by a multiple of the peak."""
    # When
    out = datagen.inject_anomaly(ramp, 2, start=0, segment_length=10)

    # Then
    np.testing.assert_allclose(np.asarray(out.values[:10]) - ramp.values[:10], 600.0)
    assert out.values[10:] == ramp.values[10:]


def test_plateau_height_follows_series_maximum():
    """Test that a deep trough does not set the plateau height."""
    # Given
    series = TimeSeries(id="t", values=[-10.0, 2.0, 1.0, 0.0], label="normal")

    # When
    out = datagen.inject_anomaly(series, 2, start=1, segment_length=2)

    # Then
    assert out.values == [-10.0, 12.0, 11.0, 0.0]


def test_anomaly_arguments_validated(ramp):
    """Test unknown types and segments that do not fit."""
    with pytest.raises(ConfigError):
        datagen.inject_anomaly(ramp, 5)
    with pytest.raises(SeriesError):
        datagen.inject_anomaly(ramp, 3, start=115, segment_length=10)


def test_noise_types(ramp):
    """Test shift, decimation, interpolation and Gaussian noise."""
    # When/Then
    assert datagen.apply_noise(ramp, 3, 0.0).values == ramp.values
    assert datagen.apply_noise(ramp, 3, 2.7).values[:3] == [119.0, 120.0, 1.0]

    decimated = datagen.apply_noise(ramp, 2, 2)
    assert decimated.length == 60
    assert decimated.values == ramp.values[::2]
    assert decimated.interval == 120.0

    upsampled = datagen.apply_noise(ramp, 1, 2.0)
    assert upsampled.length == 240
    assert upsampled.values[0] == 1.0 and upsampled.values[-1] == 120.0

    assert datagen.apply_noise(ramp, 4, 0.0).values == ramp.values
    noisy = datagen.apply_noise(ramp, 4, 0.5, seed=1)
    assert noisy.values != ramp.values


def test_noise_arguments_validated(ramp):
    """Test negative levels and unknown types."""
    with pytest.raises(ConfigError):
        datagen.apply_noise(ramp, 4, -1.0)
    with pytest.raises(ConfigError):
        datagen.apply_noise(ramp, 7, 1.0)


def test_fit_length(ramp):
    """Test interpolation onto a new length."""
    # When
    out = datagen.fit_length(ramp, 60)

    # Then
    assert out.length == 60
    assert out.values[0] == 1.0 and out.values[-1] == 120.0
    assert datagen.fit_length(ramp, 120) is ramp


def test_coarsen_sums_pairs(ramp):
    """Test 60s -> 120s summing adjacent bins."""
    # When
    out = datagen.resample(ramp, 120.0)

    # Then
    assert out.length == 60
    assert out.interval == 120.0
    np.testing.assert_allclose(out.values, np.asarray(ramp.values).reshape(-1, 2).sum(axis=1))


def test_resample_identity(ramp):
    """Test that the same interval returns the series unchanged."""
    assert datagen.resample(ramp, 60.0) is ramp


@pytest.mark.parametrize("target,length", [(90.0, 80), (30.0, 240), (20.0, 360), (180.0, 40)])
def test_resample_conserves_volume(ramp, target, length):
    """Test that total volume survives refinement and coarsening."""
    # When
    out = datagen.resample(ramp, target)

    # Then
    assert out.length == length
    assert sum(out.values) == pytest.approx(sum(ramp.values), abs=1e-9)


def test_refine_keeps_bin_totals():
    """Test that sub-bins sum back to each original bin."""
    # Given
    values = np.array([1.0, 5.0, 2.0, 0.0])

    # When
    fine = datagen.refine(values, 3)

    # Then
    np.testing.assert_allclose(fine.reshape(4, 3).sum(axis=1), values, atol=1e-12)


def test_refine_never_creates_negative_volume():
    """Test that empty bins stay empty and sub-bins follow the neighbours."""
    # When
    fine = datagen.refine(np.array([10.0, 0.0, 0.0, 10.0]), 2)

    # Then
    assert np.all(fine >= 0.0)
    np.testing.assert_allclose(fine[2:6], 0.0)
    np.testing.assert_allclose(fine[:2], [10.0 / 1.75, 7.5 / 1.75])
    np.testing.assert_allclose(fine.reshape(4, 2).sum(axis=1), [10.0, 0.0, 0.0, 10.0], atol=1e-12)


def test_coarsen_drops_remainder():
    """Test that a trailing partial group is dropped."""
    np.testing.assert_array_equal(datagen.coarsen(np.arange(7.0), 3), [3.0, 12.0])
    with pytest.raises(SeriesError):
        datagen.coarsen(np.arange(2.0), 3)


def test_resample_rejects_bad_interval(ramp):
    """Test a non-positive target interval."""
    with pytest.raises(ConfigError):
        datagen.resample(ramp, 0.0)


def test_contamination_counts():
    """Test floor(fraction * N) injected samples."""
    # Given
    data = datagen.gen_wave_corpus(count=10, length=20, period=5.0)
    big = [s.model_copy(update={"id": f"{i}"}) for i, s in enumerate(data * 17)][:500]

    # When
    clean = datagen.contaminate_training(data, 0.0)
    dirty = datagen.contaminate_training(big, 0.1, seed=4)

    # Then
    assert clean == data
    assert len(datagen.contaminated_ids(dirty)) == 50
    assert len(dirty) == 500
    with pytest.raises(ConfigError):
        datagen.contaminate_training(data, 0.6)


def test_dummy_packets(sine):
    """Test that dummy packets only add to the chosen share of bins."""
    # When
    out = datagen.add_dummy_packets(sine, 0.25, seed=2)

    # Then
    delta = np.asarray(out.values) - np.asarray(sine.values)
    assert np.all(delta >= 0)
    assert np.count_nonzero(delta) <= 30
    assert out.label == sine.label
    with pytest.raises(ConfigError):
        datagen.add_dummy_packets(sine, 1.5)


def test_perturb_dataset_share():
    """Test that only the requested share of samples changes."""
    # Given
    data = datagen.gen_wave_corpus(count=10, length=20, period=5.0)

    # When
    out = datagen.perturb_dataset(data, 0.2, seed=3, ratio=0.5)

    # Then
    changed = sum(a.values != b.values for a, b in zip(data, out))
    assert changed == 6


def test_generate_corpus_from_spec():
    """Test directives applied in order with sequential ids."""
    # Given
    spec = SynthSpec.model_validate(
        {
            "seed": 7,
            "length": 24,
            "directives": [
                {"type": "wave", "kind": "sine", "count": 6, "period": 8},
                {"type": "event", "count": 4},
                {"type": "anomaly", "anomaly_type": 3, "fraction": 0.2, "segment_length": 4},
                {"type": "noise", "noise_type": 2, "level": 2, "fraction": 0.5},
            ],
        }
    )

    # When
    corpus = datagen.generate_corpus(spec)
    again = datagen.generate_corpus(spec)

    # Then
    assert [s.id for s in corpus] == [f"{i:06d}" for i in range(10)]
    assert all(s.length == 24 for s in corpus)
    assert len(datagen.contaminated_ids(corpus)) == 2
    assert {s.label for s in corpus[6:]} <= {"normal", "anomaly-3"}
    assert [s.values for s in corpus] == [s.values for s in again]


def test_generate_corpus_needs_normal_rows():
    """Test an anomaly directive asking for more rows than exist."""
    spec = SynthSpec.model_validate(
        {
            "length": 12,
            "directives": [
                {"type": "wave", "kind": "sine", "count": 2},
                {"type": "anomaly", "anomaly_type": 1, "fraction": 1.0},
                {"type": "anomaly", "anomaly_type": 2, "fraction": 0.5},
            ],
        }
    )
    with pytest.raises(ConfigError):
        datagen.generate_corpus(spec)


def test_detection_corpus():
    """Test normal and per-type anomaly counts."""
    # When
    normals, anomalies = datagen.detection_corpus(9, 2, length=30, period=10.0, seed=1)

    # Then
    assert len(normals) == 9
    assert all(s.label == "normal" for s in normals)
    assert len(anomalies) == 8
    assert {s.label for s in anomalies} == {"anomaly-1", "anomaly-2", "anomaly-3", "anomaly-4"}
    assert len({s.id for s in anomalies}) == 8
