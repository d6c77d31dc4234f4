"""
Synthetic corpora: analytic waves, event-triggered traffic, injected
anomalies, noise, resampling between sampling intervals and training-set
contamination.

Every generator takes an explicit seed and is deterministic under it.
"""

import math
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import signal

from ..models import (
    ANOMALY_LABELS,
    NORMAL,
    AnomalyDirective,
    EventDirective,
    EventSpec,
    NoiseDirective,
    SynthSpec,
    TimeSeries,
    WaveDirective,
)
from ..utils.errors import ConfigError, SeriesError
from ..utils.logging import log_event

WAVE_KINDS = ("sine", "square", "triangle")
ANOMALY_TYPES = (1, 2, 3, 4)


# ---------------------------------------------------------------------------
# waves
# ---------------------------------------------------------------------------


def gen_wave(
    kind: str,
    length: int,
    period: float,
    amplitude: float = 1.0,
    phase: Optional[float] = 0.0,
    seed: Optional[int] = None,
    offset: float = 0.0,
    interval: float = 60.0,
    id: Optional[str] = None,
    label: Optional[str] = None,
) -> TimeSeries:
    """Sample a sine, square or triangle wave once per bin.

    ``phase`` is in radians; ``phase=None`` draws it uniformly from the seed.
    The triangle rises and falls with slope 4A/period per bin.
    """
    if kind not in WAVE_KINDS:
        raise ConfigError(f"Unknown wave kind {kind!r}", {"kind": kind})
    if length < 2:
        raise SeriesError(f"Wave length must be at least 2, got {length}", {"length": length})
    if period < 2:
        raise ConfigError(f"Wave period must be at least 2, got {period}", {"period": period})
    if phase is None:
        phase = float(np.random.default_rng(seed).uniform(0.0, 2.0 * np.pi))

    theta = 2.0 * np.pi * np.arange(length) / period + phase
    if kind == "sine":
        shape = np.sin(theta)
    elif kind == "square":
        shape = signal.square(theta)
    else:
        # rises from -1 to 1 over the first half period, falls over the second
        shape = signal.sawtooth(theta, width=0.5)
    return TimeSeries(
        id=id or kind,
        values=(offset + amplitude * shape).tolist(),
        interval=interval,
        label=label,
    )


def gen_wave_corpus(
    kinds: Sequence[str] = WAVE_KINDS,
    count: int = 100,
    length: int = 120,
    period: float = 40.0,
    phase_jitter: float = 0.0,
    awgn_sigma: float = 0.0,
    seed: int = 0,
    interval: float = 60.0,
    amplitude: float = 1.0,
) -> List[TimeSeries]:
    """``count`` waves of each kind, labelled by kind, with random phase
    offsets in [-phase_jitter, phase_jitter] and additive white noise"""
    rng = np.random.default_rng(seed)
    corpus = []
    for kind in kinds:
        for i in range(count):
            wave = gen_wave(
                kind,
                length,
                period,
                amplitude,
                phase=float(rng.uniform(-phase_jitter, phase_jitter)) if phase_jitter else 0.0,
                interval=interval,
                id=f"{kind}-{i:04d}",
                label=kind,
            )
            if awgn_sigma > 0:
                wave = wave.with_values(wave.array + rng.normal(0.0, awgn_sigma, length))
            corpus.append(wave)
    return corpus


# ---------------------------------------------------------------------------
# event-triggered traffic
# ---------------------------------------------------------------------------


def gen_mtc_event(
    length: int,
    period: int = 6,
    intensity: float = 1.0,
    seed: int = 0,
    variation: float = 0.1,
) -> EventSpec:
    """Machine-type event: periodic indicator with small, steady intensity"""
    if period < 1:
        raise ConfigError("MTC period must be positive", {"period": period})
    rng = np.random.default_rng(seed)
    start = int(rng.integers(period))
    indicator = np.zeros(length, dtype=int)
    indicator[start::period] = 1
    level = intensity * rng.uniform(1.0 - variation, 1.0 + variation, length)
    return EventSpec(kind="MTC", indicator=indicator.tolist(), intensity=level.tolist())


def gen_htc_event(
    length: int,
    bursts: int = 2,
    burst_length: int = 5,
    intensity: float = 20.0,
    seed: int = 0,
) -> EventSpec:
    """Human-type event: a few sparse bursts with large intensity"""
    if burst_length > length:
        raise SeriesError(
            "Burst longer than the series", {"burst_length": burst_length, "length": length}
        )
    rng = np.random.default_rng(seed)
    indicator = np.zeros(length, dtype=int)
    for start in rng.integers(0, length - burst_length + 1, size=bursts):
        indicator[start : start + burst_length] = 1
    level = intensity * rng.uniform(0.5, 1.5, length)
    return EventSpec(kind="HTC", indicator=indicator.tolist(), intensity=level.tolist())


def gen_event_triggered(
    events: Sequence[EventSpec],
    length: int,
    interval: float = 60.0,
    id: str = "event",
    label: Optional[str] = None,
) -> TimeSeries:
    """x = sum_i a_i * e_i"""
    total = np.zeros(length)
    for n, event in enumerate(events):
        if len(event.indicator) != length:
            raise SeriesError(
                f"Event {n} has length {len(event.indicator)}, expected {length}",
                {"event": n, "length": len(event.indicator), "expected": length},
            )
        total += np.asarray(event.intensity) * np.asarray(event.indicator)
    return TimeSeries(id=id, values=total.tolist(), interval=interval, label=label)


# ---------------------------------------------------------------------------
# anomalies and noise
# ---------------------------------------------------------------------------


def _segment(length: int, segment_length: int, start: Optional[int], rng: np.random.Generator) -> Tuple[int, int]:
    if segment_length < 1 or segment_length > length:
        raise SeriesError(
            f"Segment of {segment_length} bins does not fit a series of {length}",
            {"segment_length": segment_length, "length": length},
        )
    if start is None:
        start = int(rng.integers(0, length - segment_length + 1))
    if start < 0 or start + segment_length > length:
        raise SeriesError(
            f"Segment [{start}, {start + segment_length}) out of range for length {length}",
            {"start": start, "segment_length": segment_length, "length": length},
        )
    return start, start + segment_length


def inject_anomaly(
    x: TimeSeries,
    anomaly_type: int,
    seed: int = 0,
    start: Optional[int] = None,
    segment_length: int = 10,
    sigma: float = 0.5,
    height_factor: float = 5.0,
    impulse_factor: float = 10.0,
) -> TimeSeries:
    """Inject one anomaly and label the series with its type.

    1: Gaussian noise on a segment; 2: additive plateau of ``height_factor``
    times the series maximum (its peak magnitude when the maximum is not
    positive); 3: segment zeroed; 4: one bin replaced by an extreme value.
    """
    if anomaly_type not in ANOMALY_TYPES:
        raise ConfigError(f"Unknown anomaly type {anomaly_type}", {"type": anomaly_type})
    rng = np.random.default_rng(seed)
    values = x.array.copy()
    scale = float(np.max(np.abs(values))) or 1.0

    if anomaly_type == 4:
        a, _ = _segment(x.length, 1, start, rng)
        values[a] = float(np.max(values)) + impulse_factor * scale
    else:
        a, b = _segment(x.length, segment_length, start, rng)
        if anomaly_type == 1:
            values[a:b] += rng.normal(0.0, sigma, b - a) if sigma > 0 else 0.0
        elif anomaly_type == 2:
            peak = float(np.max(values))
            values[a:b] += height_factor * (peak if peak > 0 else scale)
        else:
            values[a:b] = 0.0
    return x.with_values(values, label=ANOMALY_LABELS[anomaly_type])


def apply_noise(x: TimeSeries, noise_type: int, level: float, seed: int = 0) -> TimeSeries:
    """1: upsample by ``level`` with linear interpolation; 2: keep every
    ``level``-th bin; 3: circular shift by floor(level) bins; 4: Gaussian
    noise with sigma ``level`` on every bin"""
    if level < 0:
        raise ConfigError("Noise level must be non-negative", {"level": level})
    values = x.array
    if noise_type == 1:
        n_new = int(round(x.length * level))
        if n_new < 2:
            raise SeriesError("Upsampling leaves fewer than 2 points", {"level": level})
        grid = np.linspace(0, x.length - 1, n_new)
        return x.with_values(
            np.interp(grid, np.arange(x.length), values), interval=x.interval * x.length / n_new
        )
    if noise_type == 2:
        factor = max(int(level), 1)
        kept = values[::factor]
        if kept.size < 2:
            raise SeriesError(
                f"Decimation by {factor} leaves {kept.size} point(s)", {"factor": factor}
            )
        return x.with_values(kept, interval=x.interval * factor)
    if noise_type == 3:
        return x.with_values(np.roll(values, int(math.floor(level))))
    if noise_type == 4:
        rng = np.random.default_rng(seed)
        return x.with_values(values + rng.normal(0.0, level, x.length) if level > 0 else values)
    raise ConfigError(f"Unknown noise type {noise_type}", {"type": noise_type})


def fit_length(x: TimeSeries, length: int) -> TimeSeries:
    """Linearly interpolate onto ``length`` evenly spaced bins"""
    if x.length == length:
        return x
    grid = np.linspace(0, x.length - 1, length)
    return x.with_values(
        np.interp(grid, np.arange(x.length), x.array), interval=x.interval * x.length / length
    )


# ---------------------------------------------------------------------------
# sampling intervals
# ---------------------------------------------------------------------------


def _as_fraction(value: float) -> Fraction:
    return Fraction(value).limit_denominator(10**6)


def coarsen(values: np.ndarray, factor: int) -> np.ndarray:
    """Sum consecutive groups of ``factor`` bins; a trailing remainder is dropped"""
    usable = (values.size // factor) * factor
    if usable == 0:
        raise SeriesError(
            f"Series of {values.size} bins is shorter than the factor {factor}",
            {"length": int(values.size), "factor": factor},
        )
    return values[:usable].reshape(-1, factor).sum(axis=1)


def refine(values: np.ndarray, factor: int) -> np.ndarray:
    """Split every bin into ``factor`` sub-bins in proportion to the linear
    interpolation of the magnitudes; sub-bins keep the sign of their bin and
    sum back to it"""
    n = values.size
    centers = (np.arange(n * factor) + 0.5) / factor - 0.5
    weights = np.interp(centers, np.arange(n), np.abs(values)).reshape(n, factor)
    totals = weights.sum(axis=1, keepdims=True)
    shares = np.divide(weights, totals, out=np.full_like(weights, 1.0 / factor), where=totals > 0)
    return (values[:, None] * shares).reshape(-1)


def resample(x: TimeSeries, new_interval: float) -> TimeSeries:
    """Move a series to a new sampling interval.

    Refinement and coarsening go through the greatest common interval, so
    60s -> 90s refines by 2 then sums groups of 3.
    """
    if new_interval <= 0:
        raise ConfigError("Sampling interval must be positive", {"interval": new_interval})
    old, new = _as_fraction(x.interval), _as_fraction(new_interval)
    if old == new:
        return x
    common = Fraction(
        math.gcd(old.numerator * new.denominator, new.numerator * old.denominator),
        old.denominator * new.denominator,
    )
    up, down = old / common, new / common
    if up.denominator != 1 or down.denominator != 1:
        raise SeriesError(
            f"Cannot resample {x.interval}s to {new_interval}s", {"from": x.interval, "to": new_interval}
        )
    values = x.array
    if up > 1:
        values = refine(values, int(up))
    if down > 1:
        if values.size % int(down):
            log_event(
                "resample_remainder_dropped",
                {"id": x.id, "bins": int(values.size % int(down))},
            )
        values = coarsen(values, int(down))
    return x.with_values(values, interval=float(new_interval))


# ---------------------------------------------------------------------------
# dataset-level perturbations
# ---------------------------------------------------------------------------


def contaminate_training(
    data: Sequence[TimeSeries],
    fraction: float,
    anomaly_types: Iterable[int] = ANOMALY_TYPES,
    seed: int = 0,
) -> List[TimeSeries]:
    """Replace floor(fraction * N) samples with anomaly-injected versions.

    The injected labels stay on the series for auditing; training ignores labels.
    """
    if not 0.0 <= fraction <= 0.5:
        raise ConfigError(f"Contamination fraction {fraction} outside [0, 0.5]", {"fraction": fraction})
    types = list(anomaly_types)
    rng = np.random.default_rng(seed)
    n = int(math.floor(fraction * len(data)))
    picked = set(rng.choice(len(data), size=n, replace=False).tolist()) if n else set()
    out = list(data)
    for i in sorted(picked):
        kind = int(types[rng.integers(len(types))])
        out[i] = inject_anomaly(out[i], kind, seed=int(rng.integers(2**31)))
    log_event("contaminated", {"samples": len(data), "contaminated": n})
    return out


def contaminated_ids(data: Sequence[TimeSeries]) -> List[str]:
    return [s.id for s in data if s.is_anomaly]


def add_dummy_packets(x: TimeSeries, ratio: float, seed: int = 0, magnitude: float = 0.1) -> TimeSeries:
    """Add small non-negative dummy counts to ``ratio`` of the bins"""
    if not 0.0 <= ratio <= 1.0:
        raise ConfigError(f"Perturbation ratio {ratio} outside [0, 1]", {"ratio": ratio})
    rng = np.random.default_rng(seed)
    values = x.array.copy()
    n = int(math.floor(ratio * x.length))
    bins = rng.choice(x.length, size=n, replace=False)
    scale = float(np.max(np.abs(values))) or 1.0
    values[bins] += rng.uniform(0.0, magnitude * scale, n)
    return x.with_values(values)


def perturb_dataset(
    data: Sequence[TimeSeries],
    fraction: float,
    seed: int = 0,
    ratio: float = 0.1,
) -> List[TimeSeries]:
    """Apply dummy-packet perturbation to ``fraction`` of the samples"""
    if not 0.0 <= fraction <= 1.0:
        raise ConfigError(f"Perturbed fraction {fraction} outside [0, 1]", {"fraction": fraction})
    rng = np.random.default_rng(seed)
    n = int(math.floor(fraction * len(data)))
    picked = rng.choice(len(data), size=n, replace=False) if n else []
    out = list(data)
    for i in picked:
        out[i] = add_dummy_packets(out[i], ratio, seed=int(rng.integers(2**31)))
    return out


# ---------------------------------------------------------------------------
# corpus specs
# ---------------------------------------------------------------------------


def _run_wave(d: WaveDirective, spec: SynthSpec, rng: np.random.Generator, start: int) -> List[TimeSeries]:
    rows = []
    for i in range(d.count):
        phase = d.phase + (float(rng.uniform(-d.phase_jitter, d.phase_jitter)) if d.phase_jitter else 0.0)
        wave = gen_wave(
            d.kind,
            spec.length,
            d.period,
            d.amplitude,
            phase=phase,
            offset=d.offset,
            interval=spec.interval,
            id=f"{start + i:06d}",
            label=d.label or NORMAL,
        )
        if d.noise_sigma > 0:
            wave = wave.with_values(wave.array + rng.normal(0.0, d.noise_sigma, spec.length))
        rows.append(wave)
    return rows


def _run_event(d: EventDirective, spec: SynthSpec, rng: np.random.Generator, start: int) -> List[TimeSeries]:
    rows = []
    for i in range(d.count):
        events = [
            gen_mtc_event(spec.length, d.mtc_period, d.mtc_intensity, seed=int(rng.integers(2**31)))
        ]
        if d.htc_bursts:
            events.append(
                gen_htc_event(
                    spec.length,
                    d.htc_bursts,
                    d.htc_burst_length,
                    d.htc_intensity,
                    seed=int(rng.integers(2**31)),
                )
            )
        rows.append(
            gen_event_triggered(
                events, spec.length, spec.interval, id=f"{start + i:06d}", label=d.label or NORMAL
            )
        )
    return rows


def generate_corpus(spec: SynthSpec) -> List[TimeSeries]:
    """Execute generation directives in order.

    Wave and event directives append rows. Anomaly and noise directives alter
    ``floor(fraction * N)`` of the rows produced so far; anomalies only touch
    rows that are still normal.
    """
    rng = np.random.default_rng(spec.seed)
    rows: List[TimeSeries] = []
    for d in spec.directives:
        if isinstance(d, WaveDirective):
            rows.extend(_run_wave(d, spec, rng, len(rows)))
        elif isinstance(d, EventDirective):
            rows.extend(_run_event(d, spec, rng, len(rows)))
        elif isinstance(d, AnomalyDirective):
            normal = [i for i, s in enumerate(rows) if not s.is_anomaly]
            n = int(math.floor(d.fraction * len(rows)))
            if n > len(normal):
                raise ConfigError(
                    "Not enough normal rows for the anomaly directive",
                    {"requested": n, "available": len(normal)},
                )
            for i in sorted(rng.choice(normal, size=n, replace=False).tolist()) if n else []:
                rows[i] = inject_anomaly(
                    rows[i],
                    d.anomaly_type,
                    seed=int(rng.integers(2**31)),
                    segment_length=min(d.segment_length, spec.length),
                    sigma=d.sigma,
                    height_factor=d.height_factor,
                    impulse_factor=d.impulse_factor,
                )
        elif isinstance(d, NoiseDirective):
            n = int(math.floor(d.fraction * len(rows)))
            for i in sorted(rng.choice(len(rows), size=n, replace=False).tolist()) if n else []:
                rows[i] = fit_length(
                    apply_noise(rows[i], d.noise_type, d.level, seed=int(rng.integers(2**31))),
                    spec.length,
                )
    log_event("corpus_generated", {"rows": len(rows), "seed": spec.seed})
    return rows


def detection_corpus(
    n_normal: int,
    n_anomaly: int,
    length: int = 120,
    period: float = 40.0,
    seed: int = 0,
    phase_jitter: float = 0.0,
    noise_sigma: float = 0.0,
    anomaly_types: Sequence[int] = ANOMALY_TYPES,
) -> Tuple[List[TimeSeries], List[TimeSeries]]:
    """Clean waves of the three kinds plus ``n_anomaly`` injected samples per
    anomaly type, built from fresh waves of the same kinds"""
    rng = np.random.default_rng(seed)
    per_kind = max(n_normal // len(WAVE_KINDS), 1)
    normals = [
        s.model_copy(update={"label": NORMAL})
        for s in gen_wave_corpus(
            WAVE_KINDS, per_kind, length, period, phase_jitter, noise_sigma, seed=int(rng.integers(2**31))
        )
    ]
    anomalies = []
    for t in anomaly_types:
        base = gen_wave_corpus(
            WAVE_KINDS,
            max(n_anomaly // len(WAVE_KINDS) + 1, 1),
            length,
            period,
            phase_jitter,
            noise_sigma,
            seed=int(rng.integers(2**31)),
        )
        picks = rng.choice(len(base), size=n_anomaly, replace=False)
        for j, i in enumerate(picks):
            anomalous = inject_anomaly(base[i], t, seed=int(rng.integers(2**31)))
            anomalies.append(anomalous.model_copy(update={"id": f"a{t}-{j:04d}"}))
    return normals, anomalies
