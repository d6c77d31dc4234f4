"""
Desk-scale synthetic studies: anomaly detection per anomaly type, clustering
of noisy waves, robustness to noise, training contamination, sampling
granularity and dummy-packet perturbation.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..models import ModelConfig, StudyReport, TimeSeries
from ..utils.logging import log_event
from . import datagen, evaluation
from . import etnet as net
from .etnet import EtNetModel


@dataclass
class DetectionRun:
    report: StudyReport
    model: EtNetModel
    test: List[TimeSeries]


def _labels(data: Sequence[TimeSeries]) -> np.ndarray:
    return np.array([1 if s.is_anomaly else 0 for s in data])


def _latents(model: EtNetModel, data: Sequence[TimeSeries]) -> np.ndarray:
    emb = net.embed_batch(model, data)
    return np.hstack([emb.z_w, emb.z_d])


def detection_auc(model: EtNetModel, data: Sequence[TimeSeries]) -> float:
    scores = [s.score for s in net.score_batch(model, data)]
    return evaluation.auc(_labels(data), scores)


def detection_suite(
    config: ModelConfig,
    n_train: int = 1500,
    n_test_normal: int = 100,
    n_per_type: int = 25,
    length: int = 120,
    period: float = 40.0,
    seed: int = 0,
) -> DetectionRun:
    """Train on clean waves of three kinds; report AUC and two-group SCR for
    every anomaly type against the clean test normals"""
    train = datagen.gen_wave_corpus(
        datagen.WAVE_KINDS, n_train // len(datagen.WAVE_KINDS), length, period, seed=seed
    )
    normals, anomalies = datagen.detection_corpus(
        n_test_normal, n_per_type, length, period, seed=seed + 1
    )
    model = net.train(config, train)
    test = normals + anomalies
    scored = net.score_batch(model, test)
    scores = np.array([s.score for s in scored])
    latents = _latents(model, test)
    labels = np.array([s.label for s in test])

    results: Dict[str, Dict[str, float]] = {}
    for t in datagen.ANOMALY_TYPES:
        mask = (labels == "normal") | (labels == f"anomaly-{t}")
        is_anomaly = labels[mask] != "normal"
        scr = evaluation.scr(latents[mask], is_anomaly)
        results[f"anomaly-{t}"] = {
            "auc": evaluation.auc(is_anomaly.astype(int), scores[mask]),
            "scr": scr.ratio,
            "normal_sc": scr.normal_sc,
            "abnormal_sc": scr.abnormal_sc,
        }
    report = StudyReport(
        study="detection",
        seed=seed,
        results=results,
        params={"n_train": len(train), "n_test_normal": len(normals), "n_per_type": n_per_type},
    )
    log_event("study_finished", report.model_dump())
    return DetectionRun(report, model, test)


def clustering_suite(
    config: ModelConfig,
    count: int = 100,
    length: int = 120,
    period: float = 40.0,
    phase_jitter: float = 0.5,
    awgn_sigma: float = 0.1,
    seed: int = 0,
) -> StudyReport:
    """NMI of the predicted clusters and silhouette of the extended latents
    on a three-class wave corpus"""
    corpus = datagen.gen_wave_corpus(
        datagen.WAVE_KINDS, count, length, period, phase_jitter, awgn_sigma, seed=seed
    )
    model = net.train(config, corpus)
    predicted = net.cluster_batch(model, corpus)
    gold = [s.label for s in corpus]
    latents = _latents(model, corpus)
    results = {
        "nmi": evaluation.nmi(gold, predicted.tolist()),
        "sc": evaluation.silhouette(latents, gold),
        "clusters_found": int(np.unique(predicted).size),
    }
    report = StudyReport(
        study="clustering",
        seed=seed,
        results=results,
        params={"count": count, "phase_jitter": phase_jitter, "awgn_sigma": awgn_sigma},
    )
    log_event("study_finished", report.model_dump())
    return report


def noise_robustness(
    model: EtNetModel,
    base: Sequence[TimeSeries],
    noise_type: int,
    level: float,
    trials: int = 100,
    seed: int = 0,
    metric: str = "euclidean",
) -> StudyReport:
    """Share of trials where the normalized latent distance between a sample
    and its noisy version is below the normalized original-space distance.

    Each distance is normalized by the largest pairwise distance among the
    base samples and the noisy sample in its own space.
    """
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(base), size=trials)
    noisy = [
        datagen.fit_length(
            datagen.apply_noise(base[i], noise_type, level, seed=int(rng.integers(2**31))),
            model.length,
        )
        for i in picks
    ]
    base_latents = _latents(model, base)
    noisy_latents = _latents(model, noisy)
    base_values = [s.values for s in base]

    wins, latent_d, original_d = 0, [], []
    for trial, (i, x_noisy) in enumerate(zip(picks, noisy)):
        originals = evaluation.normalize_matrix(
            evaluation.distance_matrix(base_values + [x_noisy.values], metric)
        )
        latents = evaluation.normalize_matrix(
            evaluation.distance_matrix(np.vstack([base_latents, noisy_latents[trial]]))
        )
        d_orig = float(originals[i, -1])
        d_lat = float(latents[i, -1])
        original_d.append(d_orig)
        latent_d.append(d_lat)
        wins += int(d_lat < d_orig)

    results = {
        "fraction": wins / trials,
        "mean_latent": float(np.mean(latent_d)),
        "mean_original": float(np.mean(original_d)),
    }
    report = StudyReport(
        study="noise",
        seed=seed,
        results=results,
        params={"noise_type": noise_type, "level": level, "trials": trials, "metric": metric},
    )
    log_event("study_finished", report.model_dump())
    return report


def contamination_study(
    config: ModelConfig,
    fraction: float = 0.1,
    n_train: int = 1500,
    n_test_normal: int = 100,
    n_per_type: int = 25,
    length: int = 120,
    period: float = 40.0,
    seed: int = 0,
) -> StudyReport:
    """AUC after clean training against AUC after training with a share of
    injected anomalies"""
    train = datagen.gen_wave_corpus(
        datagen.WAVE_KINDS, n_train // len(datagen.WAVE_KINDS), length, period, seed=seed
    )
    normals, anomalies = datagen.detection_corpus(
        n_test_normal, n_per_type, length, period, seed=seed + 1
    )
    test = normals + anomalies
    contaminated = datagen.contaminate_training(train, fraction, seed=seed + 2)

    clean_auc = detection_auc(net.train(config, train), test)
    dirty_auc = detection_auc(net.train(config, contaminated), test)
    report = StudyReport(
        study="contamination",
        seed=seed,
        results={"clean_auc": clean_auc, "contaminated_auc": dirty_auc, "drop": clean_auc - dirty_auc},
        params={"fraction": fraction, "contaminated": len(datagen.contaminated_ids(contaminated))},
    )
    log_event("study_finished", report.model_dump())
    return report


def granularity_study(
    model: EtNetModel,
    factor: int = 2,
    n_test_normal: int = 100,
    n_per_type: int = 25,
    period: float = 40.0,
    interval: float = 60.0,
    seed: int = 0,
) -> StudyReport:
    """AUC on test traffic recorded at ``factor`` times the base resolution
    and summed up to the training interval without retraining.

    A fine bin covers 1/factor of a training bin, so it carries 1/factor of
    the volume; summing ``factor`` fine bins restores the training scale.
    """
    normals, anomalies = datagen.detection_corpus(
        n_test_normal,
        n_per_type,
        model.length * factor,
        period * factor,
        seed=seed,
    )
    fine = [s.with_values(s.array / factor, interval=interval / factor) for s in normals + anomalies]
    coarse = [datagen.resample(s, interval) for s in fine]
    report = StudyReport(
        study="granularity",
        seed=seed,
        results={"auc": detection_auc(model, coarse)},
        params={"factor": factor, "interval": interval},
    )
    log_event("study_finished", report.model_dump())
    return report


def perturbation_study(
    model: EtNetModel,
    test: Sequence[TimeSeries],
    fractions: Sequence[float] = (0.0, 0.1, 0.2, 0.3),
    ratio: float = 0.1,
    seed: int = 0,
) -> StudyReport:
    """AUC when a growing share of test samples carries dummy packets"""
    results = {
        f"{fraction:g}": detection_auc(
            model, datagen.perturb_dataset(test, fraction, seed=seed, ratio=ratio)
        )
        for fraction in fractions
    }
    report = StudyReport(
        study="perturbation", seed=seed, results=results, params={"ratio": ratio}
    )
    log_event("study_finished", report.model_dump())
    return report


STUDIES = ("detection", "clustering", "noise", "contamination", "granularity", "perturbation")


def run_study(
    name: str,
    config: ModelConfig,
    seed: int = 0,
    scale: float = 1.0,
    noise_type: int = 4,
    level: Optional[float] = None,
    fraction: float = 0.1,
    factor: int = 2,
) -> List[StudyReport]:
    """Run one named study at ``scale`` times the default corpus sizes"""
    n_train = max(int(1500 * scale), 3)
    n_normal = max(int(100 * scale), 3)
    n_type = max(int(25 * scale), 1)

    if name == "clustering":
        return [clustering_suite(config, count=max(int(100 * scale), 2), seed=seed)]
    if name == "contamination":
        return [
            contamination_study(
                config, fraction, n_train, n_normal, n_type, seed=seed
            )
        ]

    run = detection_suite(config, n_train, n_normal, n_type, seed=seed)
    reports = [run.report]
    if name == "noise":
        base = [s for s in run.test if not s.is_anomaly]
        default_levels = {1: 2.0, 2: 2.0, 3: 5.0, 4: 0.1}
        reports.append(
            noise_robustness(
                run.model,
                base,
                noise_type,
                default_levels[noise_type] if level is None else level,
                trials=max(int(100 * scale), 1),
                seed=seed,
            )
        )
    elif name == "granularity":
        reports.append(granularity_study(run.model, factor, n_normal, n_type, seed=seed))
    elif name == "perturbation":
        reports.append(perturbation_study(run.model, run.test, seed=seed))
    return reports
