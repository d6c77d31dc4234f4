"""
Detection and clustering metrics, and the non-parametric series distances
(Euclidean, DTW, EDR) used as baselines.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform
from scipy.stats import entropy, rankdata

from ..models import MetricReport
from ..utils.errors import MetricError
from ..utils.logging import log_event


SCR_INFINITY = float("inf")


def _pair(x: Sequence[float], y: Sequence[float], metric: str) -> tuple:
    a = np.asarray(x, dtype=np.float64).reshape(-1)
    b = np.asarray(y, dtype=np.float64).reshape(-1)
    if a.shape != b.shape:
        raise MetricError(
            f"{metric}: lengths differ ({a.size} vs {b.size})",
            {"metric": metric, "lengths": [int(a.size), int(b.size)]},
        )
    return a, b


# ---------------------------------------------------------------------------
# detection
# ---------------------------------------------------------------------------


def auc(labels: Sequence[int], scores: Sequence[float]) -> float:
    """Probability that a random positive outranks a random negative; ties
    count one half"""
    y, s = _pair(labels, scores, "auc")
    positives = y > 0
    n_pos = int(positives.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError(
            "AUC needs at least one positive and one negative", {"positives": n_pos, "negatives": n_neg}
        )
    ranks = rankdata(s)
    u = ranks[positives].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


# ---------------------------------------------------------------------------
# clustering
# ---------------------------------------------------------------------------


def _contingency(a: Sequence[Any], b: Sequence[Any]) -> np.ndarray:
    _, ia = np.unique(np.asarray(a), return_inverse=True)
    _, ib = np.unique(np.asarray(b), return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1))
    np.add.at(table, (ia, ib), 1.0)
    return table


def nmi(a: Sequence[Any], b: Sequence[Any]) -> float:
    """Mutual information normalized by the geometric mean of the entropies"""
    if len(a) != len(b):
        raise MetricError("nmi: labelings differ in length", {"lengths": [len(a), len(b)]})
    if len(a) == 0:
        raise MetricError("nmi: empty labelings")
    joint = _contingency(a, b) / len(a)
    pa, pb = joint.sum(axis=1), joint.sum(axis=0)
    ha, hb = entropy(pa), entropy(pb)
    if ha == 0 and hb == 0:
        return 1.0
    if ha == 0 or hb == 0:
        return 0.0
    nz = joint > 0
    mi = float((joint[nz] * np.log(joint[nz] / np.outer(pa, pb)[nz])).sum())
    return float(np.clip(mi / np.sqrt(ha * hb), 0.0, 1.0))


def silhouette_samples(points: np.ndarray, labels: Sequence[Any]) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points.reshape(-1, 1)
    labels = np.asarray(labels)
    if points.shape[0] != labels.shape[0]:
        raise MetricError(
            "silhouette: points and labels differ in length",
            {"points": int(points.shape[0]), "labels": int(labels.shape[0])},
        )
    clusters = np.unique(labels)
    if clusters.size < 2:
        raise MetricError("silhouette needs at least two clusters", {"clusters": int(clusters.size)})

    dist = squareform(pdist(points))
    members = {c: labels == c for c in clusters}
    sizes = {c: int(m.sum()) for c, m in members.items()}
    out = np.zeros(points.shape[0])
    for i, own in enumerate(labels):
        if sizes[own] == 1:
            continue
        a = dist[i, members[own]].sum() / (sizes[own] - 1)
        b = min(dist[i, members[c]].mean() for c in clusters if c != own)
        denom = max(a, b)
        out[i] = (b - a) / denom if denom > 0 else 0.0
    return out


def silhouette(points: np.ndarray, labels: Sequence[Any]) -> float:
    return float(silhouette_samples(points, labels).mean())


@dataclass(frozen=True)
class ScrResult:
    ratio: float
    normal_sc: float
    abnormal_sc: float

    def to_dict(self) -> Dict[str, float]:
        return {"ratio": self.ratio, "normal_sc": self.normal_sc, "abnormal_sc": self.abnormal_sc}


def scr(points: np.ndarray, is_anomaly: Sequence[bool]) -> ScrResult:
    """Normal group's mean silhouette over the abnormal group's, on the
    two-group partition"""
    groups = np.asarray(is_anomaly, dtype=bool)
    if groups.all() or not groups.any():
        raise MetricError("scr needs both normal and abnormal samples")
    per_point = silhouette_samples(points, groups)
    normal_sc = float(per_point[~groups].mean())
    abnormal_sc = float(per_point[groups].mean())
    ratio = SCR_INFINITY if abs(abnormal_sc) < 1e-9 else normal_sc / abnormal_sc
    return ScrResult(ratio, normal_sc, abnormal_sc)


# ---------------------------------------------------------------------------
# series distances
# ---------------------------------------------------------------------------


def euclidean(x: Sequence[float], y: Sequence[float]) -> float:
    a, b = _pair(x, y, "euclidean")
    return float(np.linalg.norm(a - b))


def dtw(x: Sequence[float], y: Sequence[float], window: Optional[int] = None) -> float:
    """Dynamic time warping with absolute local cost and an optional
    Sakoe-Chiba band of half-width ``window``"""
    a = np.asarray(x, dtype=np.float64).reshape(-1)
    b = np.asarray(y, dtype=np.float64).reshape(-1)
    n, m = a.size, b.size
    if n == 0 or m == 0:
        raise MetricError("dtw: empty sequence", {"lengths": [n, m]})
    if window is not None and window < abs(n - m):
        raise MetricError(
            f"dtw: window {window} cannot connect lengths {n} and {m}",
            {"window": window, "lengths": [n, m]},
        )
    band = max(n, m) if window is None else window
    cost = np.abs(a[:, None] - b[None, :])
    table = np.full((n + 1, m + 1), np.inf)
    table[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(max(1, i - band), min(m, i + band) + 1):
            table[i, j] = cost[i - 1, j - 1] + min(
                table[i - 1, j],  # insertion
                table[i, j - 1],  # deletion
                table[i - 1, j - 1],  # match
            )
    return float(table[n, m])


def edr(x: Sequence[float], y: Sequence[float], epsilon: float) -> float:
    """Edit distance where elements match iff they differ by at most epsilon"""
    if epsilon < 0:
        raise MetricError("edr: epsilon must be non-negative", {"epsilon": epsilon})
    a = np.asarray(x, dtype=np.float64).reshape(-1)
    b = np.asarray(y, dtype=np.float64).reshape(-1)
    n, m = a.size, b.size
    mismatch = (np.abs(a[:, None] - b[None, :]) > epsilon).astype(np.float64)
    table = np.zeros((n + 1, m + 1))
    table[:, 0] = np.arange(n + 1)
    table[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            table[i, j] = min(
                table[i - 1, j - 1] + mismatch[i - 1, j - 1],
                table[i - 1, j] + 1.0,
                table[i, j - 1] + 1.0,
            )
    return float(table[n, m])


METRICS: Dict[str, Callable[..., float]] = {"euclidean": euclidean, "dtw": dtw, "edr": edr}


def distance_matrix(
    series: Sequence[Sequence[float]],
    metric: str = "euclidean",
    workers: int = 1,
    **params: Any,
) -> np.ndarray:
    """Symmetric pairwise distance matrix; pairs fan out over ``workers`` threads"""
    if metric not in METRICS:
        raise MetricError(f"Unknown distance {metric!r}", {"metric": metric, "known": sorted(METRICS)})
    n = len(series)
    if metric == "euclidean":
        matrix = np.vstack([np.asarray(s, dtype=np.float64) for s in series])
        return squareform(pdist(matrix)) if n > 1 else np.zeros((n, n))

    fn = METRICS[metric]
    pairs = list(combinations(range(n), 2))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(lambda p: fn(series[p[0]], series[p[1]], **params), pairs))
    else:
        values = [fn(series[i], series[j], **params) for i, j in pairs]
    out = np.zeros((n, n))
    for (i, j), v in zip(pairs, values):
        out[i, j] = out[j, i] = v
    log_event("distance_matrix", {"metric": metric, "series": n, "workers": workers})
    return out


def normalize_matrix(matrix: np.ndarray) -> np.ndarray:
    """Scale by the largest entry so distances from different spaces compare"""
    peak = float(np.max(matrix)) if np.size(matrix) else 0.0
    return matrix / peak if peak > 0 else np.array(matrix, dtype=np.float64)


def metric_report(metric: str, value: float, n: int, params: Optional[Dict[str, Any]] = None) -> MetricReport:
    report = MetricReport(metric=metric, value=float(value), n=n, params=params or {})
    log_event("metric", report.model_dump())
    return report
