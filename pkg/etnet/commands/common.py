import argparse
import json
import sys
from typing import Any, Dict, List, Optional, Sequence

from ..config import load_config
from ..models import RunConfig, TimeSeries
from ..services.etnet import Embeddings
from ..utils.storage import RunStorage


def add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON run config (N_E, N_L, N_N, K as keys)")
    parser.add_argument("--preset", help="hyperparameter preset from config/presets.yaml")
    parser.add_argument("--seed", type=int, help="override the configured seed")


def add_output_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--workers", type=int, default=1, help="worker threads for inference")


def add_plot_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--plot-data",
        action="store_true",
        help="also write per-sample latent coordinates and labels as CSV",
    )


def resolve_config(args: argparse.Namespace, **overrides: Any) -> RunConfig:
    return load_config(
        getattr(args, "config", None),
        getattr(args, "preset", None),
        {"seed": getattr(args, "seed", None), **overrides},
    )


def emit(payload: Dict[str, Any]) -> None:
    """Command result as one JSON object on stdout"""
    sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
    sys.stdout.flush()


def has_binary_labels(data: Sequence[TimeSeries]) -> bool:
    if any(s.label is None for s in data):
        return False
    flags = {s.is_anomaly for s in data}
    return flags == {True, False}


def has_labels(data: Sequence[TimeSeries]) -> bool:
    return bool(data) and all(s.label is not None for s in data)


def write_plot_data(
    storage: RunStorage,
    name: str,
    data: Sequence[TimeSeries],
    emb: Embeddings,
    predicted: Optional[Sequence[int]] = None,
) -> str:
    """id, label, optional predicted cluster, then z_w and z_d coordinates"""
    w_cols = [f"z_w{i}" for i in range(emb.z_w.shape[1])]
    d_cols = [f"z_d{i}" for i in range(emb.z_d.shape[1])]
    header: List[str] = ["id", "label"] + (["predicted"] if predicted is not None else [])
    rows = []
    for i, s in enumerate(data):
        row: List[Any] = [s.id, s.label or ""]
        if predicted is not None:
            row.append(int(predicted[i]))
        coords = list(emb.z_w[i]) + list(emb.z_d[i])
        rows.append(row + [repr(float(v)) for v in coords])
    return storage.write_rows(name, header + w_cols + d_cols, rows)
