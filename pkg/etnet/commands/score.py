import argparse
from typing import Any, Dict

from ..services import etnet as net
from ..services import evaluation, ingest
from ..utils.logging import log_event, track_run
from ..utils.storage import RunStorage
from . import common


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("score", help="anomaly scores for every sample")
    parser.add_argument("--model", required=True, help="model JSON written by train")
    parser.add_argument("--data", required=True, help="series to score")
    parser.add_argument("--window", type=int, default=120, help="window length for raw streams")
    parser.add_argument(
        "--threshold-percentile",
        type=float,
        help="flag samples scoring above this percentile of the training scores",
    )
    parser.add_argument("--score-mode", choices=["ensemble", "w", "d"])
    common.add_output_flags(parser)
    common.add_plot_flag(parser)
    parser.set_defaults(handler=run_score)


def load(model_path: str, score_mode: Any = None) -> net.EtNetModel:
    model = net.load_model(model_path)
    if score_mode:
        model.config = model.config.model_copy(update={"score_mode": score_mode})
    return model


@track_run("score")
def run_score(args: argparse.Namespace) -> Dict[str, Any]:
    model = load(args.model, args.score_mode)
    data = ingest.ingest(args.data, args.window)
    storage = RunStorage(args.out)

    samples = net.score_batch(
        model, data, workers=args.workers, threshold_percentile=args.threshold_percentile
    )
    summary: Dict[str, Any] = {
        "scores": storage.write_jsonl("scores.jsonl", samples),
        "samples": len(samples),
        "score_mode": model.config.score_mode,
    }
    if args.threshold_percentile is not None:
        summary["threshold"] = net.threshold(model, args.threshold_percentile)
        summary["flagged"] = sum(1 for s in samples if s.flag)

    if common.has_binary_labels(data):
        value = evaluation.auc([int(s.is_anomaly) for s in data], [s.score for s in samples])
        report = evaluation.metric_report(
            "auc", value, len(samples), {"score_mode": model.config.score_mode}
        )
        storage.write_json("metrics.json", report.model_dump())
        summary["auc"] = value
    else:
        log_event("auc_skipped", {"reason": "labels missing or single-class"})

    if args.plot_data:
        common.write_plot_data(
            storage, "embeddings.csv", data, net.embed_batch(model, data, args.workers)
        )
    common.emit(summary)
    return summary
