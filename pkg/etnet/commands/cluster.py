import argparse
from typing import Any, Dict

from ..models import ClusterLabel
from ..services import etnet as net
from ..services import evaluation, ingest
from ..utils.logging import track_run
from ..utils.storage import RunStorage
from . import common


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("cluster", help="assign every sample to a mixture component")
    parser.add_argument("--model", required=True, help="model JSON trained with K = cluster count")
    parser.add_argument("--data", required=True, help="series to cluster")
    parser.add_argument("--window", type=int, default=120, help="window length for raw streams")
    common.add_output_flags(parser)
    common.add_plot_flag(parser)
    parser.set_defaults(handler=run_cluster)


@track_run("cluster")
def run_cluster(args: argparse.Namespace) -> Dict[str, Any]:
    model = net.load_model(args.model)
    data = ingest.ingest(args.data, args.window)
    storage = RunStorage(args.out)

    emb = net.embed_batch(model, data, args.workers)
    predicted = [net.assign_cluster(gw, gd) for gw, gd in zip(emb.gamma_w, emb.gamma_d)]
    rows = [
        ClusterLabel(id=s.id, predicted_label=p, label=s.label) for s, p in zip(data, predicted)
    ]
    summary: Dict[str, Any] = {
        "labels": storage.write_jsonl("labels.jsonl", rows),
        "samples": len(rows),
        "clusters_found": len(set(predicted)),
    }
    if common.has_labels(data):
        value = evaluation.nmi([s.label for s in data], predicted)
        report = evaluation.metric_report("nmi", value, len(rows), {"K": model.config.n_components})
        storage.write_json("metrics.json", report.model_dump())
        summary["nmi"] = value

    if args.plot_data:
        common.write_plot_data(storage, "embeddings.csv", data, emb, predicted)
    common.emit(summary)
    return summary
