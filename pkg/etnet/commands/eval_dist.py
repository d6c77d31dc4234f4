import argparse
from typing import Any, Dict

from ..services import evaluation, ingest
from ..utils.logging import track_run
from ..utils.storage import RunStorage
from . import common


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "eval-dist", help="pairwise Euclidean, DTW or EDR distances between series"
    )
    parser.add_argument("--data", required=True)
    parser.add_argument("--metric", choices=sorted(evaluation.METRICS), default="euclidean")
    parser.add_argument("--dtw-window", type=int, help="Sakoe-Chiba half-width for DTW")
    parser.add_argument("--epsilon", type=float, default=0.1, help="EDR match tolerance")
    parser.add_argument("--normalize", action="store_true", help="divide by the largest distance")
    parser.add_argument("--window", type=int, default=120, help="window length for raw streams")
    common.add_output_flags(parser)
    parser.set_defaults(handler=run_eval_dist)


@track_run("eval-dist")
def run_eval_dist(args: argparse.Namespace) -> Dict[str, Any]:
    data = ingest.ingest(args.data, args.window)
    params: Dict[str, Any] = {}
    if args.metric == "dtw":
        params["window"] = args.dtw_window
    elif args.metric == "edr":
        params["epsilon"] = args.epsilon

    matrix = evaluation.distance_matrix(
        [s.values for s in data], args.metric, workers=args.workers, **params
    )
    if args.normalize:
        matrix = evaluation.normalize_matrix(matrix)

    storage = RunStorage(args.out)
    ids = [s.id for s in data]
    path = storage.write_rows(
        f"distances_{args.metric}.csv",
        ["id"] + ids,
        ([ids[i]] + [repr(float(v)) for v in row] for i, row in enumerate(matrix)),
    )
    report = evaluation.metric_report(
        args.metric,
        float(matrix.max()) if matrix.size else 0.0,
        len(data),
        {**params, "normalized": args.normalize, "statistic": "max"},
    )
    summary = {"matrix": path, "series": len(data), "report": report.model_dump()}
    common.emit(summary)
    return summary
