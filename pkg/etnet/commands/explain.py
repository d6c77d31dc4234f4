import argparse
from typing import Any, Dict

from ..services import etnet as net
from ..services import ingest
from ..utils.errors import ConfigError
from ..utils.logging import track_run
from ..utils.storage import RunStorage
from . import common


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser(
        "explain", help="reference training samples along the line to the normal center"
    )
    parser.add_argument("--model", required=True, help="model JSON written by train")
    parser.add_argument("--data", required=True, help="series containing the sample")
    parser.add_argument("--train-data", help="reference set; defaults to --data")
    parser.add_argument("--sample-id", required=True)
    parser.add_argument("--n-points", type=int, default=5)
    parser.add_argument("--k-neighbors", type=int, default=1)
    parser.add_argument("--branch", choices=["w", "d"], default="w")
    parser.add_argument("--window", type=int, default=120, help="window length for raw streams")
    common.add_output_flags(parser)
    parser.set_defaults(handler=run_explain)


@track_run("explain")
def run_explain(args: argparse.Namespace) -> Dict[str, Any]:
    model = net.load_model(args.model)
    data = ingest.ingest(args.data, args.window)
    training = ingest.ingest(args.train_data, args.window) if args.train_data else data

    sample = next((s for s in data if s.id == args.sample_id), None)
    if sample is None:
        raise ConfigError(f"Unknown sample id {args.sample_id!r}", {"sample_id": args.sample_id})

    explanation = net.attribute(
        model, sample, training, args.branch, args.n_points, args.k_neighbors
    )
    payload = explanation.model_dump()
    path = RunStorage(args.out).write_json(f"explain_{sample.id}.json", payload)
    common.emit({"explanation": path, **payload})
    return payload
