import argparse
from typing import Any, Dict

from ..services import experiments
from ..utils.logging import track_run
from ..utils.storage import RunStorage
from . import common


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("experiment", help="run a synthetic study")
    parser.add_argument("--study", choices=experiments.STUDIES, required=True)
    parser.add_argument(
        "--scale", type=float, default=1.0, help="multiplier on the default corpus sizes"
    )
    parser.add_argument("--noise-type", type=int, choices=[1, 2, 3, 4], default=4)
    parser.add_argument("--level", type=float, help="noise level (noise study)")
    parser.add_argument("--fraction", type=float, default=0.1, help="contamination fraction")
    parser.add_argument("--factor", type=int, default=2, help="interval factor (granularity)")
    common.add_config_flags(parser)
    parser.add_argument("--out", default="out", help="output directory")
    parser.set_defaults(handler=run_experiment)


@track_run("experiment")
def run_experiment(args: argparse.Namespace) -> Dict[str, Any]:
    cfg = common.resolve_config(args)
    reports = experiments.run_study(
        args.study,
        cfg.model_settings(),
        seed=cfg.seed,
        scale=args.scale,
        noise_type=args.noise_type,
        level=args.level,
        fraction=args.fraction,
        factor=args.factor,
    )
    payload = {"study": args.study, "reports": [r.model_dump() for r in reports]}
    path = RunStorage(args.out).write_json(f"study_{args.study}.json", payload)
    common.emit({"output": path, **payload})
    return payload
