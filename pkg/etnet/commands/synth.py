import argparse
import hashlib
import os
from typing import Any, Dict

from ..config import parse, read_json
from ..models import SynthSpec
from ..services import datagen
from ..utils.logging import track_run
from ..utils.storage import write_corpus
from . import common


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("synth", help="generate a synthetic corpus from a JSON spec")
    parser.add_argument("--spec", required=True, help="generation spec (JSON)")
    parser.add_argument("--seed", type=int, help="override the spec seed")
    parser.add_argument("--out", default="out", help="output directory or .csv path")
    parser.set_defaults(handler=run_synth)


@track_run("synth")
def run_synth(args: argparse.Namespace) -> Dict[str, Any]:
    raw = read_json(args.spec)
    if args.seed is not None:
        raw["seed"] = args.seed
    spec: SynthSpec = parse(SynthSpec, raw, "generation spec")

    corpus = datagen.generate_corpus(spec)
    path = args.out if args.out.endswith(".csv") else os.path.join(args.out, "corpus.csv")
    write_corpus(corpus, path)
    with open(path, "rb") as f:
        digest = hashlib.sha256(f.read()).hexdigest()

    labels: Dict[str, int] = {}
    for s in corpus:
        labels[s.label or ""] = labels.get(s.label or "", 0) + 1
    summary = {"corpus": path, "rows": len(corpus), "sha256": digest, "labels": labels}
    common.emit(summary)
    return summary
