import argparse
from typing import Any, Dict

from ..services import datagen, ingest
from ..services import etnet as net
from ..utils.errors import ConfigError
from ..utils.logging import log_event, track_run
from ..utils.storage import RunStorage, write_corpus
from . import common

MODEL_FILE = "model.json"
REPORT_FILE = "train_report.json"


def add_parser(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("train", help="train a model on a corpus or raw stream")
    common.add_config_flags(parser)
    common.add_output_flags(parser)
    common.add_plot_flag(parser)
    parser.add_argument("--data", help="training data (corpus CSV or single-column stream)")
    parser.add_argument("--test-data", help="separate test set; disables the train/test split")
    parser.add_argument("--window", type=int, help="window length in bins for raw streams")
    parser.add_argument("--score-mode", choices=["ensemble", "w", "d"])
    parser.set_defaults(handler=run_train)


@track_run("train")
def run_train(args: argparse.Namespace) -> Dict[str, Any]:
    cfg = common.resolve_config(
        args,
        train_path=args.data,
        test_path=args.test_data,
        out_dir=args.out,
        window_length=args.window,
        score_mode=args.score_mode,
        workers=args.workers,
    )
    if not cfg.train_path:
        raise ConfigError("No training data given (--data or train_path)", {"field": "train_path"})
    storage = RunStorage(cfg.out_dir)

    data = ingest.ingest(cfg.train_path, cfg.window_length)
    if cfg.test_path:
        train = data
    else:
        train, test = ingest.split(data, cfg.train_fraction, cfg.seed, cfg.contamination)
        write_corpus(test, storage.path("test.csv"))
    if cfg.contamination > 0 and not datagen.contaminated_ids(train):
        train = datagen.contaminate_training(train, cfg.contamination, seed=cfg.seed)
    contaminated = datagen.contaminated_ids(train)

    model = net.train(cfg.model_settings(), train)
    digest = net.save_model(model, storage.path(MODEL_FILE))

    report = {
        "fingerprint": digest,
        "samples": len(train),
        "contaminated_ids": contaminated,
        "contaminated_fraction": len(contaminated) / len(train),
        "config": cfg.model_dump(by_alias=True),
        "branches": {
            b.name: {
                "history": b.history,
                "gmm": b.fitted_gmm().to_dict(),
                "energy_mean": b.energy_mean,
                "energy_std": b.energy_std,
            }
            for b in model.branches
        },
    }
    storage.write_json(REPORT_FILE, report)
    if args.plot_data:
        common.write_plot_data(
            storage, "train_embeddings.csv", train, net.embed_batch(model, train, cfg.workers)
        )
    log_event("model_trained", {"fingerprint": digest, "samples": len(train)})

    summary = {
        "model": storage.path(MODEL_FILE),
        "report": storage.path(REPORT_FILE),
        "fingerprint": digest,
        "samples": len(train),
        "contaminated": len(contaminated),
        "final_loss": {b.name: b.history[-1]["loss"] for b in model.branches},
    }
    common.emit(summary)
    return summary
