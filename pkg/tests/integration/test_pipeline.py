"""
Integration tests for the command-line pipeline.

This module generates a small corpus, trains on it, and runs scoring,
clustering, explanation, baseline distances and a synthetic study end to
end.
"""

import csv
import json

import numpy as np
import pytest

from etnet import main as cli
from etnet.models import ModelConfig
from etnet.services import experiments
from etnet.services import etnet as net
from etnet.utils.storage import read_corpus, read_jsonl

pytestmark = [pytest.mark.integration, pytest.mark.slow]

TINY = {
    "N_E": 2,
    "N_L": 2,
    "N_N": 3,
    "K": 2,
    "epochs": 3,
    "learning_rate": 0.01,
    "chunk_size": 16,
    "train_fraction": 0.5,
}


def run(capsys, *argv):
    status = cli.main(["--log-level", "ERROR", *argv])
    captured = capsys.readouterr()
    assert status == 0, captured.err
    return json.loads(captured.out.strip().splitlines()[-1])


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("pipeline")
    (root / "spec.json").write_text(
        json.dumps(
            {
                "seed": 11,
                "length": 12,
                "directives": [
                    {"type": "wave", "kind": "sine", "count": 6, "period": 6, "phase_jitter": 0.3},
                    {"type": "wave", "kind": "square", "count": 6, "period": 6, "phase_jitter": 0.3},
                    {"type": "wave", "kind": "triangle", "count": 6, "period": 6, "phase_jitter": 0.3},
                    {"type": "anomaly", "anomaly_type": 2, "fraction": 0.2, "segment_length": 3},
                ],
            }
        )
    )
    (root / "config.json").write_text(json.dumps(TINY))
    return root


def test_cli_pipeline(capsys, workspace):
    """Test synth, train, score, cluster, explain and eval-dist in sequence."""
    # Given
    corpus = str(workspace / "corpus.csv")
    out = workspace / "run"

    # When
    synth = run(capsys, "synth", "--spec", str(workspace / "spec.json"), "--out", corpus)
    trained = run(
        capsys,
        "train",
        "--config",
        str(workspace / "config.json"),
        "--data",
        corpus,
        "--out",
        str(out),
        "--plot-data",
    )
    model = trained["model"]
    test_csv = str(out / "test.csv")
    scored = run(
        capsys,
        "score",
        "--model",
        model,
        "--data",
        test_csv,
        "--threshold-percentile",
        "95",
        "--out",
        str(out / "score"),
    )
    clustered = run(capsys, "cluster", "--model", model, "--data", corpus, "--out", str(out / "cluster"))
    anomaly = next(s for s in read_corpus(test_csv) if s.is_anomaly)
    explained = run(
        capsys,
        "explain",
        "--model",
        model,
        "--data",
        test_csv,
        "--train-data",
        corpus,
        "--sample-id",
        anomaly.id,
        "--n-points",
        "3",
        "--branch",
        "d",
        "--out",
        str(out / "explain"),
    )
    distances = run(
        capsys,
        "eval-dist",
        "--data",
        corpus,
        "--metric",
        "dtw",
        "--dtw-window",
        "2",
        "--normalize",
        "--workers",
        "2",
        "--out",
        str(out / "dist"),
    )

    # Then
    assert synth["rows"] == 18
    assert synth["labels"] == {"normal": 15, "anomaly-2": 3}

    assert trained["samples"] == 9
    assert trained["contaminated"] == 0
    assert len(trained["fingerprint"]) == 64
    report = json.loads((out / "train_report.json").read_text())
    assert set(report["branches"]) == {"w", "d"}
    assert len(report["branches"]["w"]["history"]) == 3
    with open(out / "train_embeddings.csv") as f:
        header = next(csv.reader(f))
    assert header[:2] == ["id", "label"]

    assert scored["samples"] == 9
    assert 0.0 <= scored["auc"] <= 1.0
    rows = list(read_jsonl(scored["scores"]))
    assert all(r["score"] == max(r["E_w"], r["E_d"]) for r in rows)
    assert scored["flagged"] == sum(1 for r in rows if r["flag"])

    assert clustered["samples"] == 18
    assert 0.0 <= clustered["nmi"] <= 1.0
    labels = list(read_jsonl(clustered["labels"]))
    assert {r["predicted_label"] for r in labels} <= {0, 1}

    assert explained["id"] == anomaly.id
    assert [r["point"] for r in explained["references"]] == [0, 1, 2]

    assert distances["series"] == 18
    assert distances["report"]["value"] == pytest.approx(1.0)


def test_saved_model_scores_like_the_original(capsys, workspace, wave_corpus, tiny_config):
    """Test that a saved and reloaded model gives identical scores."""
    # Given
    model = net.train(tiny_config, wave_corpus)
    path = str(workspace / "roundtrip.json")
    net.save_model(model, path)

    # When
    before = [s.score for s in net.score_batch(model, wave_corpus)]
    after = [s.score for s in net.score_batch(net.load_model(path), wave_corpus)]

    # Then
    assert before == after


def test_detection_suite_reports_every_type():
    """Test the per-type AUC and SCR study on a small corpus."""
    # Given
    config = ModelConfig(**{k: v for k, v in TINY.items() if k != "train_fraction"})

    # When
    run = experiments.detection_suite(
        config, n_train=9, n_test_normal=3, n_per_type=2, length=24, period=8.0, seed=2
    )

    # Then
    results = run.report.results
    assert set(results) == {"anomaly-1", "anomaly-2", "anomaly-3", "anomaly-4"}
    for values in results.values():
        assert 0.0 <= values["auc"] <= 1.0
        assert np.isfinite(values["normal_sc"])
    assert len(run.test) == 3 + 4 * 2


def test_experiment_command(capsys, workspace):
    """Test a granularity study through the CLI at a tiny scale."""
    # When
    result = run(
        capsys,
        "experiment",
        "--study",
        "granularity",
        "--scale",
        "0.004",
        "--config",
        str(workspace / "config.json"),
        "--out",
        str(workspace / "study"),
    )

    # Then
    studies = [r["study"] for r in result["reports"]]
    assert studies == ["detection", "granularity"]
    assert 0.0 <= result["reports"][1]["results"]["auc"] <= 1.0
    assert (workspace / "study" / "study_granularity.json").exists()
