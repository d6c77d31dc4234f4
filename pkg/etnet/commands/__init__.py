"""CLI subcommands; each module exposes ``add_parser``."""

from . import cluster, eval_dist, experiment, explain, score, synth, train

COMMANDS = (train, score, cluster, explain, synth, eval_dist, experiment)
