"""Experiment orchestration and command-line entry points."""

from .config import ConfigError, ExperimentConfig, load_config
from .experiment import (
    ReleaseRecord,
    build_graph,
    resolve_detectors,
    run_decomposition,
    run_experiment,
    run_leaderboard,
    run_one_shot,
    run_top1,
)
