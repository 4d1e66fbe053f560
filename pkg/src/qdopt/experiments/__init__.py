"""Experiment harness: configuration, trial runner, batch checks and CLI."""

from .config import ConfigError, ExperimentConfig, load_config, parse_seeds
from .runner import (
    MissingTrajectory,
    build_instance,
    run_experiment,
    run_trial,
    table2,
    verify_bounds,
)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "MissingTrajectory",
    "build_instance",
    "load_config",
    "parse_seeds",
    "run_experiment",
    "run_trial",
    "table2",
    "verify_bounds",
]
