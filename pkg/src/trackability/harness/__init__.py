"""Experiment runner, verification suite and command-line entry point."""

from .experiment import ExperimentConfig, RunManifest, parse_config, run_experiment
from .verify import verify_suite

__all__ = ["ExperimentConfig", "RunManifest", "parse_config", "run_experiment", "verify_suite"]
