"""Experiment harness: TOML configs, runs, sweeps and the CLI."""

from .config import ExperimentConfig, ProblemConfig, expand_runs, experiment_from_mapping, load_config
from .runner import TRACE_HEADER, RunResult, SweepResult, build_problem, execute, run_experiment, sweep

__all__ = [
    "TRACE_HEADER",
    "ExperimentConfig",
    "ProblemConfig",
    "RunResult",
    "SweepResult",
    "build_problem",
    "execute",
    "expand_runs",
    "experiment_from_mapping",
    "load_config",
    "run_experiment",
    "sweep",
]
