"""Experiment registry, configs, reports and the statistics they use."""

from ..stats import binomial_ci, loglog_slope
from .config import ExperimentConfig, make_config, nearest_key, parse_config
from .experiments import REGISTRY, describe, get_experiment, run_experiment, schema_for
from .report import Report, Result

__all__ = [
    "REGISTRY",
    "ExperimentConfig",
    "Report",
    "Result",
    "binomial_ci",
    "describe",
    "get_experiment",
    "loglog_slope",
    "make_config",
    "nearest_key",
    "parse_config",
    "run_experiment",
    "schema_for",
]
