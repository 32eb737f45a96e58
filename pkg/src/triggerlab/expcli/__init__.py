"""Experiment runner: named suites, config parsing, CSV and SVG emission."""

from triggerlab.expcli.config import ExperimentConfig, parse_config, serialize_config
from triggerlab.expcli.rows import ResultRow, rows_to_csv
from triggerlab.expcli.suites import run_suite

__all__ = [
    "ExperimentConfig",
    "parse_config",
    "serialize_config",
    "ResultRow",
    "rows_to_csv",
    "run_suite",
]
