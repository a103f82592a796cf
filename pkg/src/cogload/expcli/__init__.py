"""Experiment command-line interface."""

from cogload.expcli.cli import main
from cogload.expcli.config import DEFAULTS, SCHEMA_VERSION, ExperimentConfig, defaults_json

__all__ = ["DEFAULTS", "SCHEMA_VERSION", "ExperimentConfig", "defaults_json", "main"]
