"""CLI harness: experiment execution, aggregation, and analysis export."""

from .cli import main
from .runner import ExperimentSpec, run_experiment

__all__ = ["ExperimentSpec", "main", "run_experiment"]
