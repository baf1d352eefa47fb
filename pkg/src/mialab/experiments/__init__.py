"""Declarative experiment matrix runner for the 13-row results table."""

from mialab.experiments.config import RunConfig, ScaleConfig, SCALES
from mialab.experiments.registry import Registry
from mialab.experiments.specs import ExperimentSpec, default_matrix, load_specs_dir
from mialab.experiments.runner import (
    ExperimentResult,
    dilution_experiment,
    guidance_sweep,
    run_experiment,
    run_matrix,
)

__all__ = [
    "ExperimentResult",
    "ExperimentSpec",
    "Registry",
    "RunConfig",
    "SCALES",
    "ScaleConfig",
    "default_matrix",
    "dilution_experiment",
    "guidance_sweep",
    "load_specs_dir",
    "run_experiment",
    "run_matrix",
]
