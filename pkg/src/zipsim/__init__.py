"""Simulator and evaluation toolkit for context-based zero-interaction pairing
and authentication with actively injected context stimuli."""

from .config import apply_overrides, default_config
from .harness import ExperimentConfig, RunSummary, compare_settings, run_experiment
from .presets import make_scenario
from .envsim import run_setting

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig",
    "RunSummary",
    "apply_overrides",
    "compare_settings",
    "default_config",
    "make_scenario",
    "run_experiment",
    "run_setting",
]
