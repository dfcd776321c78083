"""Experiment drivers, configuration and reports."""
from .common import NumericalError
from .config import ConfigError, ExperimentConfig, load_config
from .convergence import run_convergence
from .ground_state import run_ground_state
from .report import Report, emit_report, fit_rate
from .uniform_field import run_uniform_field

__all__ = ["NumericalError", "ConfigError", "ExperimentConfig", "load_config", "run_convergence",
           "run_ground_state", "run_uniform_field", "Report", "emit_report", "fit_rate"]
