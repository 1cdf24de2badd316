from synmix.experiments.config import EXPERIMENTS, ConfigError, ExperimentConfig
from synmix.experiments.report import coverage_width_report, rate_fit
from synmix.experiments.runner import run_experiment

__all__ = ["EXPERIMENTS", "ConfigError", "ExperimentConfig", "coverage_width_report", "rate_fit", "run_experiment"]
