"""Configuration, orchestration and output for identification experiments."""
from .config import ConfigError, Criterion, ExperimentConfig, Mode, load_config, parse_config
from .experiments import (ExperimentReport, Interval, converged_draw, emit_plot_data, grid_intervals,
                          reproduce_paper, run)

__all__ = ["ConfigError", "Criterion", "ExperimentConfig", "ExperimentReport", "Interval", "Mode",
           "converged_draw", "emit_plot_data", "grid_intervals", "load_config", "parse_config",
           "reproduce_paper", "run"]
