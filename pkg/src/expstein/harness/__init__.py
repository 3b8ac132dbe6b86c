"""Experiment configs, runners and the command line interface."""
from .config import ExperimentConfig, load, loads, parse_config, set_path, with_overrides
from .experiments import (MODELS, ROW_FIELDS, ExperimentResult, SweepResult, VerificationRow,
                          report_json, rows_csv, run_experiment, samples_csv, simulate_only, sweep,
                          write_outputs)

__all__ = ["ExperimentConfig", "load", "loads", "parse_config", "set_path", "with_overrides",
           "MODELS", "ROW_FIELDS", "ExperimentResult", "SweepResult", "VerificationRow",
           "report_json", "rows_csv", "run_experiment", "samples_csv", "simulate_only", "sweep",
           "write_outputs"]
