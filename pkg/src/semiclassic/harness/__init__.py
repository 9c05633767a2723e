"""Scenario catalog, pipelines, file emission and the command line."""
from .config import CATALOG, ConfigError, Scenario, default_tol, load_config, make_scenario
from .runner import RateResult, RunManifest, emp_sweep, rate_experiment, run_scenario

__all__ = [
    "CATALOG", "ConfigError", "Scenario", "default_tol", "load_config", "make_scenario",
    "RateResult", "RunManifest", "emp_sweep", "rate_experiment", "run_scenario",
]
