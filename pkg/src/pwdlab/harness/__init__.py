"""Operational surface: scenario configs, experiment runner, verification suites."""

from .config import ScenarioSpec, load_scenario, bundled_scenario, bundled_scenario_names
from .runner import ReportRow, run_experiment, write_report_csv
from .verify import verify_suite, SUITE_NAMES

__all__ = [
    "ScenarioSpec",
    "load_scenario",
    "bundled_scenario",
    "bundled_scenario_names",
    "ReportRow",
    "run_experiment",
    "write_report_csv",
    "verify_suite",
    "SUITE_NAMES",
]
