"""Scenario configuration, runs, c sweeps, reports and the command line."""
from .config import ScenarioConfig, load_config, parse_config_text
from .report import monotonicity_report
from .scenario import ScenarioResult, read_csv, run_reference, run_scenario
from .studies import StudyResult, converge_c_to_infinity, converge_c_to_zero

__all__ = [
    "ScenarioConfig", "ScenarioResult", "StudyResult", "converge_c_to_infinity", "converge_c_to_zero",
    "load_config", "monotonicity_report", "parse_config_text", "read_csv", "run_reference", "run_scenario",
]
