"""Seeded experiment runners and report emission."""

from .config import ConfigError, ExperimentConfig, load_config
from .report import ExperimentReport, Row, write_reports
from .risk import run_risk_curve, run_scaling_fit
from .shadows import run_packing, run_shadow_discrimination, run_shadows
from .suite import RUNNERS, run, run_bound_suite, run_chi2, run_moments, run_tomography
from .tables import run_lower_bound_table

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentReport",
    "RUNNERS",
    "Row",
    "load_config",
    "run",
    "run_bound_suite",
    "run_chi2",
    "run_lower_bound_table",
    "run_moments",
    "run_packing",
    "run_risk_curve",
    "run_scaling_fit",
    "run_shadow_discrimination",
    "run_shadows",
    "run_tomography",
    "write_reports",
]
