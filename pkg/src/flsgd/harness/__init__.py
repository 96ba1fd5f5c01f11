"""Experiment orchestration: configs, rate sweeps, bound audits and CSV I/O."""

from .audit import AuditReport, run_bound_audit
from .config import ExperimentConfig, from_dict, load_config
from .experiments import RateReport, fit_slope, run_rate_experiment, theorem_schedule
from .io import export_curves, ingest_curves

__all__ = [
    "AuditReport",
    "ExperimentConfig",
    "RateReport",
    "export_curves",
    "fit_slope",
    "from_dict",
    "ingest_curves",
    "load_config",
    "run_bound_audit",
    "run_rate_experiment",
    "theorem_schedule",
]
