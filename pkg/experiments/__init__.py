"""
Experiments Module

Config-driven, repeated and seeded FL valuation experiments:
- config.py: pydantic experiment configuration, JSON loading, CLI overrides
- seeds.py: counter-based per-repeat, per-stage seeds
- runner.py: data -> split -> flip -> FedAvg -> Shapley -> rewards, aggregation
- flip_study.py: flipped vs unflipped counterpart rewards across flip ratios
- scalability.py: ensemble valuation timing per consortium size
- reports.py: summary.json and plot-ready CSVs
"""

from experiments.config import ConfigError, ExperimentConfig, apply_overrides, config_schema, load_config
from experiments.reports import ReportError, emit_reports, load_report, save_report
from experiments.runner import ExperimentAborted, RepeatResult, RunReport, run_experiment, run_repeat
from experiments.flip_study import FlipStudyReport, label_flip_study
from experiments.scalability import measure_scalability

__version__ = "1.0.0"

__all__ = [
    "ConfigError",
    "ExperimentAborted",
    "ExperimentConfig",
    "FlipStudyReport",
    "RepeatResult",
    "ReportError",
    "RunReport",
    "apply_overrides",
    "config_schema",
    "emit_reports",
    "label_flip_study",
    "load_config",
    "load_report",
    "measure_scalability",
    "run_experiment",
    "run_repeat",
    "save_report",
]
