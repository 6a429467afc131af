"""
Metrics Module

Evaluation of FL models and of repeated experiments:
- auroc.py: rank AUROC, macro AUROC over labels, subgroup bias
- stats.py: t confidence intervals and paired t-tests
"""

from metrics.auroc import (
    BiasValue,
    DegenerateMetricError,
    MetricError,
    ScoredTestSet,
    auroc,
    bias,
    macro_auroc,
    macro_auroc_with_exclusions,
)
from metrics.stats import StatsError, mean_ci, paired_t_test

__version__ = "1.0.0"

__all__ = [
    "BiasValue",
    "DegenerateMetricError",
    "MetricError",
    "ScoredTestSet",
    "StatsError",
    "auroc",
    "bias",
    "macro_auroc",
    "macro_auroc_with_exclusions",
    "mean_ci",
    "paired_t_test",
]
