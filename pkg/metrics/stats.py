"""Confidence intervals and paired tests over repeated runs."""

from __future__ import annotations

import numpy as np
from scipy import stats


class StatsError(ValueError):
    """Too few or misaligned observations."""


def mean_ci(values, level: float = 0.95) -> tuple[float, float]:
    """Mean and Student-t half-width with n - 1 degrees of freedom."""
    values = np.asarray(values, dtype=np.float64).ravel()
    if len(values) < 2:
        raise StatsError(f"a confidence interval needs >= 2 values, got {len(values)}")
    if not 0.0 < level < 1.0:
        raise StatsError(f"confidence level must lie in (0, 1), got {level}")
    n = len(values)
    mean = float(values.mean())
    if np.ptp(values) == 0.0:
        return mean, 0.0
    sd = float(values.std(ddof=1))
    q = stats.t.ppf(0.5 + level / 2.0, df=n - 1)
    return mean, float(q * sd / np.sqrt(n))


def paired_t_test(a, b) -> float:
    """
    Two-sided p-value of the paired t-test on a - b.

    Identical pairs give p = 1. Constant nonzero differences give the smallest
    positive float instead of an undefined statistic.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if len(a) != len(b):
        raise StatsError(f"paired samples differ in length: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise StatsError(f"a paired t-test needs >= 2 pairs, got {len(a)}")
    diff = a - b
    if np.all(diff == diff[0]):
        return 1.0 if diff[0] == 0 else float(np.finfo(np.float64).tiny)
    return float(stats.ttest_rel(a, b).pvalue)
