#!/usr/bin/env python3
"""
AUROC and subgroup bias.

AUROC uses the Mann-Whitney rank formulation with average ranks, so tied
scores contribute 1/2. The total AUROC of the multi-label task is the
unweighted mean over label columns that contain both classes; bias is the
macro AUROC on subgroup A minus the macro AUROC on subgroup B of one
protected attribute (positive favors A).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from synthdata.generator import ATTRIBUTES, SampleSet, Subgroup

logger = logging.getLogger(__name__)


class DegenerateMetricError(ValueError):
    """Labels contain a single class; AUROC is undefined."""


class MetricError(ValueError):
    """Metric cannot be computed for the given test set."""


@dataclass(frozen=True)
class ScoredTestSet:
    probabilities: np.ndarray          # (n, L)
    labels: np.ndarray                 # (n, L) in {0, 1}
    groups: dict = field(default_factory=dict)  # attribute -> (n,) codes, 0 = A

    def __post_init__(self):
        probabilities = np.atleast_2d(np.asarray(self.probabilities, dtype=np.float64))
        labels = np.atleast_2d(np.asarray(self.labels))
        if probabilities.shape != labels.shape:
            raise MetricError(f"probabilities {probabilities.shape} and labels {labels.shape} are not aligned")
        if np.any((probabilities < 0) | (probabilities > 1)) or not np.all(np.isfinite(probabilities)):
            raise MetricError("probabilities must lie in [0, 1]")
        for attribute, codes in self.groups.items():
            if len(codes) != len(labels):
                raise MetricError(f"{attribute} tags have length {len(codes)}, test set {len(labels)}")
        object.__setattr__(self, "probabilities", probabilities)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_samples(cls, probabilities: np.ndarray, samples: SampleSet) -> "ScoredTestSet":
        return cls(probabilities, samples.labels, {a: samples.group(a) for a in ATTRIBUTES})

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, attribute: str, code: int) -> "ScoredTestSet":
        if attribute not in self.groups:
            raise MetricError(f"test set carries no '{attribute}' tags")
        rows = np.asarray(self.groups[attribute]) == code
        return ScoredTestSet(
            self.probabilities[rows],
            self.labels[rows],
            {a: np.asarray(g)[rows] for a, g in self.groups.items()},
        )


@dataclass(frozen=True)
class BiasValue:
    value: float
    attribute: str = "sex"

    @property
    def favored(self) -> Subgroup | None:
        if self.value > 0:
            return Subgroup.A
        if self.value < 0:
            return Subgroup.B
        return None


def auroc(scores, labels) -> float:
    scores = np.asarray(scores, dtype=np.float64).ravel()
    labels = np.asarray(labels).ravel()
    if scores.shape != labels.shape:
        raise MetricError(f"{len(scores)} scores for {len(labels)} labels")
    positive = labels == 1
    n_pos = int(positive.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DegenerateMetricError(f"labels hold a single class ({n_pos} positive, {n_neg} negative)")
    ranks = rankdata(scores)
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def valid_label_columns(labels: np.ndarray) -> np.ndarray:
    """Mask of label columns holding both classes."""
    labels = np.atleast_2d(labels)
    positives = labels.sum(axis=0)
    return (positives > 0) & (positives < len(labels))


def macro_auroc_with_exclusions(ts: ScoredTestSet, columns: np.ndarray | None = None) -> tuple[float, list[int]]:
    """Mean per-label AUROC over usable columns, plus the excluded column indices."""
    usable = valid_label_columns(ts.labels)
    if columns is not None:
        usable &= np.asarray(columns, dtype=bool)
    excluded = [int(j) for j in np.flatnonzero(~usable)]
    if not usable.any():
        raise MetricError(f"all {ts.labels.shape[1]} label columns are degenerate")
    values = [auroc(ts.probabilities[:, j], ts.labels[:, j]) for j in np.flatnonzero(usable)]
    if excluded:
        logger.warning("macro_auroc excluded degenerate label columns %s", excluded)
    return float(np.mean(values)), excluded


def macro_auroc(ts: ScoredTestSet) -> float:
    return macro_auroc_with_exclusions(ts)[0]


def bias(ts: ScoredTestSet, attribute: str = "sex") -> BiasValue:
    """
    macro AUROC(subgroup A) - macro AUROC(subgroup B).

    Both subgroups are averaged over the same label columns: those holding
    both classes in each subgroup.
    """
    group_a = ts.subset(attribute, 0)
    group_b = ts.subset(attribute, 1)
    if len(group_a) == 0 or len(group_b) == 0:
        missing = "A" if len(group_a) == 0 else "B"
        raise MetricError(f"subgroup {missing} of '{attribute}' is missing from the test set")
    shared = valid_label_columns(group_a.labels) & valid_label_columns(group_b.labels)
    auroc_a, _ = macro_auroc_with_exclusions(group_a, shared)
    auroc_b, _ = macro_auroc_with_exclusions(group_b, shared)
    return BiasValue(auroc_a - auroc_b, attribute)
