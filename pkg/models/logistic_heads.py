"""
Per-client logistic heads over deep features.

One scikit-learn LogisticRegression per label. A label column holding a
single class cannot be fitted; that head degenerates to a constant predicting
the column's base rate clipped to [EPS, 1 - EPS], and the label index is
recorded in `degenerate_labels`.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logit
from sklearn.exceptions import ConvergenceWarning
from sklearn.linear_model import LogisticRegression

from models.mlp import EPS

logger = logging.getLogger(__name__)


@dataclass
class LogisticHeads:
    n_features: int
    estimators: list = field(default_factory=list)
    base_rates: np.ndarray | None = None
    degenerate_labels: list[int] = field(default_factory=list)
    client_id: str = ""

    @property
    def n_labels(self) -> int:
        return len(self.estimators)

    def decision_function(self, features: np.ndarray) -> np.ndarray:
        """Per-label logits, shape (n, L)."""
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        out = np.empty((len(features), self.n_labels))
        for j, estimator in enumerate(self.estimators):
            if estimator is None:
                out[:, j] = logit(np.clip(self.base_rates[j], EPS, 1.0 - EPS))
            else:
                out[:, j] = estimator.decision_function(features)
        return out

    def predict_proba(self, features: np.ndarray) -> np.ndarray:
        """Per-label probabilities, shape (n, L)."""
        features = np.atleast_2d(np.asarray(features, dtype=np.float64))
        out = np.empty((len(features), self.n_labels))
        for j, estimator in enumerate(self.estimators):
            if estimator is None:
                out[:, j] = np.clip(self.base_rates[j], EPS, 1.0 - EPS)
            else:
                out[:, j] = expit(estimator.decision_function(features))
        return out


def fit_logistic_head(
    features: np.ndarray,
    labels: np.ndarray,
    *,
    seed: int = 0,
    max_iter: int = 500,
    C: float = 1.0,
    client_id: str = "",
) -> LogisticHeads:
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    if len(features) < 1:
        raise ValueError("cannot fit logistic heads on an empty feature set")
    if labels.shape[0] != features.shape[0]:
        raise ValueError(f"features have {features.shape[0]} rows, labels {labels.shape[0]}")

    heads = LogisticHeads(
        n_features=features.shape[1],
        base_rates=labels.mean(axis=0).astype(np.float64),
        client_id=client_id,
    )
    for j in range(labels.shape[1]):
        column = labels[:, j]
        if np.all(column == column[0]):
            heads.estimators.append(None)
            heads.degenerate_labels.append(j)
            continue
        estimator = LogisticRegression(C=C, max_iter=max_iter, solver="lbfgs", random_state=seed)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            estimator.fit(features, column)
        heads.estimators.append(estimator)

    if heads.degenerate_labels:
        logger.warning("client=%s degenerate label columns %s fall back to base rates",
                       client_id or "-", heads.degenerate_labels)
    return heads
