"""Label-flip corruption of a client's training partition."""

from __future__ import annotations

import logging
from dataclasses import replace

import numpy as np

from synthdata.generator import ConfigurationError
from synthdata.splits import ClientDataset, half_up

logger = logging.getLogger(__name__)


def flip_count(n_train: int, n_labels: int, ratio: float) -> int:
    if not 0.0 <= ratio <= 1.0:
        raise ConfigurationError(f"flip ratio must lie in [0, 1], got {ratio}")
    return half_up(ratio * n_train * n_labels)


def flip_positions(n_train: int, n_labels: int, ratio: float, seed: int) -> np.ndarray:
    """Flat (sample, label) positions to invert, drawn without replacement."""
    k = flip_count(n_train, n_labels, ratio)
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(n_train * n_labels, size=k, replace=False))


def apply_flips(ds: ClientDataset, positions: np.ndarray) -> ClientDataset:
    """Invert the given training label entries. Applying the same positions twice restores ds."""
    if len(positions) == 0:
        return ds
    labels = ds.train.labels.copy()
    flat = labels.reshape(-1)
    flat[positions] ^= 1
    return replace(ds, train=ds.train.with_labels(labels))


def flip_labels(ds: ClientDataset, ratio: float, seed: int) -> ClientDataset:
    positions = flip_positions(len(ds.train), ds.train.n_labels, ratio, seed)
    logger.info("flip client=%s ratio=%.4f entries=%d", ds.client_id, ratio, len(positions))
    return apply_flips(ds, positions)
