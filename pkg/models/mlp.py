#!/usr/bin/env python3
"""
Shared multi-label classifier trained by the FL clients.

A linear model (hidden width 0) or a one-hidden-layer ReLU network with L
sigmoid outputs, trained by mini-batch SGD on mean binary cross-entropy.
Parameters live in one flat vector so FedAvg and coalition reconstruction can
work on plain numpy arrays:

    [ W1 (d x h) | b1 (h) | W2 (h x L) | b2 (L) ]     hidden width h > 0
    [ W (d x L)  | b (L) ]                            linear model
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

logger = logging.getLogger(__name__)

# log arguments in the BCE loss are clipped to [EPS, 1 - EPS]
EPS = 1e-7
_P_LOW = np.finfo(np.float64).tiny
_P_HIGH = 1.0 - np.finfo(np.float64).epsneg


class ShapeError(ValueError):
    """Input or parameter dimensions do not match the architecture."""


class TrainingError(RuntimeError):
    """Non-finite loss during local training."""

    def __init__(self, message: str, round_index: int | None = None, batch_index: int | None = None):
        super().__init__(message)
        self.round_index = round_index
        self.batch_index = batch_index


@dataclass(frozen=True)
class Architecture:
    n_inputs: int
    n_hidden: int
    n_outputs: int

    def __post_init__(self):
        if self.n_inputs <= 0 or self.n_outputs <= 0 or self.n_hidden < 0:
            raise ShapeError(f"invalid architecture {self}")

    @property
    def is_linear(self) -> bool:
        return self.n_hidden == 0

    @property
    def n_params(self) -> int:
        d, h, L = self.n_inputs, self.n_hidden, self.n_outputs
        if self.is_linear:
            return d * L + L
        return d * h + h + h * L + L


@dataclass(frozen=True)
class ModelParams:
    """Immutable flat parameter vector plus its architecture."""
    arch: Architecture
    vector: np.ndarray

    def __post_init__(self):
        vector = np.asarray(self.vector, dtype=np.float64)
        if vector.shape != (self.arch.n_params,):
            raise ShapeError(f"parameter vector has shape {vector.shape}, architecture needs ({self.arch.n_params},)")
        if not np.all(np.isfinite(vector)):
            raise ShapeError("parameter vector contains non-finite entries")
        vector.setflags(write=False)
        object.__setattr__(self, "vector", vector)

    def unpack(self) -> tuple[np.ndarray, ...]:
        """Views (W1, b1, W2, b2), or (W, b) for the linear model."""
        d, h, L = self.arch.n_inputs, self.arch.n_hidden, self.arch.n_outputs
        v = self.vector
        if self.arch.is_linear:
            return v[:d * L].reshape(d, L), v[d * L:]
        o1 = d * h
        o2 = o1 + h
        o3 = o2 + h * L
        return v[:o1].reshape(d, h), v[o1:o2], v[o2:o3].reshape(h, L), v[o3:]

    def with_vector(self, vector: np.ndarray) -> "ModelParams":
        return ModelParams(self.arch, vector)


def init_params(arch: Architecture, seed: int) -> ModelParams:
    """He-normal hidden weights, scaled-normal output weights, zero biases; linear model starts at zero."""
    if arch.is_linear:
        return ModelParams(arch, np.zeros(arch.n_params))
    rng = np.random.default_rng(seed)
    d, h, L = arch.n_inputs, arch.n_hidden, arch.n_outputs
    w1 = rng.normal(0.0, np.sqrt(2.0 / d), size=(d, h))
    w2 = rng.normal(0.0, np.sqrt(1.0 / h), size=(h, L))
    return ModelParams(arch, np.concatenate([w1.ravel(), np.zeros(h), w2.ravel(), np.zeros(L)]))


def _check_inputs(params: ModelParams, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    x2 = x[None, :] if squeeze else x
    if x2.ndim != 2 or x2.shape[1] != params.arch.n_inputs:
        raise ShapeError(f"input has shape {x.shape}, model expects {params.arch.n_inputs} features")
    return x2


def _forward(params: ModelParams, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Returns (logits, hidden activations, hidden pre-activations)."""
    if params.arch.is_linear:
        w, b = params.unpack()
        return x @ w + b, x, None
    w1, b1, w2, b2 = params.unpack()
    pre = x @ w1 + b1
    hidden = np.maximum(pre, 0.0)
    return hidden @ w2 + b2, hidden, pre


def predict_logits(params: ModelParams, x: np.ndarray) -> np.ndarray:
    x2 = _check_inputs(params, x)
    logits, _, _ = _forward(params, x2)
    return logits[0] if np.ndim(x) == 1 else logits


def predict_proba(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """Per-label probabilities, strictly inside (0, 1)."""
    return np.clip(expit(predict_logits(params, x)), _P_LOW, _P_HIGH)


def extract_features(params: ModelParams, x: np.ndarray) -> np.ndarray:
    """Penultimate-layer activations; the input itself for the linear model."""
    x2 = _check_inputs(params, x)
    _, hidden, _ = _forward(params, x2)
    return hidden[0] if np.ndim(x) == 1 else hidden


def bce_loss(params: ModelParams, x: np.ndarray, y: np.ndarray) -> float:
    """Mean binary cross-entropy over all (sample, label) entries."""
    x2 = _check_inputs(params, x)
    y2 = np.asarray(y, dtype=np.float64).reshape(len(x2), -1)
    p = np.clip(expit(_forward(params, x2)[0]), EPS, 1.0 - EPS)
    return float(-np.mean(y2 * np.log(p) + (1.0 - y2) * np.log(1.0 - p)))


def bce_gradient(params: ModelParams, x: np.ndarray, y: np.ndarray) -> tuple[float, np.ndarray]:
    """Loss and flat gradient of the mean BCE with respect to the parameter vector."""
    x2 = _check_inputs(params, x)
    y2 = np.asarray(y, dtype=np.float64).reshape(len(x2), -1)
    logits, hidden, pre = _forward(params, x2)
    p = expit(logits)
    pc = np.clip(p, EPS, 1.0 - EPS)
    loss = float(-np.mean(y2 * np.log(pc) + (1.0 - y2) * np.log(1.0 - pc)))

    g_logits = (p - y2) / y2.size
    if params.arch.is_linear:
        return loss, np.concatenate([(x2.T @ g_logits).ravel(), g_logits.sum(axis=0)])

    _, _, w2, _ = params.unpack()
    g_w2 = hidden.T @ g_logits
    g_b2 = g_logits.sum(axis=0)
    g_pre = (g_logits @ w2.T) * (pre > 0)
    g_w1 = x2.T @ g_pre
    g_b1 = g_pre.sum(axis=0)
    return loss, np.concatenate([g_w1.ravel(), g_b1, g_w2.ravel(), g_b2])


def train_local(
    params: ModelParams,
    train,
    *,
    epochs: int = 1,
    lr: float = 0.1,
    batch: int = 32,
    seed: int = 0,
    round_index: int | None = None,
) -> ModelParams:
    """Local training on a client's `SampleSet` (features and labels columns)."""
    return sgd(params, train.features, train.labels, epochs=epochs, lr=lr, batch=batch,
               seed=seed, round_index=round_index)


def sgd(
    params: ModelParams,
    x: np.ndarray,
    y: np.ndarray,
    *,
    epochs: int = 1,
    lr: float = 0.1,
    batch: int = 32,
    seed: int = 0,
    round_index: int | None = None,
) -> ModelParams:
    """
    Mini-batch SGD on the client's training data.

    The shuffle order depends only on `seed`, so identical inputs give
    bit-identical results.
    """
    if lr < 0:
        raise ValueError(f"learning rate must be >= 0, got {lr}")
    if batch < 1 or epochs < 0:
        raise ValueError(f"batch must be >= 1 and epochs >= 0, got batch={batch}, epochs={epochs}")
    x2 = _check_inputs(params, x)
    y2 = np.asarray(y, dtype=np.float64)
    if len(x2) == 0:
        raise ValueError("training set is empty")
    if y2.shape != (len(x2), params.arch.n_outputs):
        raise ShapeError(f"labels have shape {y2.shape}, expected ({len(x2)}, {params.arch.n_outputs})")
    if lr == 0:
        return params

    rng = np.random.default_rng(seed)
    vector = params.vector.copy()
    current = params
    for epoch in range(epochs):
        order = rng.permutation(len(x2))
        for b, start in enumerate(range(0, len(x2), batch)):
            rows = order[start:start + batch]
            loss, grad = bce_gradient(current, x2[rows], y2[rows])
            if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
                raise TrainingError(
                    f"non-finite loss in epoch {epoch}, batch {b}, round {round_index}",
                    round_index=round_index,
                    batch_index=b,
                )
            vector = vector - lr * grad
            if not np.all(np.isfinite(vector)):
                raise TrainingError(
                    f"parameters diverged in epoch {epoch}, batch {b}, round {round_index}",
                    round_index=round_index,
                    batch_index=b,
                )
            current = params.with_vector(vector)
    return current
