#!/usr/bin/env python3
"""
Synthetic multi-label data generator.

Each sample carries a feature vector, L binary labels and two protected
attributes ("sex" and "age"), each split into subgroups A and B. Labels are
drawn Bernoulli(sigmoid(W_g . x + b_g)) where the label map W_g depends on the
sample's subgroups:

    W_g = W_task + (+/- 0.5) * sex_disparity * D_sex + (+/- 0.5) * age_disparity * D_age

Subgroup A takes the minus sign, subgroup B the plus sign, so a disparity knob
of 0 makes both subgroups share one label map. The task weights come from
`task_seed` (shared by all sources of an experiment); `source_shift` perturbs
them per `source_key` so that sources differ the way separate datasets do.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.special import expit

logger = logging.getLogger(__name__)

ATTRIBUTES = ("sex", "age")


class ConfigurationError(ValueError):
    """Invalid generator, split or flip configuration."""


class Subgroup(str, Enum):
    A = "A"
    B = "B"

    @classmethod
    def from_code(cls, code: int) -> "Subgroup":
        return cls.A if int(code) == 0 else cls.B


@dataclass(frozen=True)
class Sample:
    """One record: features, binary labels and both attribute subgroups."""
    sample_id: int
    features: np.ndarray
    labels: np.ndarray
    sex: Subgroup
    age: Subgroup

    @property
    def subgroup(self) -> Subgroup:
        return self.sex


@dataclass(frozen=True)
class SampleSet:
    """
    Columnar block of samples. Row i of every array belongs to sample i.

    Subgroup columns are coded 0 = A, 1 = B.
    """
    ids: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    sex: np.ndarray
    age: np.ndarray

    def __post_init__(self):
        n = len(self.ids)
        if self.features.ndim != 2 or self.labels.ndim != 2:
            raise ConfigurationError("features and labels must be 2-D arrays")
        for name in ("features", "labels", "sex", "age"):
            if len(getattr(self, name)) != n:
                raise ConfigurationError(f"column '{name}' has {len(getattr(self, name))} rows, expected {n}")
        for array in (self.ids, self.features, self.labels, self.sex, self.age):
            array.setflags(write=False)

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self) -> Iterator[Sample]:
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, i: int) -> Sample:
        return Sample(
            sample_id=int(self.ids[i]),
            features=self.features[i],
            labels=self.labels[i],
            sex=Subgroup.from_code(self.sex[i]),
            age=Subgroup.from_code(self.age[i]),
        )

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_labels(self) -> int:
        return self.labels.shape[1]

    def group(self, attribute: str) -> np.ndarray:
        if attribute not in ATTRIBUTES:
            raise ConfigurationError(f"unknown attribute '{attribute}', expected one of {ATTRIBUTES}")
        return getattr(self, attribute)

    def share(self, attribute: str) -> float:
        """Fraction of samples in subgroup A for the attribute."""
        if len(self) == 0:
            return float("nan")
        return float(np.mean(self.group(attribute) == 0))

    def take(self, index: np.ndarray) -> "SampleSet":
        index = np.asarray(index, dtype=np.int64)
        return SampleSet(
            ids=self.ids[index].copy(),
            features=self.features[index].copy(),
            labels=self.labels[index].copy(),
            sex=self.sex[index].copy(),
            age=self.age[index].copy(),
        )

    def with_labels(self, labels: np.ndarray) -> "SampleSet":
        if labels.shape != self.labels.shape:
            raise ConfigurationError(f"label shape {labels.shape} does not match {self.labels.shape}")
        return SampleSet(
            ids=self.ids,
            features=self.features,
            labels=np.asarray(labels, dtype=np.int8),
            sex=self.sex,
            age=self.age,
        )

    @classmethod
    def concat(cls, parts: Sequence["SampleSet"]) -> "SampleSet":
        if not parts:
            raise ConfigurationError("cannot concatenate an empty list of sample sets")
        return cls(
            ids=np.concatenate([p.ids for p in parts]),
            features=np.concatenate([p.features for p in parts]),
            labels=np.concatenate([p.labels for p in parts]),
            sex=np.concatenate([p.sex for p in parts]),
            age=np.concatenate([p.age for p in parts]),
        )


class GeneratorSpec(BaseModel):
    """Parameters of one synthetic data source."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = "source"
    n_features: int = 20
    n_labels: int = 8

    # share of subgroup A per attribute
    sex_share: float = 0.5
    age_share: float = 0.5

    # feature distribution: subgroup means sit +/- shift/2 along a fixed direction
    feature_shift: float = 0.5
    age_feature_shift: float = 0.5
    feature_scale: float = 1.0

    # label map
    signal: float = 2.0
    label_offset: float = -1.0
    sex_disparity: float = 0.0
    age_disparity: float = 0.0
    noise_a: float = 0.0
    noise_b: float = 0.0
    source_shift: float = 0.0

    task_seed: int = 0
    source_key: int = 0
    seed: int = 0

    def check(self) -> "GeneratorSpec":
        if self.n_features <= 0 or self.n_labels <= 0:
            raise ConfigurationError(
                f"n_features and n_labels must be positive, got d={self.n_features}, L={self.n_labels}"
            )
        for name in ("sex_share", "age_share"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1], got {value}")
        for name in ("noise_a", "noise_b", "sex_disparity", "age_disparity", "source_shift", "signal"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.feature_scale <= 0:
            raise ConfigurationError(f"feature_scale must be > 0, got {self.feature_scale}")
        return self


@dataclass(frozen=True)
class LabelMap:
    """Per-cell parameters; cell index = 2 * sex_code + age_code."""
    means: np.ndarray    # (4, d)
    weights: np.ndarray  # (4, d, L)
    offsets: np.ndarray  # (L,)
    noise: np.ndarray    # (2,) logit noise std for sex subgroup A, B


def build_label_map(spec: GeneratorSpec) -> LabelMap:
    spec.check()
    d, L = spec.n_features, spec.n_labels
    scale = spec.signal / np.sqrt(d)

    task_rng = np.random.default_rng([spec.task_seed])
    base = task_rng.normal(0.0, scale, size=(d, L))
    sex_dir = task_rng.normal(0.0, scale, size=(d, L))
    age_dir = task_rng.normal(0.0, scale, size=(d, L))
    offsets = spec.label_offset + task_rng.normal(0.0, 0.25, size=L)
    u_sex = task_rng.normal(size=d)
    u_sex /= np.linalg.norm(u_sex)
    u_age = task_rng.normal(size=d)
    u_age /= np.linalg.norm(u_age)

    if spec.source_shift > 0:
        source_rng = np.random.default_rng([spec.task_seed, spec.source_key, 1])
        base = base + spec.source_shift * source_rng.normal(0.0, scale, size=(d, L))

    means = np.empty((4, d))
    weights = np.empty((4, d, L))
    for sex_code in (0, 1):
        for age_code in (0, 1):
            s_sign = sex_code - 0.5
            a_sign = age_code - 0.5
            cell = 2 * sex_code + age_code
            means[cell] = s_sign * spec.feature_shift * u_sex + a_sign * spec.age_feature_shift * u_age
            weights[cell] = base + s_sign * spec.sex_disparity * sex_dir + a_sign * spec.age_disparity * age_dir

    return LabelMap(means=means, weights=weights, offsets=offsets, noise=np.array([spec.noise_a, spec.noise_b]))


def generate(spec: GeneratorSpec, n: int, *, seed: int | None = None, id_offset: int = 0) -> SampleSet:
    """
    Draw n samples from the source described by `spec`.

    The draw is a pure function of (spec, n, seed); `seed` defaults to spec.seed.
    """
    if n < 1:
        raise ConfigurationError(f"n must be >= 1, got {n}")
    label_map = build_label_map(spec)
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    d, L = spec.n_features, spec.n_labels

    sex = (rng.random(n) >= spec.sex_share).astype(np.int8)
    age = (rng.random(n) >= spec.age_share).astype(np.int8)
    cell = 2 * sex.astype(np.int64) + age

    features = label_map.means[cell] + spec.feature_scale * rng.standard_normal((n, d))
    logits = np.empty((n, L))
    for c in range(4):
        rows = cell == c
        logits[rows] = features[rows] @ label_map.weights[c]
    logits += label_map.offsets
    logits += label_map.noise[sex][:, None] * rng.standard_normal((n, L))
    labels = (rng.random((n, L)) < expit(logits)).astype(np.int8)

    logger.debug("generated source=%s n=%d share_sex_a=%.4f share_age_a=%.4f", spec.name, n,
                 float(np.mean(sex == 0)), float(np.mean(age == 0)))

    return SampleSet(
        ids=np.arange(id_offset, id_offset + n, dtype=np.int64),
        features=features,
        labels=labels,
        sex=sex,
        age=age,
    )
