#!/usr/bin/env python3
"""
Experiment configuration.

Experiments are declared in JSON files with nested sections (see configs/).
The file is validated by the pydantic models below; unknown keys are rejected.
CLI flags override the file through `apply_overrides`.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from rewards.pools import PoolObjective, RewardPool
from shapley.backends import EXACT_GUARD, Accumulate, Backend
from synthdata.generator import ATTRIBUTES, GeneratorSpec
from synthdata.splits import SplitRegime

OUTPUT_ROOT_ENV = "FL_REWARDS_OUTPUT_ROOT"
DEFAULT_OUTPUT_ROOT = "runs"


class ConfigError(ValueError):
    """Experiment configuration is invalid or unreadable."""


def default_sources() -> list[GeneratorSpec]:
    """Three sources with distinct subgroup shares and disparities."""
    return [
        GeneratorSpec(name="nih_like", sex_share=0.435, age_share=0.5, sex_disparity=0.6, age_disparity=1.0,
                      noise_a=0.0, noise_b=0.3, source_shift=0.3, source_key=0),
        GeneratorSpec(name="cxp_like", sex_share=0.406, age_share=0.5, sex_disparity=0.4, age_disparity=1.2,
                      noise_a=0.1, noise_b=0.2, source_shift=0.3, source_key=1),
        GeneratorSpec(name="cxr_like", sex_share=0.474, age_share=0.5, sex_disparity=0.5, age_disparity=0.8,
                      noise_a=0.0, noise_b=0.2, source_shift=0.3, source_key=2),
    ]


def default_pools() -> list[RewardPool]:
    return [
        RewardPool(pool_id="performance", amount=60.0, objective=PoolObjective.PERFORMANCE),
        RewardPool(pool_id="sex_bias", amount=60.0, objective=PoolObjective.SEX_BIAS),
        RewardPool(pool_id="age_bias", amount=60.0, objective=PoolObjective.AGE_BIAS),
    ]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SplitSettings(_Section):
    regime: SplitRegime = SplitRegime.AS_IS
    attribute: str = "sex"
    per_client_size: int = Field(1000, ge=1)
    train_fraction: float = Field(0.8, gt=0.0, lt=1.0)

    @field_validator("attribute")
    @classmethod
    def _known_attribute(cls, value: str) -> str:
        if value not in ATTRIBUTES:
            raise ValueError(f"attribute must be one of {ATTRIBUTES}, got '{value}'")
        return value


class TrainingSettings(_Section):
    n_hidden: int = Field(16, ge=0)
    lr: float = Field(0.1, gt=0.0)
    batch: int = Field(32, ge=1)
    local_epochs: int = Field(1, ge=1)
    patience: int = Field(10, ge=1)
    max_rounds: int = Field(200, ge=1)


class FlipSettings(_Section):
    # client ids whose training labels are flipped, e.g. "nih_like-2"
    clients: list[str] = Field(default_factory=list)
    ratio: float = 0.0
    study_ratios: list[float] = Field(default_factory=lambda: [0.025, 0.05, 0.075])
    study_repeats: int = Field(12, ge=2)

    @field_validator("ratio")
    @classmethod
    def _ratio_range(cls, value: float) -> float:
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"flip ratio must lie in [0, 1], got {value}")
        return value

    @field_validator("study_ratios")
    @classmethod
    def _study_ratio_range(cls, values: list[float]) -> list[float]:
        bad = [v for v in values if not 0.0 <= v <= 1.0]
        if bad:
            raise ValueError(f"flip ratios must lie in [0, 1], got {bad}")
        return values


class ValuationSettings(_Section):
    backend: Backend = Backend.ENSEMBLE
    accumulate: Accumulate = Accumulate.PROBABILITY
    exact_guard: int = Field(EXACT_GUARD, ge=1)
    allow_large: bool = False
    head_max_iter: int = Field(500, ge=1)


class RewardSettings(_Section):
    pools: list[RewardPool] = Field(default_factory=default_pools)
    clamp: bool = True
    bias_tol: float = Field(1e-6, ge=0.0)

    @field_validator("pools")
    @classmethod
    def _unique_pools(cls, pools: list[RewardPool]) -> list[RewardPool]:
        ids = [p.pool_id for p in pools]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate pool ids {ids}")
        if sum(p.objective is PoolObjective.PERFORMANCE for p in pools) > 1:
            raise ValueError("at most one performance pool is supported")
        return pools


class ExperimentConfig(_Section):
    name: str = "default_experiment"
    seed: int = 0
    # label-map seed shared by every source and repeat
    task_seed: int = 0
    repeats: int = Field(10, ge=1)
    n_clients: int = Field(6, ge=2)
    sources: list[GeneratorSpec] = Field(default_factory=default_sources)
    test_size_per_source: int = Field(1000, ge=10)
    split: SplitSettings = Field(default_factory=SplitSettings)
    training: TrainingSettings = Field(default_factory=TrainingSettings)
    flip: FlipSettings = Field(default_factory=FlipSettings)
    valuation: ValuationSettings = Field(default_factory=ValuationSettings)
    rewards: RewardSettings = Field(default_factory=RewardSettings)
    failure_threshold: float = Field(0.2, ge=0.0, le=1.0)
    # joblib convention: -1 uses every core
    n_jobs: int = 1
    output_dir: str | None = None

    @field_validator("n_jobs")
    @classmethod
    def _nonzero_jobs(cls, value: int) -> int:
        if value == 0:
            raise ValueError("n_jobs must be a positive count or negative (joblib convention), got 0")
        return value

    @model_validator(mode="after")
    def _check(self) -> "ExperimentConfig":
        if not self.sources:
            raise ValueError("at least one source is required")
        names = [s.name for s in self.sources]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate source names {names}")
        for spec in self.sources:
            spec.check()
        if self.n_clients % len(self.sources) or (self.n_clients // len(self.sources)) % 2:
            raise ValueError(
                f"n_clients={self.n_clients} must give every one of the {len(self.sources)} sources "
                "an even number of clients"
            )
        unknown = sorted(set(self.flip.clients) - set(self.client_ids))
        if unknown:
            raise ValueError(f"flip clients {unknown} are not among {self.client_ids}")
        flipped = set(self.flip.clients)
        for first, second in self.counterpart_pairs():
            if first in flipped and second in flipped:
                raise ValueError(f"both {first} and {second} are flipped; a flip pair needs an unflipped counterpart")
        if self.valuation.backend is Backend.EXACT and self.n_clients > self.valuation.exact_guard \
                and not self.valuation.allow_large:
            raise ValueError(
                f"exact valuation of {self.n_clients} clients exceeds the guard of "
                f"{self.valuation.exact_guard}; set valuation.allow_large to override"
            )
        return self

    @property
    def clients_per_source(self) -> int:
        return self.n_clients // len(self.sources)

    @property
    def client_ids(self) -> list[str]:
        return [f"{s.name}-{k + 1}" for s in self.sources for k in range(self.clients_per_source)]

    def counterpart_pairs(self) -> list[tuple[str, str]]:
        """(1st, 2nd) client of every pair split from the same source."""
        ids = self.client_ids
        return [(ids[i], ids[i + 1]) for i in range(0, len(ids), 2)]

    def flip_pairs(self) -> list[tuple[str, str]]:
        """(flipped, unflipped counterpart) for every flipped client."""
        flipped = set(self.flip.clients)
        pairs = []
        for first, second in self.counterpart_pairs():
            if first in flipped:
                pairs.append((first, second))
            elif second in flipped:
                pairs.append((second, first))
        return pairs

    def output_path(self) -> Path:
        if self.output_dir:
            return Path(self.output_dir)
        return Path(os.environ.get(OUTPUT_ROOT_ENV, DEFAULT_OUTPUT_ROOT)) / self.name


def _format_validation_error(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        where = ".".join(str(p) for p in err["loc"]) or "<root>"
        parts.append(f"{where}: {err['msg']}")
    return "; ".join(parts)


def parse_config(payload: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(payload)
    except ValidationError as exc:
        raise ConfigError(_format_validation_error(exc)) from exc


def load_config(path: Path) -> ExperimentConfig:
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return parse_config(payload)


def apply_overrides(cfg: ExperimentConfig, *, seed: int | None = None, repeats: int | None = None,
                    backend: str | None = None, out: str | None = None, jobs: int | None = None) -> ExperimentConfig:
    """CLI flags win over file values; the result is validated again."""
    payload = cfg.model_dump(mode="json")
    if seed is not None:
        payload["seed"] = seed
    if repeats is not None:
        payload["repeats"] = repeats
    if backend is not None:
        payload["valuation"]["backend"] = backend
    if out is not None:
        payload["output_dir"] = out
    if jobs is not None:
        payload["n_jobs"] = jobs
    return parse_config(payload)


def config_schema() -> dict:
    return ExperimentConfig.model_json_schema()
