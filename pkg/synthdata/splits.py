#!/usr/bin/env python3
"""
Client data splits.

Clients come in pairs drawn from the same source pool. For the attribute the
plan names, each regime fixes the share of subgroup A per client:

    as_is   both clients keep the source's native share
    50_50   both clients hold exactly 50% A
    75_25   1st client 75% A, 2nd client 25% A (mirrored)
    100_0   1st client only A, 2nd client only B

Every client receives exactly `per_client_size` samples; train and validation
partitions are stratified by subgroup.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict

from synthdata.generator import ATTRIBUTES, ConfigurationError, SampleSet

logger = logging.getLogger(__name__)


class SplitError(ValueError):
    """The sample pool cannot satisfy a split plan."""


class SplitRegime(str, Enum):
    AS_IS = "as_is"
    EVEN_50_50 = "50_50"
    SKEW_75_25 = "75_25"
    PURE_100_0 = "100_0"


# share of subgroup A for the 1st client of each pair
REGIME_SHARES = {
    SplitRegime.EVEN_50_50: 0.5,
    SplitRegime.SKEW_75_25: 0.75,
    SplitRegime.PURE_100_0: 1.0,
}


class SplitPlan(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    regime: SplitRegime = SplitRegime.AS_IS
    attribute: str = "sex"
    n_clients: int = 2
    per_client_size: int = 1000
    train_fraction: float = 0.8
    # subgroup-A share used by the as_is regime; None means the pool's own share
    as_is_share: float | None = None

    def check(self) -> "SplitPlan":
        if self.attribute not in ATTRIBUTES:
            raise ConfigurationError(f"unknown split attribute '{self.attribute}'")
        if self.n_clients < 2 or self.n_clients % 2:
            raise ConfigurationError(f"n_clients must be a positive even number, got {self.n_clients}")
        if self.per_client_size < 1:
            raise ConfigurationError(f"per_client_size must be positive, got {self.per_client_size}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigurationError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.as_is_share is not None and not 0.0 <= self.as_is_share <= 1.0:
            raise ConfigurationError(f"as_is_share must lie in [0, 1], got {self.as_is_share}")
        return self

    @property
    def label(self) -> str:
        return f"{self.attribute}/{self.regime.value}"


@dataclass(frozen=True)
class ClientDataset:
    client_id: str
    train: SampleSet
    validation: SampleSet
    source: str = ""

    @property
    def size(self) -> int:
        return len(self.train) + len(self.validation)

    def composition(self) -> dict:
        """Per-partition subgroup-A shares for both attributes."""
        return {
            "client_id": self.client_id,
            "source": self.source,
            "n_train": len(self.train),
            "n_validation": len(self.validation),
            **{f"train_{a}_share_a": self.train.share(a) for a in ATTRIBUTES},
            **{f"validation_{a}_share_a": self.validation.share(a) for a in ATTRIBUTES},
        }


def half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def subgroup_a_counts(plan: SplitPlan, pool_share: float) -> list[int]:
    """Number of subgroup-A samples each client receives."""
    size = plan.per_client_size
    counts = []
    for _ in range(plan.n_clients // 2):
        if plan.regime is SplitRegime.AS_IS:
            share = pool_share if plan.as_is_share is None else plan.as_is_share
            first = half_up(share * size)
            counts += [first, first]
        else:
            first = half_up(REGIME_SHARES[plan.regime] * size)
            counts += [first, size - first]
    return counts


def split(samples: SampleSet, plan: SplitPlan, seed: int, *, source: str = "") -> list[ClientDataset]:
    """Partition a source pool into `plan.n_clients` disjoint client datasets."""
    plan.check()
    rng = np.random.default_rng(seed)
    groups = samples.group(plan.attribute)
    pool_a = rng.permutation(np.flatnonzero(groups == 0))
    pool_b = rng.permutation(np.flatnonzero(groups == 1))

    counts_a = subgroup_a_counts(plan, samples.share(plan.attribute))
    counts_b = [plan.per_client_size - c for c in counts_a]
    deficits = {
        "A": sum(counts_a) - len(pool_a),
        "B": sum(counts_b) - len(pool_b),
    }
    short = {g: n for g, n in deficits.items() if n > 0}
    if short:
        detail = ", ".join(f"subgroup {g} short by {n}" for g, n in short.items())
        raise SplitError(
            f"pool of {len(samples)} samples cannot serve {plan.n_clients} clients x "
            f"{plan.per_client_size} under {plan.label}: {detail}"
        )

    prefix = source or "client"
    clients = []
    cursor_a = cursor_b = 0
    for i, (n_a, n_b) in enumerate(zip(counts_a, counts_b)):
        take_a = pool_a[cursor_a:cursor_a + n_a]
        take_b = pool_b[cursor_b:cursor_b + n_b]
        cursor_a += n_a
        cursor_b += n_b

        train_a = half_up(plan.train_fraction * n_a)
        train_b = half_up(plan.train_fraction * n_b)
        train_idx = rng.permutation(np.concatenate([take_a[:train_a], take_b[:train_b]]))
        val_idx = rng.permutation(np.concatenate([take_a[train_a:], take_b[train_b:]]))

        clients.append(ClientDataset(
            client_id=f"{prefix}-{i + 1}",
            train=samples.take(train_idx),
            validation=samples.take(val_idx),
            source=source,
        ))

    logger.info("split source=%s plan=%s clients=%d shares_a=%s", source or "-", plan.label,
                len(clients), [round(c / plan.per_client_size, 4) for c in counts_a])
    return clients
