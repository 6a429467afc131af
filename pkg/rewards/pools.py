"""
Reward pools and allocations.

A pool holds P monetary units (MU) funded either externally or by equal member
deposits of P/N. A scheme distributes P_dist <= P; the remainder P - P_dist
either goes back to the source or, for member-funded pools, is refunded
equally to the members.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator

from shapley.coalitions import AGE_BIAS, PERFORMANCE, SEX_BIAS, Utility


class PoolSource(str, Enum):
    EXTERNAL = "external"
    MEMBER_DEPOSITS = "member_deposits"


class PoolObjective(str, Enum):
    PERFORMANCE = "performance"
    SEX_BIAS = "sex_bias"
    AGE_BIAS = "age_bias"

    @property
    def utility(self) -> Utility:
        return {"performance": PERFORMANCE, "sex_bias": SEX_BIAS, "age_bias": AGE_BIAS}[self.value]


class ResidualPolicy(str, Enum):
    RETURN_TO_SOURCE = "return_to_source"
    REFUND_MEMBERS = "refund_members"


class RewardPool(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    pool_id: str = "performance"
    amount: float = 60.0
    source: PoolSource = PoolSource.MEMBER_DEPOSITS
    objective: PoolObjective = PoolObjective.PERFORMANCE
    residual_policy: ResidualPolicy = ResidualPolicy.RETURN_TO_SOURCE
    # performance pools only: distribute the whole pool regardless of utility
    full_pool: bool = False

    @model_validator(mode="after")
    def _check(self) -> "RewardPool":
        if not math.isfinite(self.amount) or self.amount <= 0:
            raise ValueError(f"pool amount must be finite and > 0, got {self.amount}")
        if self.residual_policy is ResidualPolicy.REFUND_MEMBERS and self.source is not PoolSource.MEMBER_DEPOSITS:
            raise ValueError("only member-funded pools can refund their residual to members")
        if self.full_pool and self.objective is not PoolObjective.PERFORMANCE:
            raise ValueError("full_pool applies to performance pools only")
        return self

    def deposit(self, n_members: int) -> float:
        """Per-member deposit; 0 for externally funded pools."""
        return self.amount / n_members if self.source is PoolSource.MEMBER_DEPOSITS else 0.0


@dataclass
class RewardAllocation:
    pool: RewardPool
    scheme: str
    client_ids: list[str]
    phi: np.ndarray
    rewards: np.ndarray
    p_dist: float
    clamped: bool = False
    degenerate: bool = False
    winner: int | None = None
    refunds: np.ndarray | None = None

    def __post_init__(self):
        self.phi = np.asarray(self.phi, dtype=np.float64)
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        n = len(self.client_ids)
        if self.refunds is None:
            if self.pool.residual_policy is ResidualPolicy.REFUND_MEMBERS:
                self.refunds = np.full(n, self.residual / n)
            else:
                self.refunds = np.zeros(n)

    @property
    def pool_id(self) -> str:
        return self.pool.pool_id

    @property
    def n_clients(self) -> int:
        return len(self.client_ids)

    @property
    def residual(self) -> float:
        return self.pool.amount - self.p_dist

    @property
    def returned_to_source(self) -> float:
        if self.pool.residual_policy is ResidualPolicy.REFUND_MEMBERS:
            return 0.0
        return self.residual

    def to_frame(self) -> pd.DataFrame:
        if self.pool.source is PoolSource.MEMBER_DEPOSITS:
            profits = self.rewards - self.p_dist / self.n_clients
        else:
            profits = np.full(self.n_clients, np.nan)
        return pd.DataFrame({
            "pool_id": self.pool_id,
            "objective": self.pool.objective.value,
            "scheme": self.scheme,
            "client_id": self.client_ids,
            "phi": self.phi,
            "reward": self.rewards,
            "profit": profits,
            "refund": self.refunds,
        })

    def to_dict(self) -> dict:
        return {
            "pool": self.pool.model_dump(mode="json"),
            "scheme": self.scheme,
            "client_ids": list(self.client_ids),
            "phi": [float(v) for v in self.phi],
            "rewards": [float(v) for v in self.rewards],
            "p_dist": float(self.p_dist),
            "residual": float(self.residual),
            "returned_to_source": float(self.returned_to_source),
            "refunds": [float(v) for v in self.refunds],
            "clamped": self.clamped,
            "degenerate": self.degenerate,
            "winner": self.winner,
        }
