#!/usr/bin/env python3
"""
Reward schemes over Shapley vectors.

Performance (utility U = AUROC gain over 0.5, phi sums to U):
    P_dist = P * U / 0.5
    R_i    = phi_i / 0.5 * P
  Full-pool variant:
    R_i    = phi_i / U * P                    (P_dist = P)

Bias (U = subgroup AUROC difference, phi sums to U):
    P_dist = P * (1 - |U|)
    w      = argmax_i sgn(U) * phi_i          (lowest index on ties)
    D_i    = phi_w - phi_i
    R_i    = D_i / sum(D) * P_dist            sum(D) = N * phi_w - U
  An equal split of P_dist replaces this when |U| or the spread of phi is
  within `tol`.

Profit of member-funded pools:
    G_i    = R_i - P_dist / N

Combined: per-client sum over pools.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd

from rewards.pools import PoolObjective, PoolSource, RewardAllocation, RewardPool
from shapley.coalitions import ShapleyVector, UtilityKind

logger = logging.getLogger(__name__)

# maximum AUROC gain over a random classifier
MAX_PERF_UTILITY = 0.5
BIAS_TOL = 1e-6


class RewardDomainError(ValueError):
    """Inputs outside a scheme's domain."""


class AllocationError(ValueError):
    """Nothing can be distributed."""


def _require(sv: ShapleyVector, pool: RewardPool, kind: UtilityKind) -> None:
    if sv.kind is not kind:
        raise RewardDomainError(f"{kind.value} scheme needs a {kind.value} Shapley vector, got {sv.utility.key}")
    if pool.objective.utility != sv.utility:
        raise RewardDomainError(f"pool '{pool.pool_id}' targets {pool.objective.value}, Shapley vector is {sv.utility.key}")


def perf_rewards(sv: ShapleyVector, pool: RewardPool, *, clamp: bool = True) -> RewardAllocation:
    """
    Performance pool scaled by the grand coalition's AUROC gain.

    With `clamp`, negative phi are set to 0 and P_dist is shared in proportion
    to the positive phi; without it rewards follow phi_i / 0.5 * P literally.
    """
    _require(sv, pool, UtilityKind.PERFORMANCE)
    phi = sv.values
    u = sv.grand_utility
    if np.all(phi <= 0) and np.any(phi < 0):
        raise AllocationError(f"pool '{pool.pool_id}': no client has a positive Shapley value")
    if u > MAX_PERF_UTILITY:
        raise RewardDomainError(f"performance utility {u} exceeds the maximum gain {MAX_PERF_UTILITY}")
    if u < 0:
        raise RewardDomainError(f"performance utility {u} is below a random classifier")

    p_dist = pool.amount * u / MAX_PERF_UTILITY
    clamped = clamp and bool(np.any(phi < 0))
    if clamped:
        positive = np.maximum(phi, 0.0)
        rewards = positive / positive.sum() * p_dist
        logger.info("pool=%s clamped negative phi for clients %s", pool.pool_id,
                    [sv.client_ids[i] for i in np.flatnonzero(phi < 0)])
    else:
        rewards = phi / MAX_PERF_UTILITY * pool.amount
    return RewardAllocation(pool, "performance", list(sv.client_ids), phi, rewards, p_dist, clamped=clamped)


def perf_rewards_full_pool(sv: ShapleyVector, pool: RewardPool) -> RewardAllocation:
    """The whole pool, shared in proportion phi_i / U."""
    _require(sv, pool, UtilityKind.PERFORMANCE)
    u = sv.grand_utility
    if u == 0:
        raise AllocationError(f"pool '{pool.pool_id}': grand utility is 0, shares phi / U are undefined")
    rewards = sv.values / u * pool.amount
    return RewardAllocation(pool, "performance_full_pool", list(sv.client_ids), sv.values, rewards, pool.amount)


def bias_rewards(sv: ShapleyVector, pool: RewardPool, tol: float = BIAS_TOL) -> RewardAllocation:
    _require(sv, pool, UtilityKind.BIAS)
    phi = sv.values
    u = sv.grand_utility
    if abs(u) > 1:
        raise RewardDomainError(f"bias {u} outside [-1, 1]")
    n = len(phi)
    p_dist = pool.amount * (1.0 - abs(u))

    if abs(u) <= tol or np.ptp(phi) <= tol:
        logger.info("pool=%s degenerate bias game (U=%.3g, spread=%.3g); equal split", pool.pool_id, u, np.ptp(phi))
        return RewardAllocation(pool, "bias", list(sv.client_ids), phi, np.full(n, p_dist / n), p_dist,
                                degenerate=True)

    winner = int(np.argmax(np.sign(u) * phi))
    delta = phi[winner] - phi
    rewards = delta / delta.sum() * p_dist
    return RewardAllocation(pool, "bias", list(sv.client_ids), phi, rewards, p_dist, winner=winner)


def allocate(sv: ShapleyVector, pool: RewardPool, *, clamp: bool = True, tol: float = BIAS_TOL) -> RewardAllocation:
    """Dispatch on the pool's objective."""
    if pool.objective is PoolObjective.PERFORMANCE:
        return perf_rewards_full_pool(sv, pool) if pool.full_pool else perf_rewards(sv, pool, clamp=clamp)
    return bias_rewards(sv, pool, tol)


def profit(alloc: RewardAllocation) -> np.ndarray:
    if alloc.pool.source is not PoolSource.MEMBER_DEPOSITS:
        raise RewardDomainError(f"pool '{alloc.pool_id}' is externally funded; profit is undefined")
    return alloc.rewards - alloc.p_dist / alloc.n_clients


@dataclass
class CombinedRewards:
    client_ids: list[str]
    totals: np.ndarray
    per_pool: dict[str, np.ndarray]
    distributed: float

    def as_dict(self) -> dict[str, float]:
        return {cid: float(v) for cid, v in zip(self.client_ids, self.totals)}


def combined_rewards(perf_alloc: RewardAllocation | None, bias_allocs: Sequence[RewardAllocation] = ()) -> CombinedRewards:
    allocations = ([perf_alloc] if perf_alloc is not None else []) + list(bias_allocs)
    if not allocations:
        raise RewardDomainError("no allocations to combine")
    client_ids = list(allocations[0].client_ids)
    for alloc in allocations[1:]:
        if list(alloc.client_ids) != client_ids:
            raise RewardDomainError(
                f"pool '{alloc.pool_id}' covers clients {alloc.client_ids}, expected {client_ids}"
            )
    pool_ids = [a.pool_id for a in allocations]
    if len(set(pool_ids)) != len(pool_ids):
        raise RewardDomainError(f"duplicate pool ids {pool_ids}")
    return CombinedRewards(
        client_ids=client_ids,
        totals=np.sum([a.rewards for a in allocations], axis=0),
        per_pool={a.pool_id: a.rewards for a in allocations},
        distributed=float(sum(a.p_dist for a in allocations)),
    )


def allocations_frame(allocations: Sequence[RewardAllocation]) -> pd.DataFrame:
    """Long table: one row per (pool, client)."""
    if not allocations:
        return pd.DataFrame(columns=["pool_id", "objective", "scheme", "client_id", "phi", "reward", "profit", "refund"])
    return pd.concat([a.to_frame() for a in allocations], ignore_index=True)
