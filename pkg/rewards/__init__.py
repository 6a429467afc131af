"""
Rewards Module

Monetary allocation from Shapley vectors:
- pools.py: reward pools (funding source, objective, residual policy) and allocations
- schemes.py: performance, full-pool, bias and combined schemes; member profits
"""

from rewards.pools import PoolObjective, PoolSource, ResidualPolicy, RewardAllocation, RewardPool
from rewards.schemes import (
    AllocationError,
    CombinedRewards,
    RewardDomainError,
    allocate,
    allocations_frame,
    bias_rewards,
    combined_rewards,
    perf_rewards,
    perf_rewards_full_pool,
    profit,
)

__version__ = "1.0.0"

__all__ = [
    "AllocationError",
    "CombinedRewards",
    "PoolObjective",
    "PoolSource",
    "ResidualPolicy",
    "RewardAllocation",
    "RewardDomainError",
    "RewardPool",
    "allocate",
    "allocations_frame",
    "bias_rewards",
    "combined_rewards",
    "perf_rewards",
    "perf_rewards_full_pool",
    "profit",
]
