"""Tests for reward pools and schemes."""

import numpy as np
import pytest
from pydantic import ValidationError

from rewards.pools import PoolObjective, PoolSource, ResidualPolicy, RewardAllocation, RewardPool
from rewards.schemes import (
    AllocationError,
    RewardDomainError,
    allocate,
    allocations_frame,
    bias_rewards,
    combined_rewards,
    perf_rewards,
    perf_rewards_full_pool,
    profit,
)
from shapley.coalitions import AGE_BIAS, PERFORMANCE, SEX_BIAS, ShapleyVector

PERF_POOL = RewardPool(pool_id="performance", amount=60.0, objective=PoolObjective.PERFORMANCE)
SEX_POOL = RewardPool(pool_id="sex_bias", amount=60.0, objective=PoolObjective.SEX_BIAS)
AGE_POOL = RewardPool(pool_id="age_bias", amount=60.0, objective=PoolObjective.AGE_BIAS)


def perf_sv(*phi, grand=None):
    phi = np.asarray(phi, dtype=float)
    return ShapleyVector(PERFORMANCE, phi, float(phi.sum()) if grand is None else grand)


def bias_sv(*phi, utility=SEX_BIAS):
    phi = np.asarray(phi, dtype=float)
    return ShapleyVector(utility, phi, float(phi.sum()))


# performance pool

def test_reward_follows_own_shapley_value():
    alloc = perf_rewards(perf_sv(0.058125, 0.04134, 0.05), PERF_POOL)
    assert alloc.rewards[0] == pytest.approx(6.975, abs=1e-9)
    assert alloc.rewards[1] == pytest.approx(4.9608, abs=1e-9)
    assert round(alloc.rewards[1], 3) == 4.961


def test_distributed_pool_scales_with_utility():
    alloc = perf_rewards(perf_sv(0.1, 0.05, 0.05), PERF_POOL)
    assert alloc.p_dist == pytest.approx(24.0)
    assert alloc.rewards.sum() == pytest.approx(alloc.p_dist, abs=1e-9)
    assert alloc.residual == pytest.approx(36.0)
    assert alloc.returned_to_source == pytest.approx(36.0)


def test_worthless_model_distributes_nothing():
    alloc = perf_rewards(perf_sv(0.0, 0.0), PERF_POOL)
    assert alloc.p_dist == 0.0
    np.testing.assert_array_equal(alloc.rewards, [0.0, 0.0])
    assert alloc.residual == 60.0


def test_perfect_model_distributes_the_whole_pool():
    alloc = perf_rewards(perf_sv(0.3, 0.2), PERF_POOL)
    assert alloc.p_dist == pytest.approx(60.0)
    assert alloc.rewards.sum() == pytest.approx(60.0)


def test_reward_depends_only_on_own_value():
    first = perf_rewards(perf_sv(0.1, 0.02, 0.03), PERF_POOL, clamp=False)
    second = perf_rewards(perf_sv(0.1, 0.2, 0.0), PERF_POOL, clamp=False)
    assert first.rewards[0] == second.rewards[0]


def test_negative_values_are_clamped_and_renormalized():
    alloc = perf_rewards(perf_sv(0.2, -0.05, 0.1), PERF_POOL)
    assert alloc.clamped
    assert alloc.p_dist == pytest.approx(30.0)
    np.testing.assert_allclose(alloc.rewards, [20.0, 0.0, 10.0])
    assert np.all(alloc.rewards >= 0)


def test_raw_mode_keeps_negative_rewards():
    alloc = perf_rewards(perf_sv(0.2, -0.05, 0.1), PERF_POOL, clamp=False)
    assert not alloc.clamped
    np.testing.assert_allclose(alloc.rewards, [24.0, -6.0, 12.0])
    assert alloc.rewards.sum() == pytest.approx(alloc.p_dist)


def test_no_positive_value_is_an_allocation_error():
    with pytest.raises(AllocationError):
        perf_rewards(perf_sv(-0.01, 0.0), PERF_POOL)


def test_utility_above_maximum_gain_is_a_domain_error():
    with pytest.raises(RewardDomainError):
        perf_rewards(perf_sv(0.3, 0.3), PERF_POOL)


def test_wrong_utility_kind_is_rejected():
    with pytest.raises(RewardDomainError):
        perf_rewards(bias_sv(0.1, 0.2), PERF_POOL)
    with pytest.raises(RewardDomainError):
        bias_rewards(bias_sv(0.1, 0.2, utility=AGE_BIAS), SEX_POOL)


# full pool

def test_full_pool_examples():
    pool = PERF_POOL.model_copy(update={"full_pool": True})
    np.testing.assert_allclose(perf_rewards_full_pool(perf_sv(0.1, 0.1), pool).rewards, [30.0, 30.0])
    alloc = perf_rewards_full_pool(perf_sv(0.3, 0.1), pool)
    np.testing.assert_allclose(alloc.rewards, [45.0, 15.0])
    assert alloc.p_dist == 60.0
    assert alloc.residual == 0.0


def test_full_pool_is_scale_invariant():
    a = perf_rewards_full_pool(perf_sv(0.03, 0.01, 0.02), PERF_POOL)
    b = perf_rewards_full_pool(perf_sv(0.3, 0.1, 0.2), PERF_POOL)
    np.testing.assert_allclose(a.rewards, b.rewards)
    assert a.rewards.sum() == pytest.approx(60.0, abs=1e-9)


def test_full_pool_needs_nonzero_utility():
    with pytest.raises(AllocationError):
        perf_rewards_full_pool(perf_sv(0.1, -0.1), PERF_POOL)


def test_allocate_dispatches_on_objective():
    pool = PERF_POOL.model_copy(update={"full_pool": True})
    assert allocate(perf_sv(0.3, 0.1), pool).scheme == "performance_full_pool"
    assert allocate(perf_sv(0.1, 0.1), PERF_POOL).scheme == "performance"
    assert allocate(bias_sv(0.06, 0.03, 0.01), SEX_POOL).scheme == "bias"


# bias pool

def test_bias_hand_case():
    alloc = bias_rewards(bias_sv(0.06, 0.03, 0.01), SEX_POOL)
    assert alloc.p_dist == pytest.approx(54.0)
    assert alloc.winner == 0
    np.testing.assert_allclose(alloc.rewards, [0.0, 20.25, 33.75], atol=1e-9)
    assert alloc.rewards.sum() == pytest.approx(54.0, abs=1e-9)


def test_bias_mirror_case_gives_the_same_rewards():
    alloc = bias_rewards(bias_sv(-0.06, -0.03, -0.01), SEX_POOL)
    assert alloc.winner == 0
    np.testing.assert_allclose(alloc.rewards, [0.0, 20.25, 33.75], atol=1e-9)


def test_zero_bias_splits_equally():
    alloc = bias_rewards(bias_sv(0.02, -0.02, 0.0), SEX_POOL)
    assert alloc.degenerate
    assert alloc.p_dist == 60.0
    np.testing.assert_array_equal(alloc.rewards, [20.0, 20.0, 20.0])


def test_equal_contributions_split_equally():
    alloc = bias_rewards(bias_sv(0.05, 0.05), SEX_POOL)
    assert alloc.degenerate
    np.testing.assert_array_equal(alloc.rewards, [alloc.p_dist / 2] * 2)
    assert alloc.p_dist == pytest.approx(54.0)


def test_ties_pick_the_lowest_index_winner():
    alloc = bias_rewards(bias_sv(0.04, 0.04, 0.01), SEX_POOL)
    assert alloc.winner == 0
    assert alloc.rewards[0] == 0.0


def test_lower_bias_contribution_never_earns_less():
    rng = np.random.default_rng(5)
    for _ in range(20):
        phi = rng.uniform(-0.05, 0.08, size=5)
        alloc = bias_rewards(bias_sv(*phi), SEX_POOL)
        direction = np.sign(phi.sum()) * phi
        order = np.argsort(direction)
        assert np.all(np.diff(alloc.rewards[order]) <= 1e-12)
        if alloc.winner is not None:
            assert alloc.rewards[alloc.winner] == 0.0


def test_bias_outside_unit_interval_is_rejected():
    with pytest.raises(RewardDomainError):
        bias_rewards(ShapleyVector(SEX_BIAS, np.array([0.8, 0.7]), 1.5), SEX_POOL)


# profit, combination, residual

def test_profit_is_reward_minus_equal_share():
    alloc = RewardAllocation(PERF_POOL, "performance", ["a", "b"], np.zeros(2), np.array([40.0, 20.0]), 60.0)
    np.testing.assert_allclose(profit(alloc), [10.0, -10.0])
    assert profit(alloc).sum() == 0.0


def test_profits_sum_to_zero():
    alloc = bias_rewards(bias_sv(0.06, 0.03, 0.01), SEX_POOL)
    assert profit(alloc).sum() == pytest.approx(0.0, abs=1e-9)


def test_profit_of_external_pool_is_undefined():
    pool = PERF_POOL.model_copy(update={"source": PoolSource.EXTERNAL})
    with pytest.raises(RewardDomainError):
        profit(perf_rewards(perf_sv(0.1, 0.1), pool))
    assert pool.deposit(6) == 0.0
    assert PERF_POOL.deposit(6) == 10.0


def test_combined_rewards_add_up():
    perf = RewardAllocation(PERF_POOL, "performance", ["nih", "cxp"], np.zeros(2), np.array([6.976, 4.961]), 11.937)
    sex = RewardAllocation(SEX_POOL, "bias", ["nih", "cxp"], np.zeros(2), np.array([9.802, 11.284]), 21.086)
    age = RewardAllocation(AGE_POOL, "bias", ["nih", "cxp"], np.zeros(2), np.array([4.301, 13.736]), 18.037)
    combined = combined_rewards(perf, [sex, age])
    assert combined.totals[0] == pytest.approx(21.079, abs=1e-9)
    assert combined.totals[1] == pytest.approx(29.981, abs=1e-9)
    assert combined.distributed == pytest.approx(11.937 + 21.086 + 18.037)
    assert combined.as_dict()["nih"] == combined.totals[0]


def test_combined_rewards_need_the_same_clients():
    a = perf_rewards(perf_sv(0.1, 0.1), PERF_POOL)
    b = RewardAllocation(SEX_POOL, "bias", ["x", "y"], np.zeros(2), np.zeros(2), 0.0)
    with pytest.raises(RewardDomainError):
        combined_rewards(a, [b])
    with pytest.raises(RewardDomainError):
        combined_rewards(None, [])


def test_refund_policy_returns_residual_to_members():
    pool = PERF_POOL.model_copy(update={"residual_policy": ResidualPolicy.REFUND_MEMBERS})
    alloc = perf_rewards(perf_sv(0.1, 0.1, 0.1), pool)
    np.testing.assert_allclose(alloc.refunds, [8.0, 8.0, 8.0])
    assert alloc.returned_to_source == 0.0
    assert alloc.rewards.sum() == pytest.approx(alloc.p_dist)


def test_pool_validation():
    with pytest.raises(ValidationError):
        RewardPool(amount=0.0)
    with pytest.raises(ValidationError):
        RewardPool(source=PoolSource.EXTERNAL, residual_policy=ResidualPolicy.REFUND_MEMBERS)
    with pytest.raises(ValidationError):
        RewardPool(objective=PoolObjective.SEX_BIAS, full_pool=True)


def test_allocation_frame_lists_every_client():
    allocs = [perf_rewards(perf_sv(0.1, 0.05), PERF_POOL), bias_rewards(bias_sv(0.06, 0.01), SEX_POOL)]
    df = allocations_frame(allocs)
    assert len(df) == 4
    assert list(df["pool_id"].unique()) == ["performance", "sex_bias"]
    assert df["profit"].notna().all()


def _check_conservation(alloc):
    assert alloc.rewards.sum() == pytest.approx(alloc.p_dist, abs=1e-9)
    assert alloc.residual >= -1e-12
    assert alloc.refunds.sum() + alloc.returned_to_source == pytest.approx(alloc.residual, abs=1e-9)
    assert profit(alloc).sum() == pytest.approx(0.0, abs=1e-9)


def test_random_allocations_conserve_the_pool():
    rng = np.random.default_rng(2024)
    checked = {"performance": 0, "performance_clamp_off": 0, "performance_full_pool": 0, "bias": 0}
    while sum(checked.values()) < 1000:
        n = int(rng.integers(2, 9))
        policy = ResidualPolicy.REFUND_MEMBERS if rng.random() < 0.5 else ResidualPolicy.RETURN_TO_SOURCE
        amount = float(rng.uniform(1.0, 500.0))

        phi = rng.uniform(-0.05, 0.12, size=n)
        u = float(phi.sum())
        if 0.0 < u <= 0.5 and np.any(phi > 0):
            pool = PERF_POOL.model_copy(update={"amount": amount, "residual_policy": policy})
            sv = perf_sv(*phi)
            _check_conservation(perf_rewards(sv, pool))
            _check_conservation(perf_rewards(sv, pool, clamp=False))
            full = allocate(sv, pool.model_copy(update={"full_pool": True}))
            assert full.residual == 0.0
            _check_conservation(full)
            checked["performance"] += 1
            checked["performance_clamp_off"] += 1
            checked["performance_full_pool"] += 1

        phi = rng.uniform(-0.1, 0.1, size=n)
        if abs(phi.sum()) <= 1.0:
            pool = SEX_POOL.model_copy(update={"amount": amount, "residual_policy": policy})
            alloc = bias_rewards(bias_sv(*phi), pool)
            _check_conservation(alloc)
            assert np.all(alloc.rewards >= -1e-12)
            checked["bias"] += 1
    assert all(count > 0 for count in checked.values())
