"""Tests for client splits."""

import numpy as np
import pytest

from synthdata.generator import ConfigurationError, GeneratorSpec, generate
from synthdata.splits import SplitError, SplitPlan, SplitRegime, split


def _pool(n=6000, share=0.5, seed=0):
    return generate(GeneratorSpec(name="src", sex_share=share, age_share=0.3, seed=seed), n)


def _share_a(client, attribute="sex"):
    codes = np.concatenate([client.train.group(attribute), client.validation.group(attribute)])
    return float(np.mean(codes == 0))


def test_even_split_gives_half_subgroup_a():
    clients = split(_pool(), SplitPlan(regime=SplitRegime.EVEN_50_50, per_client_size=1000), seed=1)
    assert [_share_a(c) for c in clients] == [0.5, 0.5]


def test_pure_split_gives_single_subgroup_clients():
    clients = split(_pool(), SplitPlan(regime=SplitRegime.PURE_100_0, per_client_size=1000), seed=1)
    assert _share_a(clients[0]) == 1.0
    assert _share_a(clients[1]) == 0.0


def test_skewed_split_mirrors_shares():
    clients = split(_pool(), SplitPlan(regime=SplitRegime.SKEW_75_25, per_client_size=1000), seed=1)
    shares = [_share_a(c) for c in clients]
    assert shares == [0.75, 0.25]
    assert shares[0] + shares[1] == pytest.approx(1.0)


def test_as_is_split_keeps_source_share():
    pool = _pool(n=20_000, share=0.435, seed=3)
    clients = split(pool, SplitPlan(regime=SplitRegime.AS_IS, per_client_size=2000), seed=2)
    for client in clients:
        assert abs(_share_a(client) - 0.435) < 0.02
    assert _share_a(clients[0]) == _share_a(clients[1])


def test_split_by_age_attribute():
    clients = split(_pool(), SplitPlan(regime=SplitRegime.PURE_100_0, attribute="age", per_client_size=500), seed=4)
    assert _share_a(clients[0], "age") == 1.0
    assert _share_a(clients[1], "age") == 0.0


def test_sizes_fraction_and_disjointness():
    plan = SplitPlan(regime=SplitRegime.SKEW_75_25, n_clients=4, per_client_size=1000, train_fraction=0.8)
    clients = split(_pool(n=8000), plan, seed=5, source="src")
    assert [c.client_id for c in clients] == ["src-1", "src-2", "src-3", "src-4"]
    ids = []
    for client in clients:
        assert client.size == 1000
        assert len(client.train) == 800
        assert len(client.validation) == 200
        ids += list(client.train.ids) + list(client.validation.ids)
    assert len(ids) == len(set(ids))


def test_partitions_are_stratified():
    clients = split(_pool(), SplitPlan(regime=SplitRegime.SKEW_75_25, per_client_size=1000), seed=6)
    assert clients[0].train.share("sex") == 0.75
    assert clients[0].validation.share("sex") == 0.75


def test_split_is_deterministic():
    plan = SplitPlan(regime=SplitRegime.EVEN_50_50, per_client_size=500)
    first = split(_pool(), plan, seed=9)
    second = split(_pool(), plan, seed=9)
    for a, b in zip(first, second):
        np.testing.assert_array_equal(a.train.ids, b.train.ids)
        np.testing.assert_array_equal(a.validation.ids, b.validation.ids)


def test_insufficient_pool_names_the_deficit():
    pool = _pool(n=200, share=0.5)
    with pytest.raises(SplitError, match="subgroup A short by"):
        split(pool, SplitPlan(regime=SplitRegime.PURE_100_0, per_client_size=150), seed=0)


def test_invalid_plan_is_rejected():
    with pytest.raises(ConfigurationError):
        split(_pool(), SplitPlan(n_clients=3), seed=0)
    with pytest.raises(ConfigurationError):
        split(_pool(), SplitPlan(attribute="height"), seed=0)


def test_composition_manifest():
    clients = split(_pool(), SplitPlan(regime=SplitRegime.PURE_100_0, per_client_size=100), seed=0, source="src")
    entry = clients[1].composition()
    assert entry["client_id"] == "src-2"
    assert entry["n_train"] == 80 and entry["n_validation"] == 20
    assert entry["train_sex_share_a"] == 0.0
