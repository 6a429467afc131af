"""Tests for experiment configuration files and overrides."""

import json

import pytest

from experiments.config import (
    OUTPUT_ROOT_ENV,
    ConfigError,
    ExperimentConfig,
    apply_overrides,
    config_schema,
    load_config,
    parse_config,
)
from shapley.backends import Backend
from tests.conftest import PROJECT_ROOT

CONFIGS = PROJECT_ROOT / "configs"


def test_shipped_configs_are_valid():
    default = load_config(CONFIGS / "default_experiment.json")
    assert default.n_clients == 6
    assert default.client_ids == ["nih_like-1", "nih_like-2", "cxp_like-1", "cxp_like-2", "cxr_like-1", "cxr_like-2"]
    assert [p.pool_id for p in default.rewards.pools] == ["performance", "sex_bias", "age_bias"]

    full = load_config(CONFIGS / "full_scale.json")
    assert full.repeats == 40
    assert full.split.per_client_size == 35_000


def test_flip_study_pairs_flipped_with_counterparts():
    cfg = load_config(CONFIGS / "flip_study.json")
    assert cfg.flip_pairs() == [("nih_like-2", "nih_like-1"), ("cxp_like-2", "cxp_like-1"),
                                ("cxr_like-2", "cxr_like-1")]
    assert cfg.flip.study_ratios == [0.025, 0.05, 0.075]


def test_defaults_mirror_three_sources():
    cfg = ExperimentConfig()
    assert [s.name for s in cfg.sources] == ["nih_like", "cxp_like", "cxr_like"]
    assert cfg.clients_per_source == 2
    assert cfg.counterpart_pairs()[0] == ("nih_like-1", "nih_like-2")


@pytest.mark.parametrize("payload, message", [
    ({"unknown": 1}, "unknown"),
    ({"n_clients": 4}, "even number of clients"),
    ({"flip": {"clients": ["nobody-1"]}}, "flip clients"),
    ({"flip": {"ratio": 1.5}}, "flip ratio"),
    ({"split": {"attribute": "height"}}, "attribute"),
    ({"n_clients": 12, "valuation": {"backend": "exact"}}, "guard"),
    ({"rewards": {"pools": [{"pool_id": "p"}, {"pool_id": "p", "objective": "sex_bias"}]}}, "duplicate pool"),
])
def test_invalid_payloads_raise_config_error(payload, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(payload)


def test_large_exact_runs_need_explicit_override():
    cfg = parse_config({"n_clients": 12, "valuation": {"backend": "exact", "allow_large": True}})
    assert cfg.valuation.backend is Backend.EXACT


def test_both_clients_of_a_pair_cannot_be_flipped():
    with pytest.raises(ConfigError, match="both nih_like-1 and nih_like-2 are flipped"):
        parse_config({"flip": {"clients": ["nih_like-1", "nih_like-2"], "ratio": 0.05}})


def test_zero_jobs_is_rejected_at_load_time():
    with pytest.raises(ConfigError, match="n_jobs"):
        parse_config({"n_jobs": 0})
    with pytest.raises(ConfigError, match="n_jobs"):
        apply_overrides(ExperimentConfig(), jobs=0)
    assert parse_config({"n_jobs": -1}).n_jobs == -1


def test_cli_overrides_win():
    cfg = apply_overrides(ExperimentConfig(), seed=9, repeats=3, backend="gradient_accum", out="somewhere", jobs=2)
    assert cfg.seed == 9
    assert cfg.repeats == 3
    assert cfg.valuation.backend is Backend.GRADIENT_ACCUM
    assert str(cfg.output_path()) == "somewhere"
    assert cfg.n_jobs == 2


def test_overrides_are_validated():
    with pytest.raises(ConfigError):
        apply_overrides(ExperimentConfig(), repeats=0)


def test_output_root_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path))
    assert ExperimentConfig(name="abc").output_path() == tmp_path / "abc"
    monkeypatch.delenv(OUTPUT_ROOT_ENV)
    assert str(ExperimentConfig(name="abc").output_path()) == "runs/abc"


def test_unreadable_files(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(bad)


def test_schema_lists_sections():
    schema = config_schema()
    for key in ("sources", "split", "training", "flip", "valuation", "rewards"):
        assert key in schema["properties"]
    json.dumps(schema)
