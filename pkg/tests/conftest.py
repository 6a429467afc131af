"""Shared fixtures: tiny sources, client pairs and FL configs."""

import sys
from pathlib import Path

import numpy as np
import pytest

PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from experiments.config import parse_config
from fedsim.fedavg import FLRunConfig
from synthdata.generator import GeneratorSpec, SampleSet, generate
from synthdata.splits import ClientDataset, SplitPlan, split


@pytest.fixture
def tiny_spec():
    return GeneratorSpec(name="tiny", n_features=4, n_labels=3, sex_share=0.5, age_share=0.5,
                         sex_disparity=0.5, noise_b=0.2, seed=3)


@pytest.fixture
def tiny_clients(tiny_spec):
    """Two clients of 60 samples from one source."""
    pool = generate(tiny_spec, 300, seed=11)
    plan = SplitPlan(n_clients=2, per_client_size=60, train_fraction=0.8)
    return split(pool, plan, seed=5, source="tiny")


@pytest.fixture
def tiny_test(tiny_spec):
    return generate(tiny_spec, 200, seed=99, id_offset=10**6)


@pytest.fixture
def tiny_fl_config(tiny_clients):
    return FLRunConfig(clients=tiny_clients, n_hidden=4, lr=0.1, batch=16, patience=2, max_rounds=5, seed=1)


def make_samples(features, labels, sex=None, age=None, start=0):
    """SampleSet from plain arrays; subgroups default to A."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int8)
    n = len(features)
    return SampleSet(
        ids=np.arange(start, start + n, dtype=np.int64),
        features=features,
        labels=labels,
        sex=np.zeros(n, dtype=np.int8) if sex is None else np.asarray(sex, dtype=np.int8),
        age=np.zeros(n, dtype=np.int8) if age is None else np.asarray(age, dtype=np.int8),
    )


def make_client(client_id, features, labels, val_features=None, val_labels=None):
    train = make_samples(features, labels)
    validation = make_samples(
        features if val_features is None else val_features,
        labels if val_labels is None else val_labels,
        start=10**5,
    )
    return ClientDataset(client_id=client_id, train=train, validation=validation)


def tiny_experiment_payload(**overrides):
    """Two sources, four clients, a few FedAvg rounds: seconds per repeat."""
    source = {"n_features": 6, "n_labels": 3, "signal": 3.0, "label_offset": -0.5, "source_shift": 0.2}
    payload = {
        "name": "tiny_experiment",
        "seed": 1,
        "repeats": 3,
        "n_clients": 4,
        "sources": [
            {**source, "name": "alpha", "sex_share": 0.45, "sex_disparity": 0.6, "source_key": 0},
            {**source, "name": "beta", "sex_share": 0.4, "age_disparity": 0.8, "noise_b": 0.2, "source_key": 1},
        ],
        "test_size_per_source": 400,
        "split": {"per_client_size": 150},
        "training": {"n_hidden": 6, "batch": 16, "patience": 2, "max_rounds": 4},
        "flip": {"study_repeats": 2, "study_ratios": [0.5]},
        "failure_threshold": 0.0,
    }
    payload.update(overrides)
    return payload


@pytest.fixture
def tiny_experiment():
    return parse_config(tiny_experiment_payload())
