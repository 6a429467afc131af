"""Tests for CSV export of sample sets."""

import numpy as np
import pandas as pd

from synthdata.generator import GeneratorSpec, generate
from synthdata.io import read_csv, to_frame, write_client_csv, write_csv
from synthdata.splits import SplitPlan, split


def test_frame_has_one_row_per_sample():
    samples = generate(GeneratorSpec(n_features=3, n_labels=2), 10)
    df = to_frame(samples)
    assert list(df.columns) == ["sample_id", "f0", "f1", "f2", "y0", "y1", "sex", "age"]
    assert len(df) == 10
    assert set(df["sex"]) <= {"A", "B"}


def test_csv_keeps_samples(tmp_path):
    samples = generate(GeneratorSpec(n_features=12, n_labels=3), 50)
    loaded = read_csv(write_csv(samples, tmp_path / "data" / "samples.csv"))
    np.testing.assert_array_equal(loaded.ids, samples.ids)
    np.testing.assert_array_equal(loaded.labels, samples.labels)
    np.testing.assert_array_equal(loaded.sex, samples.sex)
    np.testing.assert_array_equal(loaded.age, samples.age)
    np.testing.assert_allclose(loaded.features, samples.features, rtol=1e-12)


def test_client_csv_tags_partitions(tmp_path):
    pool = generate(GeneratorSpec(n_features=2, n_labels=2), 400)
    client = split(pool, SplitPlan(per_client_size=100), seed=0, source="src")[0]
    df = pd.read_csv(write_client_csv(client, tmp_path))
    assert (tmp_path / "src-1.csv").exists()
    assert df["partition"].value_counts().to_dict() == {"train": 80, "validation": 20}
