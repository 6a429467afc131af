"""CSV export of sample sets and client datasets (one row per sample)."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd

from synthdata.generator import ATTRIBUTES, SampleSet
from synthdata.splits import ClientDataset


def to_frame(samples: SampleSet) -> pd.DataFrame:
    df = pd.DataFrame(samples.features, columns=[f"f{j}" for j in range(samples.n_features)])
    for j in range(samples.n_labels):
        df[f"y{j}"] = samples.labels[:, j]
    for attribute in ATTRIBUTES:
        df[attribute] = np.where(samples.group(attribute) == 0, "A", "B")
    df.insert(0, "sample_id", samples.ids)
    return df


def from_frame(df: pd.DataFrame) -> SampleSet:
    feature_cols = [c for c in df.columns if c.startswith("f") and c[1:].isdigit()]
    label_cols = [c for c in df.columns if c.startswith("y") and c[1:].isdigit()]
    feature_cols.sort(key=lambda c: int(c[1:]))
    label_cols.sort(key=lambda c: int(c[1:]))
    return SampleSet(
        ids=df["sample_id"].to_numpy(dtype=np.int64),
        features=df[feature_cols].to_numpy(dtype=np.float64),
        labels=df[label_cols].to_numpy(dtype=np.int8),
        sex=(df["sex"] == "B").to_numpy().astype(np.int8),
        age=(df["age"] == "B").to_numpy().astype(np.int8),
    )


def write_csv(samples: SampleSet, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    to_frame(samples).to_csv(path, index=False)
    return path


def read_csv(path: Path) -> SampleSet:
    return from_frame(pd.read_csv(path))


def write_client_csv(ds: ClientDataset, directory: Path) -> Path:
    """Both partitions of a client in one file, tagged by a `partition` column."""
    train = to_frame(ds.train)
    train.insert(1, "partition", "train")
    validation = to_frame(ds.validation)
    validation.insert(1, "partition", "validation")
    path = Path(directory) / f"{ds.client_id}.csv"
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.concat([train, validation], ignore_index=True).to_csv(path, index=False)
    return path
