"""Checkpointing of model parameters (joblib, versioned envelope)."""

from __future__ import annotations

from dataclasses import asdict
from pathlib import Path

import joblib
import numpy as np

from models.mlp import Architecture, ModelParams

FORMAT_VERSION = 1


def save_params(params: ModelParams, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    joblib.dump({
        "format_version": FORMAT_VERSION,
        "kind": "model_params",
        "architecture": asdict(params.arch),
        "vector": np.asarray(params.vector),
    }, path)
    return path


def load_params(path: Path) -> ModelParams:
    payload = joblib.load(path)
    if payload.get("kind") != "model_params" or payload.get("format_version") != FORMAT_VERSION:
        raise ValueError(
            f"{path} is not a version-{FORMAT_VERSION} parameter checkpoint "
            f"(kind={payload.get('kind')}, version={payload.get('format_version')})"
        )
    return ModelParams(Architecture(**payload["architecture"]), payload["vector"].copy())
