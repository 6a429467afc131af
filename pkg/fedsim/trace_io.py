"""Persistence of FL traces so coalitions can be valued without retraining."""

from __future__ import annotations

from dataclasses import asdict
from pathlib import Path

import joblib
import numpy as np

from fedsim.fedavg import ClientUpdate, FLTrace
from models.mlp import Architecture, ModelParams

FORMAT_VERSION = 1


def save_trace(trace: FLTrace, path: Path) -> Path:
    """One (rounds, clients, params) delta array instead of per-update objects."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n_params = trace.initial.arch.n_params
    deltas = np.empty((trace.n_rounds, trace.n_clients, n_params))
    for t, updates in enumerate(trace.rounds):
        for i, update in enumerate(updates):
            deltas[t, i] = update.delta
    joblib.dump({
        "format_version": FORMAT_VERSION,
        "kind": "fl_trace",
        "architecture": asdict(trace.initial.arch),
        "initial": np.asarray(trace.initial.vector),
        "client_ids": list(trace.client_ids),
        "deltas": deltas,
        "val_losses": np.array(trace.val_losses).reshape(trace.n_rounds, trace.n_clients),
        "best_round": trace.best_round,
    }, path, compress=3)
    return path


def load_trace(path: Path) -> FLTrace:
    payload = joblib.load(path)
    if payload.get("kind") != "fl_trace" or payload.get("format_version") != FORMAT_VERSION:
        raise ValueError(
            f"{path} is not a version-{FORMAT_VERSION} FL trace "
            f"(kind={payload.get('kind')}, version={payload.get('format_version')})"
        )
    initial = ModelParams(Architecture(**payload["architecture"]), payload["initial"].copy())
    client_ids = list(payload["client_ids"])
    rounds = [
        [ClientUpdate(round_index=t + 1, client_id=cid, delta=payload["deltas"][t, i].copy())
         for i, cid in enumerate(client_ids)]
        for t in range(payload["deltas"].shape[0])
    ]
    return FLTrace(
        initial=initial,
        client_ids=client_ids,
        rounds=rounds,
        val_losses=[row.copy() for row in payload["val_losses"]],
        best_round=int(payload["best_round"]),
    )
