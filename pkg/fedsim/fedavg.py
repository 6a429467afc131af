#!/usr/bin/env python3
"""
Federated averaging simulation.

Each round every client trains locally from the current global parameters;
the server adds the unweighted mean of the client deltas:

    theta(t) = theta(t-1) + mean_i delta_i(t)

After aggregation each client evaluates the new global model on its
validation partition. Training stops once the mean validation loss has not
improved for `patience` consecutive rounds (or at `max_rounds`); the round
with the lowest mean validation loss is the selected model.

The trace keeps every client delta, so the model of any coalition S can be
rebuilt by applying the same recursion with the mean taken over S only.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from joblib import Parallel, delayed

from models.mlp import Architecture, ModelParams, TrainingError, bce_loss, init_params, train_local
from synthdata.splits import ClientDataset

logger = logging.getLogger(__name__)


class RunError(RuntimeError):
    """FedAvg diverged; `trace` holds every completed round."""

    def __init__(self, message: str, trace: "FLTrace"):
        super().__init__(message)
        self.trace = trace


class CoalitionError(ValueError):
    """Empty or out-of-range coalition."""


@dataclass
class FLRunConfig:
    clients: Sequence[ClientDataset]
    n_hidden: int = 16
    lr: float = 0.1
    batch: int = 32
    local_epochs: int = 1
    patience: int = 10
    max_rounds: int = 200
    seed: int = 0
    n_jobs: int = 1

    def check(self) -> "FLRunConfig":
        if len(self.clients) < 1:
            raise ValueError("FedAvg needs at least one client")
        if self.patience < 1 or self.max_rounds < 1:
            raise ValueError(f"patience and max_rounds must be >= 1, got {self.patience}, {self.max_rounds}")
        dims = {(c.train.n_features, c.train.n_labels) for c in self.clients}
        if len(dims) != 1:
            raise ValueError(f"clients disagree on (features, labels): {sorted(dims)}")
        return self

    @property
    def architecture(self) -> Architecture:
        d, L = self.clients[0].train.n_features, self.clients[0].train.n_labels
        return Architecture(d, self.n_hidden, L)


@dataclass(frozen=True)
class ClientUpdate:
    round_index: int
    client_id: str
    delta: np.ndarray


@dataclass
class FLTrace:
    initial: ModelParams
    client_ids: list[str]
    rounds: list[list[ClientUpdate]] = field(default_factory=list)
    val_losses: list[np.ndarray] = field(default_factory=list)
    best_round: int = 0

    @property
    def n_clients(self) -> int:
        return len(self.client_ids)

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)

    def mean_val_losses(self) -> np.ndarray:
        return np.array([float(np.mean(v)) for v in self.val_losses])


def client_round_seed(seed: int, round_index: int, client_index: int) -> int:
    """Shuffle seed for one client in one round."""
    return int(np.random.SeedSequence([seed, round_index, client_index]).generate_state(1)[0])


def aggregate(previous: np.ndarray, deltas: Sequence[np.ndarray]) -> np.ndarray:
    """theta(t) = theta(t-1) + mean(deltas); the single code path for training and reconstruction."""
    return previous + np.mean(np.stack(deltas), axis=0)


def _local_update(global_params: ModelParams, client: ClientDataset, cfg: FLRunConfig,
                  round_index: int, client_index: int) -> np.ndarray:
    trained = train_local(
        global_params,
        client.train,
        epochs=cfg.local_epochs,
        lr=cfg.lr,
        batch=cfg.batch,
        seed=client_round_seed(cfg.seed, round_index, client_index),
        round_index=round_index,
    )
    return trained.vector - global_params.vector


def run_fedavg(cfg: FLRunConfig, initial: ModelParams | None = None) -> tuple[ModelParams, FLTrace]:
    """Train the grand coalition of `cfg.clients`; returns (best global params, trace)."""
    cfg.check()
    arch = cfg.architecture
    theta = initial if initial is not None else init_params(arch, cfg.seed)
    trace = FLTrace(initial=theta, client_ids=[c.client_id for c in cfg.clients])

    best_loss = np.inf
    best_params = theta
    stale = 0
    for t in range(1, cfg.max_rounds + 1):
        try:
            if cfg.n_jobs == 1:
                deltas = [_local_update(theta, c, cfg, t, i) for i, c in enumerate(cfg.clients)]
            else:
                deltas = Parallel(n_jobs=cfg.n_jobs, prefer="threads")(
                    delayed(_local_update)(theta, c, cfg, t, i) for i, c in enumerate(cfg.clients)
                )
            theta = theta.with_vector(aggregate(theta.vector, deltas))
        except (TrainingError, ValueError) as exc:
            raise RunError(f"FedAvg diverged in round {t}: {exc}", trace) from exc

        trace.rounds.append([
            ClientUpdate(round_index=t, client_id=c.client_id, delta=d)
            for c, d in zip(cfg.clients, deltas)
        ])
        losses = np.array([bce_loss(theta, c.validation.features, c.validation.labels) for c in cfg.clients])
        if not np.all(np.isfinite(losses)):
            raise RunError(f"non-finite validation loss in round {t}", trace)
        trace.val_losses.append(losses)

        mean_loss = float(np.mean(losses))
        logger.debug("round=%d mean_val_loss=%.6f", t, mean_loss)
        if mean_loss < best_loss:
            best_loss = mean_loss
            best_params = theta
            trace.best_round = t
            stale = 0
        else:
            stale += 1
            if stale >= cfg.patience:
                break

    logger.info("fedavg clients=%d rounds=%d best_round=%d best_mean_val_loss=%.6f",
                trace.n_clients, trace.n_rounds, trace.best_round, best_loss)
    return best_params, trace


def coalition_members(coalition: int | Iterable[int], n_clients: int) -> list[int]:
    """Sorted client indices of a bitmask or index collection."""
    if isinstance(coalition, (int, np.integer)):
        members = [i for i in range(n_clients) if (int(coalition) >> i) & 1]
        if int(coalition) >> n_clients:
            raise CoalitionError(f"coalition mask {coalition} names clients beyond {n_clients}")
    else:
        members = sorted(set(int(i) for i in coalition))
        if any(i < 0 or i >= n_clients for i in members):
            raise CoalitionError(f"coalition {members} names clients outside 0..{n_clients - 1}")
    if not members:
        raise CoalitionError("the empty coalition has no model; its utility is fixed by convention")
    return members


def reconstruct_coalition_model(trace: FLTrace, coalition: int | Iterable[int],
                                round_index: int | None = None) -> ModelParams:
    """
    Model of a coalition rebuilt from the grand-coalition trace.

    theta_S(t) = theta_S(t-1) + mean over i in S of delta_i(t), evaluated up to
    the trace's best round unless `round_index` is given.
    """
    members = coalition_members(coalition, trace.n_clients)
    last = trace.best_round if round_index is None else round_index
    if not 0 <= last <= trace.n_rounds:
        raise CoalitionError(f"round {last} outside recorded rounds 0..{trace.n_rounds}")
    theta = trace.initial.vector
    for t in range(last):
        updates = trace.rounds[t]
        theta = aggregate(theta, [updates[i].delta for i in members])
    return trace.initial.with_vector(theta)
