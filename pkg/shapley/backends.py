#!/usr/bin/env python3
"""
Utility-table back-ends.

    exact            retrain every coalition from scratch with FedAvg (2^N - 1 runs)
    gradient_accum   rebuild every coalition model from the grand coalition's trace
    ensemble         per-client logistic heads over deep features of the grand
                     coalition model; a coalition predicts with the mean of its
                     members' outputs

Each back-end evaluates one coalition model (or ensemble) once and scores it
for every requested utility, so performance and bias tables come from the same
models. Per-coalition wall times are recorded in the tables.
"""

from __future__ import annotations

import logging
import time
from dataclasses import replace
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy.special import expit

from fedsim.fedavg import FLRunConfig, FLTrace, reconstruct_coalition_model, run_fedavg
from metrics.auroc import ScoredTestSet, bias, macro_auroc
from models.logistic_heads import LogisticHeads, fit_logistic_head
from models.mlp import ModelParams, extract_features, predict_proba
from shapley.coalitions import (
    PERFORMANCE,
    GuardExceededError,
    Utility,
    UtilityKind,
    UtilityTable,
    ValuationError,
    all_coalitions,
    check_players,
    members,
)
from synthdata.generator import SampleSet
from synthdata.splits import ClientDataset

logger = logging.getLogger(__name__)

# default cap on clients for the exact back-end (63 FedAvg runs)
EXACT_GUARD = 6


class Backend(str, Enum):
    EXACT = "exact"
    GRADIENT_ACCUM = "gradient_accum"
    ENSEMBLE = "ensemble"


class Accumulate(str, Enum):
    PROBABILITY = "probability"
    LOGIT = "logit"


def score_utility(probabilities: np.ndarray, test: SampleSet, utility: Utility) -> float:
    ts = ScoredTestSet.from_samples(probabilities, test)
    if utility.kind is UtilityKind.PERFORMANCE:
        return macro_auroc(ts) - 0.5
    return bias(ts, utility.attribute).value


def _as_utilities(utilities: Iterable[Utility | UtilityKind | str] | Utility | UtilityKind | str) -> list[Utility]:
    if isinstance(utilities, (Utility, UtilityKind, str)):
        utilities = [utilities]
    parsed = [Utility.parse(u) for u in utilities]
    if not parsed:
        raise ValuationError("no utility requested")
    return parsed


def _fill_tables(
    n_players: int,
    client_ids: Sequence[str],
    utilities: list[Utility],
    predict: Callable[[int], np.ndarray],
    test: SampleSet,
    *,
    n_jobs: int = 1,
    prefer: str = "threads",
    label: str = "",
) -> dict[str, UtilityTable]:
    """Evaluate `predict(mask)` on the test set for every coalition and score all utilities."""

    def evaluate(mask: int) -> tuple[int, list[float], float]:
        start = time.perf_counter()
        probabilities = predict(mask)
        scores = [score_utility(probabilities, test, u) for u in utilities]
        return mask, scores, time.perf_counter() - start

    masks = list(all_coalitions(n_players))
    if n_jobs == 1:
        results = [evaluate(m) for m in masks]
    else:
        results = Parallel(n_jobs=n_jobs, prefer=prefer)(delayed(evaluate)(m) for m in masks)

    timings = np.zeros(1 << n_players)
    tables = {u.key: UtilityTable.empty(u, n_players, client_ids) for u in utilities}
    for mask, scores, elapsed in results:
        timings[mask] = elapsed
        for u, score in zip(utilities, scores):
            tables[u.key][mask] = score
    for table in tables.values():
        table.timings = timings.copy()

    logger.info("backend=%s clients=%d coalitions=%d total_s=%.4f mean_ms=%.3f", label, n_players,
                len(masks), float(timings.sum()), 1000.0 * float(timings[1:].mean()))
    return tables


def utility_tables_exact(
    clients: Sequence[ClientDataset],
    test: SampleSet,
    cfg: FLRunConfig,
    utilities: Iterable[Utility | str] = (PERFORMANCE,),
    *,
    guard: int = EXACT_GUARD,
    allow_large: bool = False,
    n_jobs: int = 1,
) -> dict[str, UtilityTable]:
    """Train each coalition from scratch with the settings of `cfg` (same seed for every run)."""
    n = len(clients)
    check_players(n)
    if n > guard and not allow_large:
        raise GuardExceededError(
            f"exact valuation of {n} clients needs {(1 << n) - 1} FedAvg runs; "
            f"the limit is {guard} clients unless allow_large is set"
        )

    def predict(mask: int) -> np.ndarray:
        params, _ = run_fedavg(replace(cfg, clients=[clients[i] for i in members(mask)], n_jobs=1))
        return predict_proba(params, test.features)

    return _fill_tables(n, [c.client_id for c in clients], _as_utilities(utilities), predict, test,
                        n_jobs=n_jobs, prefer="processes", label="exact")


def utility_table_exact(clients: Sequence[ClientDataset], test: SampleSet,
                        kind: Utility | UtilityKind | str, cfg: FLRunConfig, **kwargs) -> UtilityTable:
    utility = Utility.parse(kind)
    return utility_tables_exact(clients, test, cfg, [utility], **kwargs)[utility.key]


def _check_trace(trace: FLTrace, test: SampleSet, client_ids: Sequence[str] | None) -> None:
    if trace.n_rounds == 0 or trace.best_round == 0:
        raise ValuationError("trace holds no completed round")
    if client_ids is not None and list(client_ids) != list(trace.client_ids):
        raise ValuationError(f"trace clients {trace.client_ids} do not match {list(client_ids)}")
    if test.n_features != trace.initial.arch.n_inputs:
        raise ValuationError(f"test set has {test.n_features} features, trace model expects {trace.initial.arch.n_inputs}")


def utility_tables_gradient_accum(
    trace: FLTrace,
    test: SampleSet,
    utilities: Iterable[Utility | str] = (PERFORMANCE,),
    *,
    client_ids: Sequence[str] | None = None,
    n_jobs: int = 1,
) -> dict[str, UtilityTable]:
    """Score every coalition model reconstructed from the grand-coalition trace."""
    _check_trace(trace, test, client_ids)

    def predict(mask: int) -> np.ndarray:
        return predict_proba(reconstruct_coalition_model(trace, mask), test.features)

    return _fill_tables(trace.n_clients, trace.client_ids, _as_utilities(utilities), predict, test,
                        n_jobs=n_jobs, label="gradient_accum")


def utility_table_gradient_accum(trace: FLTrace, test: SampleSet,
                                 kind: Utility | UtilityKind | str = PERFORMANCE, **kwargs) -> UtilityTable:
    utility = Utility.parse(kind)
    return utility_tables_gradient_accum(trace, test, [utility], **kwargs)[utility.key]


def fit_client_heads(params: ModelParams, clients: Sequence[ClientDataset], *, seed: int = 0,
                     max_iter: int = 500) -> list[LogisticHeads]:
    """One set of logistic heads per client, fitted on its training partition's deep features."""
    heads = []
    for client in clients:
        features = extract_features(params, client.train.features)
        heads.append(fit_logistic_head(features, client.train.labels, seed=seed, max_iter=max_iter,
                                       client_id=client.client_id))
    return heads


def utility_tables_ensemble(
    source: FLTrace | ModelParams,
    heads: Sequence[LogisticHeads | None],
    test: SampleSet,
    utilities: Iterable[Utility | str] = (PERFORMANCE,),
    *,
    accumulate: Accumulate | str = Accumulate.PROBABILITY,
    client_ids: Sequence[str] | None = None,
    n_jobs: int = 1,
) -> dict[str, UtilityTable]:
    """
    Ensemble valuation. `source` supplies the feature extractor: the grand
    coalition model itself, or a trace whose best round is rebuilt.
    """
    accumulate = Accumulate(accumulate)
    if isinstance(source, FLTrace):
        _check_trace(source, test, client_ids)
        params = reconstruct_coalition_model(source, (1 << source.n_clients) - 1)
        client_ids = list(source.client_ids)
        if len(heads) != source.n_clients:
            raise ValuationError(f"{len(heads)} heads for {source.n_clients} trace clients")
    else:
        params = source
    missing = [i for i, h in enumerate(heads) if h is None]
    if missing or not heads:
        raise ValuationError(f"missing logistic heads for clients {missing}")
    if client_ids is None:
        client_ids = [h.client_id or f"client-{i + 1}" for i, h in enumerate(heads)]

    features = extract_features(params, test.features)
    if accumulate is Accumulate.PROBABILITY:
        outputs = np.stack([h.predict_proba(features) for h in heads])
    else:
        outputs = np.stack([h.decision_function(features) for h in heads])

    def predict(mask: int) -> np.ndarray:
        mean = outputs[members(mask)].mean(axis=0)
        return mean if accumulate is Accumulate.PROBABILITY else expit(mean)

    return _fill_tables(len(heads), client_ids, _as_utilities(utilities), predict, test,
                        n_jobs=n_jobs, label=f"ensemble/{accumulate.value}")


def utility_table_ensemble(source: FLTrace | ModelParams, heads: Sequence[LogisticHeads | None], test: SampleSet,
                           kind: Utility | UtilityKind | str = PERFORMANCE, **kwargs) -> UtilityTable:
    utility = Utility.parse(kind)
    return utility_tables_ensemble(source, heads, test, [utility], **kwargs)[utility.key]
