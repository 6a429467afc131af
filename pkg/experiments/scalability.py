"""
Scalability of ensemble valuation.

Trains one FedAvg run over the largest consortium, fits every client's
logistic heads once, then times the ensemble evaluation of all 2^N - 1
coalitions for each requested N (the first N clients). The mean time per
coalition extrapolates the total for a larger target consortium.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import pandas as pd

from experiments.config import ExperimentConfig
from experiments.runner import pool_size
from experiments.seeds import RepeatSeeds
from fedsim.fedavg import FLRunConfig, run_fedavg
from shapley.backends import fit_client_heads, utility_tables_ensemble
from shapley.coalitions import MAX_PLAYERS, PERFORMANCE, SEX_BIAS, ValuationError
from synthdata.generator import generate
from synthdata.splits import SplitPlan, SplitRegime, split

logger = logging.getLogger(__name__)

DEFAULT_TARGET = 20


@dataclass(frozen=True)
class ScalabilityRow:
    n_clients: int
    coalitions: int
    total_seconds: float
    mean_ms_per_coalition: float
    target_clients: int
    target_coalitions: int
    extrapolated_seconds: float


def measure_scalability(cfg: ExperimentConfig, sizes: list[int], *, target: int = DEFAULT_TARGET,
                        max_rounds: int | None = None) -> list[ScalabilityRow]:
    if not sizes:
        raise ValuationError("no consortium sizes given")
    bad = [n for n in sizes if not 1 <= n <= MAX_PLAYERS]
    if bad:
        raise ValuationError(f"sizes must lie in 1..{MAX_PLAYERS}, got {bad}")

    seeds = RepeatSeeds(cfg.seed, 0)
    spec = cfg.sources[0].model_copy(update={"task_seed": cfg.task_seed})
    largest = max(sizes) + max(sizes) % 2
    share = spec.sex_share if cfg.split.attribute == "sex" else spec.age_share
    plan = SplitPlan(regime=SplitRegime.AS_IS, attribute=cfg.split.attribute, n_clients=largest,
                     per_client_size=cfg.split.per_client_size, train_fraction=cfg.split.train_fraction,
                     as_is_share=share)
    pool = generate(spec, pool_size(plan, share), seed=seeds("data", 0))
    clients = split(pool, plan, seeds("split", 0), source=spec.name)
    test = generate(spec, cfg.test_size_per_source, seed=seeds("test", 0), id_offset=10**8)

    t = cfg.training
    fl_cfg = FLRunConfig(clients=clients, n_hidden=t.n_hidden, lr=t.lr, batch=t.batch, local_epochs=t.local_epochs,
                         patience=t.patience, max_rounds=max_rounds or t.max_rounds, seed=seeds("fedavg"))
    best, _ = run_fedavg(fl_cfg)
    heads = fit_client_heads(best, clients, seed=seeds("heads"), max_iter=cfg.valuation.head_max_iter)

    rows = []
    for n in sorted(set(sizes)):
        tables = utility_tables_ensemble(best, heads[:n], test, [PERFORMANCE, SEX_BIAS],
                                         accumulate=cfg.valuation.accumulate,
                                         client_ids=[c.client_id for c in clients[:n]])
        timings = tables[PERFORMANCE.key].timings
        coalitions = (1 << n) - 1
        total = float(timings.sum())
        mean = total / coalitions
        rows.append(ScalabilityRow(
            n_clients=n,
            coalitions=coalitions,
            total_seconds=total,
            mean_ms_per_coalition=1000.0 * mean,
            target_clients=target,
            target_coalitions=(1 << target) - 1,
            extrapolated_seconds=mean * ((1 << target) - 1),
        ))
        logger.info("scalability clients=%d coalitions=%d total_s=%.4f mean_ms=%.3f", n, coalitions, total,
                    1000.0 * mean)
    return rows


def scalability_frame(rows: list[ScalabilityRow]) -> pd.DataFrame:
    return pd.DataFrame([asdict(r) for r in rows])
