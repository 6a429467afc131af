#!/usr/bin/env python3
"""
Experiment runner.

One repeat:
    generate source pools and test sets -> split into client pairs -> flip
    labels -> FedAvg over all clients -> utility tables (performance, sex bias,
    age bias) with the configured back-end -> Shapley vectors -> reward pools

`run_experiment` runs the configured number of repeats, records failed repeats
with their seeds, aborts once the failure share exceeds the threshold, and
aggregates means, 95% confidence intervals and paired t-tests.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from joblib import Parallel, delayed

from experiments.config import ExperimentConfig
from experiments.reports import emit_reports, save_report
from experiments.seeds import RepeatSeeds
from fedsim.fedavg import FLRunConfig, run_fedavg
from fedsim.trace_io import save_trace
from metrics.auroc import ScoredTestSet, bias, macro_auroc
from metrics.stats import mean_ci, paired_t_test
from models.mlp import predict_proba
from models.persistence import save_params
from rewards.pools import PoolObjective, PoolSource, RewardAllocation
from rewards.schemes import CombinedRewards, allocate, combined_rewards, profit
from shapley.backends import (
    Backend,
    fit_client_heads,
    utility_tables_ensemble,
    utility_tables_exact,
    utility_tables_gradient_accum,
)
from shapley.coalitions import AGE_BIAS, PERFORMANCE, SEX_BIAS, ShapleyVector, UtilityTable
from shapley.values import shapley_from_table
from synthdata.flips import apply_flips, flip_positions
from synthdata.generator import SampleSet, generate
from synthdata.splits import SplitPlan, split, subgroup_a_counts

logger = logging.getLogger(__name__)

UTILITIES = (PERFORMANCE, SEX_BIAS, AGE_BIAS)

# head-room when sizing a source pool for a split
POOL_MARGIN = 1.2
POOL_SLACK = 50


class ExperimentAborted(RuntimeError):
    """Too many repeats failed."""

    def __init__(self, message: str, failures: list["RepeatFailure"]):
        super().__init__(message)
        self.failures = failures


class RepeatFailed(RuntimeError):
    def __init__(self, repeat: int, stage: str, seed: int, cause: Exception):
        super().__init__(f"repeat {repeat} failed in stage '{stage}': {type(cause).__name__}: {cause}")
        self.repeat = repeat
        self.stage = stage
        self.seed = seed
        self.cause = cause


@dataclass
class RepeatFailure:
    repeat: int
    stage: str
    seed: int
    error: str
    message: str

    def to_dict(self) -> dict:
        return {"repeat": self.repeat, "stage": self.stage, "seed": self.seed,
                "error": self.error, "message": self.message}


@dataclass
class RepeatResult:
    repeat: int
    seeds: dict
    client_ids: list[str]
    model_auroc: float
    model_bias: dict[str, float]
    tables: dict[str, UtilityTable]
    shapley: dict[str, ShapleyVector]
    allocations: list[RewardAllocation]
    combined: CombinedRewards
    rounds: int
    best_round: int
    manifest: list[dict] = field(default_factory=list)

    @property
    def total_auroc(self) -> float:
        """Grand-coalition AUROC of the valued model; equals sum(phi) + 0.5."""
        return self.tables[PERFORMANCE.key].grand_utility + 0.5

    @property
    def bias(self) -> dict[str, float]:
        return {u.attribute: self.tables[u.key].grand_utility for u in (SEX_BIAS, AGE_BIAS)}

    def allocation(self, pool_id: str) -> RewardAllocation:
        for alloc in self.allocations:
            if alloc.pool_id == pool_id:
                return alloc
        raise KeyError(pool_id)

    def n_evaluations(self) -> dict[str, int]:
        return {key: len(table) for key, table in self.tables.items()}

    def to_dict(self) -> dict:
        return {
            "repeat": self.repeat,
            "seeds": self.seeds,
            "total_auroc": self.total_auroc,
            "model_auroc": self.model_auroc,
            "bias": self.bias,
            "model_bias": self.model_bias,
            "rounds": self.rounds,
            "best_round": self.best_round,
            "coalition_evaluations": self.n_evaluations(),
            "shapley": {key: sv.to_dict() for key, sv in self.shapley.items()},
            "allocations": [a.to_dict() for a in self.allocations],
            "combined": self.combined.as_dict(),
            "data_manifest": self.manifest,
        }


def _nan_ci(values) -> tuple[float, float]:
    values = np.asarray(values, dtype=np.float64)
    if len(values) == 0:
        return math.nan, math.nan
    if len(values) < 2:
        return float(values[0]), math.nan
    return mean_ci(values)


def _stat(values) -> dict:
    mean, half = _nan_ci(values)
    return {"mean": mean, "ci95": half}


@dataclass
class RunReport:
    config: ExperimentConfig
    repeats: list[RepeatResult]
    failures: list[RepeatFailure] = field(default_factory=list)
    flip_ratio: float = 0.0

    @property
    def client_ids(self) -> list[str]:
        return self.config.client_ids

    @property
    def split_label(self) -> str:
        return f"{self.config.split.attribute}/{self.config.split.regime.value}"

    def _matrix(self, rows) -> np.ndarray:
        """(repeats, clients)"""
        return np.array(list(rows), dtype=np.float64).reshape(len(self.repeats), len(self.client_ids))

    def phi_matrix(self, key: str) -> np.ndarray:
        return self._matrix(r.shapley[key].values for r in self.repeats)

    def reward_matrix(self, pool_id: str) -> np.ndarray:
        return self._matrix(r.allocation(pool_id).rewards for r in self.repeats)

    def profit_matrix(self, pool_id: str) -> np.ndarray:
        return self._matrix(profit(r.allocation(pool_id)) for r in self.repeats)

    def combined_matrix(self) -> np.ndarray:
        return self._matrix(r.combined.totals for r in self.repeats)

    def aggregates(self) -> dict:
        ids = self.client_ids
        out = {
            "total_auroc": _stat([r.total_auroc for r in self.repeats]),
            "model_auroc": _stat([r.model_auroc for r in self.repeats]),
            "bias": {a: _stat([r.bias[a] for r in self.repeats]) for a in ("sex", "age")},
            "shapley": {},
            "rewards": {},
            "combined": {},
            "paired_tests": self.paired_tests(),
        }
        for u in UTILITIES:
            phi = self.phi_matrix(u.key)
            out["shapley"][u.key] = {cid: _stat(phi[:, i]) for i, cid in enumerate(ids)}
        for pool in self.config.rewards.pools:
            rewards = self.reward_matrix(pool.pool_id)
            entry = {"reward": {cid: _stat(rewards[:, i]) for i, cid in enumerate(ids)}}
            if pool.source is PoolSource.MEMBER_DEPOSITS:
                profits = self.profit_matrix(pool.pool_id)
                entry["profit"] = {cid: _stat(profits[:, i]) for i, cid in enumerate(ids)}
            out["rewards"][pool.pool_id] = entry
        combined = self.combined_matrix()
        out["combined"] = {cid: _stat(combined[:, i]) for i, cid in enumerate(ids)}
        return out

    def paired_tests(self) -> list[dict]:
        """Counterpart clients of every source, per Shapley utility and reward pool."""
        if len(self.repeats) < 2:
            return []
        index = {cid: i for i, cid in enumerate(self.client_ids)}
        series = {f"phi:{u.key}": self.phi_matrix(u.key) for u in UTILITIES}
        series.update({f"reward:{p.pool_id}": self.reward_matrix(p.pool_id) for p in self.config.rewards.pools})
        series["reward:combined"] = self.combined_matrix()
        rows = []
        for metric, matrix in series.items():
            for first, second in self.config.counterpart_pairs():
                p = paired_t_test(matrix[:, index[first]], matrix[:, index[second]])
                rows.append({"metric": metric, "client_a": first, "client_b": second,
                             "mean_a": float(matrix[:, index[first]].mean()),
                             "mean_b": float(matrix[:, index[second]].mean()),
                             "p_value": p, "significant": bool(p < 0.05)})
        return rows

    def flip_comparison(self) -> list[dict]:
        """Rewards of flipped clients against their unflipped counterparts."""
        pairs = self.config.flip_pairs()
        if not pairs or not self.repeats:
            return []
        index = {cid: i for i, cid in enumerate(self.client_ids)}
        flipped = [index[a] for a, _ in pairs]
        unflipped = [index[b] for _, b in pairs]
        series = {p.pool_id: self.reward_matrix(p.pool_id) for p in self.config.rewards.pools}
        series["combined"] = self.combined_matrix()
        rows = []
        for pool_id, matrix in series.items():
            a = matrix[:, flipped].mean(axis=1)
            b = matrix[:, unflipped].mean(axis=1)
            p = paired_t_test(a, b) if len(a) >= 2 else math.nan
            diff = float(a.mean() - b.mean())
            rows.append({
                "ratio": self.flip_ratio,
                "pool_id": pool_id,
                "flipped_mean": _stat(a)["mean"],
                "flipped_ci95": _stat(a)["ci95"],
                "unflipped_mean": _stat(b)["mean"],
                "unflipped_ci95": _stat(b)["ci95"],
                "p_value": p,
                "direction": "flipped_lower" if diff < 0 else ("flipped_higher" if diff > 0 else "equal"),
            })
        return rows


def pool_size(plan: SplitPlan, share_a: float) -> int:
    """Samples to generate so the split can be served with high probability."""
    counts_a = subgroup_a_counts(plan, share_a)
    need_a = sum(counts_a)
    need_b = plan.n_clients * plan.per_client_size - need_a
    required = []
    for need, share in ((need_a, share_a), (need_b, 1.0 - share_a)):
        if need == 0:
            continue
        if share <= 0:
            return plan.n_clients * plan.per_client_size
        required.append(need / share)
    return int(math.ceil(max(required) * POOL_MARGIN)) + POOL_SLACK


def build_clients(cfg: ExperimentConfig, seeds: RepeatSeeds) -> tuple[list, SampleSet]:
    """Client datasets of every source, plus the shared test set."""
    clients = []
    tests = []
    for s, source in enumerate(cfg.sources):
        spec = source.model_copy(update={"task_seed": cfg.task_seed})
        share = spec.sex_share if cfg.split.attribute == "sex" else spec.age_share
        plan = SplitPlan(
            regime=cfg.split.regime,
            attribute=cfg.split.attribute,
            n_clients=cfg.clients_per_source,
            per_client_size=cfg.split.per_client_size,
            train_fraction=cfg.split.train_fraction,
            as_is_share=share,
        )
        pool = generate(spec, pool_size(plan, share), seed=seeds("data", s), id_offset=2 * s * 10**8)
        clients += split(pool, plan, seeds("split", s), source=spec.name)
        tests.append(generate(spec, cfg.test_size_per_source, seed=seeds("test", s), id_offset=(2 * s + 1) * 10**8))
    return clients, SampleSet.concat(tests)


def run_repeat(cfg: ExperimentConfig, repeat: int, *, flip_ratio: float | None = None,
               artifact_dir: Path | None = None) -> RepeatResult:
    seeds = RepeatSeeds(cfg.seed, repeat)
    ratio = cfg.flip.ratio if flip_ratio is None else flip_ratio
    stage = "data"
    try:
        clients, test = build_clients(cfg, seeds)

        stage = "flip"
        flipped = set(cfg.flip.clients)
        manifest = []
        for i, client in enumerate(clients):
            entry = client.composition()
            entry.update({"flip_ratio": 0.0, "flip_count": 0})
            if client.client_id in flipped:
                positions = flip_positions(len(client.train), client.train.n_labels, ratio, seeds("flip", i))
                clients[i] = apply_flips(client, positions)
                entry.update({"flip_ratio": ratio, "flip_count": int(len(positions))})
            manifest.append(entry)

        stage = "fedavg"
        t = cfg.training
        fl_cfg = FLRunConfig(clients=clients, n_hidden=t.n_hidden, lr=t.lr, batch=t.batch,
                             local_epochs=t.local_epochs, patience=t.patience, max_rounds=t.max_rounds,
                             seed=seeds("fedavg"))
        best, trace = run_fedavg(fl_cfg)
        scored = ScoredTestSet.from_samples(predict_proba(best, test.features), test)
        model_auroc = macro_auroc(scored)
        model_bias = {a: bias(scored, a).value for a in ("sex", "age")}
        logger.info("repeat=%d seed=%d stage=fedavg rounds=%d best_round=%d auroc=%.4f", repeat,
                    seeds("fedavg"), trace.n_rounds, trace.best_round, model_auroc)

        stage = "valuation"
        v = cfg.valuation
        if v.backend is Backend.EXACT:
            tables = utility_tables_exact(clients, test, fl_cfg, UTILITIES, guard=v.exact_guard,
                                          allow_large=v.allow_large)
        elif v.backend is Backend.GRADIENT_ACCUM:
            tables = utility_tables_gradient_accum(trace, test, UTILITIES)
        else:
            heads = fit_client_heads(best, clients, seed=seeds("heads"), max_iter=v.head_max_iter)
            tables = utility_tables_ensemble(trace, heads, test, UTILITIES, accumulate=v.accumulate)
        shapley = {key: shapley_from_table(table) for key, table in tables.items()}

        stage = "rewards"
        allocations = []
        for pool in cfg.rewards.pools:
            sv = shapley[pool.objective.utility.key]
            allocations.append(allocate(sv, pool, clamp=cfg.rewards.clamp, tol=cfg.rewards.bias_tol))
        perf = [a for a in allocations if a.pool.objective is PoolObjective.PERFORMANCE]
        others = [a for a in allocations if a.pool.objective is not PoolObjective.PERFORMANCE]
        combined = combined_rewards(perf[0] if perf else None, others)

        result = RepeatResult(
            repeat=repeat,
            seeds=seeds.as_dict(len(cfg.sources), cfg.n_clients),
            client_ids=[c.client_id for c in clients],
            model_auroc=model_auroc,
            model_bias=model_bias,
            tables=tables,
            shapley=shapley,
            allocations=allocations,
            combined=combined,
            rounds=trace.n_rounds,
            best_round=trace.best_round,
            manifest=manifest,
        )

        if artifact_dir is not None:
            stage = "persist"
            persist_repeat(result, trace, best, Path(artifact_dir))
    except (ValueError, RuntimeError, ArithmeticError) as exc:
        raise RepeatFailed(repeat, stage, cfg.seed, exc) from exc

    logger.info("repeat=%d total_auroc=%.4f sex_bias=%.4f age_bias=%.4f", repeat, result.total_auroc,
                result.bias["sex"], result.bias["age"])
    return result


def persist_repeat(result: RepeatResult, trace, best, directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    save_trace(trace, directory / "trace.joblib")
    save_params(best, directory / "params.joblib")
    for key, table in result.tables.items():
        table.save_json(directory / f"table_{key.replace(':', '_')}.json")
    for key, sv in result.shapley.items():
        path = directory / f"shapley_{key.replace(':', '_')}.json"
        path.write_text(json.dumps(sv.to_dict(), indent=2))


def _guarded_repeat(cfg: ExperimentConfig, repeat: int, flip_ratio: float | None,
                    artifact_dir: Path | None) -> RepeatResult | RepeatFailure:
    try:
        return run_repeat(cfg, repeat, flip_ratio=flip_ratio, artifact_dir=artifact_dir)
    except RepeatFailed as exc:
        logger.warning("repeat=%d seed=%d stage=%s failed: %s", exc.repeat, exc.seed, exc.stage, exc.cause)
        return RepeatFailure(exc.repeat, exc.stage, exc.seed, type(exc.cause).__name__, str(exc.cause))


def run_experiment(cfg: ExperimentConfig, *, flip_ratio: float | None = None, persist: bool = True,
                   output_dir: Path | None = None) -> RunReport:
    """Run every repeat, aggregate, and (with `persist`) write artifacts and reports."""
    out = Path(output_dir) if output_dir is not None else cfg.output_path()
    allowed = int(math.floor(cfg.failure_threshold * cfg.repeats))

    def artifact_dir(r: int) -> Path | None:
        return out / "repeats" / f"repeat_{r:03d}" if persist else None

    results: list[RepeatResult] = []
    failures: list[RepeatFailure] = []
    if cfg.n_jobs == 1:
        for r in range(cfg.repeats):
            outcome = _guarded_repeat(cfg, r, flip_ratio, artifact_dir(r))
            if isinstance(outcome, RepeatFailure):
                failures.append(outcome)
                if len(failures) > allowed:
                    break
            else:
                results.append(outcome)
    else:
        outcomes = Parallel(n_jobs=cfg.n_jobs)(
            delayed(_guarded_repeat)(cfg, r, flip_ratio, artifact_dir(r)) for r in range(cfg.repeats)
        )
        for outcome in outcomes:
            (failures if isinstance(outcome, RepeatFailure) else results).append(outcome)

    if len(failures) > allowed:
        raise ExperimentAborted(
            f"{len(failures)} of {cfg.repeats} repeats failed, above the threshold of "
            f"{cfg.failure_threshold:.0%}", failures)

    report = RunReport(
        config=cfg,
        repeats=results,
        failures=failures,
        flip_ratio=cfg.flip.ratio if flip_ratio is None else flip_ratio,
    )
    logger.info("experiment=%s repeats=%d failures=%d", cfg.name, len(results), len(failures))

    if persist:
        save_report(report, out / "report.joblib")
        emit_reports(report, out)
    return report
