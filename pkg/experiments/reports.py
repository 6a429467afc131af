#!/usr/bin/env python3
"""
Report files of a finished run.

    summary.json   full structured report (versioned), no wall-clock times
    sv_table.csv   performance Shapley values per repeat and mean, plus total AUROC
    bias_sv.csv    mean and 95% CI of bias Shapley values per client
    rewards.csv    mean and 95% CI of rewards and profits per pool and client (MU, 2 decimals)
    flip.csv       flipped vs unflipped rewards
    timings.csv    per-coalition evaluation times

Emitting the same report twice produces byte-identical files.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import TYPE_CHECKING

import joblib
import pandas as pd

from shapley.coalitions import AGE_BIAS, PERFORMANCE, SEX_BIAS, coalition_sizes

if TYPE_CHECKING:
    from experiments.runner import RunReport

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FORMAT_VERSION = 1
# monetary values are rounded only when written
MONEY_DECIMALS = 2

FLIP_COLUMNS = ["ratio", "pool_id", "flipped_mean", "flipped_ci95", "unflipped_mean", "unflipped_ci95",
                "p_value", "direction"]


class ReportError(RuntimeError):
    """Report cannot be produced."""


def json_safe(value):
    """JSON-safe copy: NaN and infinities become null."""
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if hasattr(value, "item"):
        return json_safe(value.item())
    return value


def summary_payload(report: "RunReport") -> dict:
    return json_safe({
        "schema_version": SCHEMA_VERSION,
        "experiment": report.config.name,
        "split": report.split_label,
        "backend": report.config.valuation.backend.value,
        "flip_ratio": report.flip_ratio,
        "config": report.config.model_dump(mode="json"),
        "client_ids": report.client_ids,
        "n_repeats": len(report.repeats),
        "failures": [f.to_dict() for f in report.failures],
        "aggregates": report.aggregates(),
        "flip_comparison": report.flip_comparison(),
        "repeats": [r.to_dict() for r in report.repeats],
    })


def sv_table(report: "RunReport") -> pd.DataFrame:
    """Rows per repeat plus the mean row; client columns sum to total_auroc - 0.5."""
    ids = report.client_ids
    phi = report.phi_matrix(PERFORMANCE.key)
    rows = []
    for k, r in enumerate(report.repeats):
        rows.append({"split": report.split_label, "row": f"repeat_{r.repeat:03d}",
                     **dict(zip(ids, phi[k])), "total_auroc": r.total_auroc})
    means = phi.mean(axis=0)
    rows.append({"split": report.split_label, "row": "mean", **dict(zip(ids, means)),
                 "total_auroc": float(sum(r.total_auroc for r in report.repeats) / len(report.repeats))})
    return pd.DataFrame(rows, columns=["split", "row", *ids, "total_auroc"])


def bias_sv_table(report: "RunReport") -> pd.DataFrame:
    agg = report.aggregates()
    rows = []
    for utility in (SEX_BIAS, AGE_BIAS):
        for cid, stat in agg["shapley"][utility.key].items():
            rows.append({"split": report.split_label, "attribute": utility.attribute, "client_id": cid,
                         "phi_mean": stat["mean"], "phi_ci95": stat["ci95"]})
        total = agg["bias"][utility.attribute]
        rows.append({"split": report.split_label, "attribute": utility.attribute, "client_id": "total",
                     "phi_mean": total["mean"], "phi_ci95": total["ci95"]})
    return pd.DataFrame(rows)


def rewards_table(report: "RunReport") -> pd.DataFrame:
    agg = report.aggregates()
    rows = []
    for pool_id, entry in agg["rewards"].items():
        for cid, stat in entry["reward"].items():
            profit = entry.get("profit", {}).get(cid, {"mean": math.nan, "ci95": math.nan})
            rows.append({"split": report.split_label, "pool_id": pool_id, "client_id": cid,
                         "reward_mean": stat["mean"], "reward_ci95": stat["ci95"],
                         "profit_mean": profit["mean"], "profit_ci95": profit["ci95"]})
    for cid, stat in agg["combined"].items():
        rows.append({"split": report.split_label, "pool_id": "combined", "client_id": cid,
                     "reward_mean": stat["mean"], "reward_ci95": stat["ci95"],
                     "profit_mean": math.nan, "profit_ci95": math.nan})
    df = pd.DataFrame(rows)
    money = ["reward_mean", "reward_ci95", "profit_mean", "profit_ci95"]
    df[money] = df[money].round(MONEY_DECIMALS)
    return df


def flip_table(rows: list[dict]) -> pd.DataFrame:
    df = pd.DataFrame(rows, columns=FLIP_COLUMNS)
    money = ["flipped_mean", "flipped_ci95", "unflipped_mean", "unflipped_ci95"]
    if len(df):
        df[money] = df[money].astype(float).round(MONEY_DECIMALS)
    return df


def timings_table(report: "RunReport") -> pd.DataFrame:
    rows = []
    backend = report.config.valuation.backend.value
    for r in report.repeats:
        table = r.tables[PERFORMANCE.key]
        if table.timings is None:
            continue
        sizes = coalition_sizes(table.n_players)
        for mask, _ in table:
            rows.append({"repeat": r.repeat, "backend": backend, "coalition": mask,
                         "size": int(sizes[mask]), "seconds": float(table.timings[mask])})
    return pd.DataFrame(rows, columns=["repeat", "backend", "coalition", "size", "seconds"])


def _write_csv(df: pd.DataFrame, path: Path) -> Path:
    df.to_csv(path, index=False, encoding="utf-8", lineterminator="\n")
    return path


def emit_reports(report: "RunReport", directory: Path) -> dict[str, Path]:
    if not report.repeats:
        raise ReportError("report holds no completed repeat; nothing written")
    # build everything before touching the file system
    summary = json.dumps(summary_payload(report), indent=2, sort_keys=True)
    frames = {
        "sv_table.csv": sv_table(report),
        "bias_sv.csv": bias_sv_table(report),
        "rewards.csv": rewards_table(report),
        "flip.csv": flip_table(report.flip_comparison()),
        "timings.csv": timings_table(report),
    }

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = {"summary.json": directory / "summary.json"}
    written["summary.json"].write_text(summary + "\n", encoding="utf-8")
    for name, df in frames.items():
        written[name] = _write_csv(df, directory / name)
    logger.info("reports written to %s (%d files)", directory, len(written))
    return written


def save_report(report: "RunReport", path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    joblib.dump({"format_version": FORMAT_VERSION, "kind": "run_report", "report": report}, path, compress=3)
    return path


def load_report(path: Path) -> "RunReport":
    path = Path(path)
    if not path.exists():
        raise ReportError(f"no saved report at {path}")
    payload = joblib.load(path)
    if payload.get("kind") != "run_report" or payload.get("format_version") != FORMAT_VERSION:
        raise ReportError(
            f"{path} is not a version-{FORMAT_VERSION} run report "
            f"(kind={payload.get('kind')}, version={payload.get('format_version')})"
        )
    return payload["report"]
