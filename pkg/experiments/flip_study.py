"""
Label-flip study.

The configured flip clients get their training labels flipped at each study
ratio (plus the unflipped baseline at ratio 0), with the same seeds for every
ratio, and their rewards are compared with their unflipped counterparts from
the same source.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

from experiments.config import ConfigError, ExperimentConfig
from experiments.reports import emit_reports, flip_table, json_safe
from experiments.runner import RunReport, run_experiment

logger = logging.getLogger(__name__)


@dataclass
class FlipStudyReport:
    config: ExperimentConfig
    reports: dict[float, RunReport] = field(default_factory=dict)

    @property
    def ratios(self) -> list[float]:
        return sorted(self.reports)

    def comparison(self) -> list[dict]:
        rows = []
        for ratio in self.ratios:
            rows += self.reports[ratio].flip_comparison()
        return rows

    def comparison_frame(self) -> pd.DataFrame:
        return flip_table(self.comparison())

    def summary(self) -> dict:
        """Per pool: does the flipped group earn less at the largest ratio, and do
        unflipped rewards grow with the ratio."""
        rows = pd.DataFrame(self.comparison())
        out = {}
        if rows.empty:
            return out
        top = max(self.ratios)
        for pool_id, group in rows.groupby("pool_id", sort=True):
            group = group.sort_values("ratio")
            at_top = group[group["ratio"] == top].iloc[0]
            unflipped = group["unflipped_mean"].to_numpy()
            out[pool_id] = {
                "largest_ratio": top,
                "flipped_lower_at_largest": bool(at_top["flipped_mean"] < at_top["unflipped_mean"]),
                "p_value_at_largest": at_top["p_value"],
                "unflipped_nondecreasing": bool((unflipped[1:] >= unflipped[:-1]).all()),
            }
        return out


def label_flip_study(cfg: ExperimentConfig, *, persist: bool = True, output_dir: Path | None = None,
                     include_baseline: bool = True) -> FlipStudyReport:
    pairs = cfg.flip_pairs()
    if not pairs:
        raise ConfigError("flip study needs flip.clients naming at least one client with an unflipped counterpart")

    study_cfg = cfg.model_copy(update={"repeats": cfg.flip.study_repeats})
    out = Path(output_dir) if output_dir is not None else cfg.output_path()
    ratios = sorted(set(([0.0] if include_baseline else []) + list(cfg.flip.study_ratios)))

    study = FlipStudyReport(config=study_cfg)
    for ratio in ratios:
        logger.info("flip study ratio=%.4f pairs=%s repeats=%d", ratio, pairs, study_cfg.repeats)
        study.reports[ratio] = run_experiment(study_cfg, flip_ratio=ratio, persist=persist,
                                              output_dir=out / f"ratio_{ratio:.4f}")
    if persist:
        emit_flip_study(study, out)
    return study


def emit_flip_study(study: FlipStudyReport, directory: Path) -> dict[str, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = {}
    for ratio, report in study.reports.items():
        sub = directory / f"ratio_{ratio:.4f}"
        if not (sub / "summary.json").exists():
            emit_reports(report, sub)
    written["flip.csv"] = directory / "flip.csv"
    study.comparison_frame().to_csv(written["flip.csv"], index=False, encoding="utf-8", lineterminator="\n")
    written["flip_summary.json"] = directory / "flip_summary.json"
    written["flip_summary.json"].write_text(
        json.dumps(json_safe({"ratios": study.ratios, "summary": study.summary(),
                          "comparison": study.comparison()}), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return written
