#!/usr/bin/env python3
"""
ALL-SPLITS SWEEP
================

Runs one experiment per data split (sex and age attribute x as_is, 50_50,
75_25, 100_0 regimes: eight splits) and concatenates the per-split reports
into Table-2 shaped files:

    <out>/all_splits_sv_table.csv
    <out>/all_splits_bias_sv.csv
    <out>/all_splits_rewards.csv

Usage:
    python scripts/run_all_splits.py configs/default_experiment.json
    python scripts/run_all_splits.py configs/default_experiment.json --attribute sex --repeats 3
"""

import sys
import argparse
import logging
from pathlib import Path
from datetime import datetime

import pandas as pd

# Add project root to path
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from experiments.config import apply_overrides, load_config
from experiments.reports import ReportError
from experiments.runner import ExperimentAborted, run_experiment
from synthdata.splits import SplitRegime

REPORT_FILES = ["sv_table.csv", "bias_sv.csv", "rewards.csv"]


def print_header(title):
    """Print a formatted header"""
    print("\n" + "=" * 80)
    print(f"  {title}")
    print("=" * 80)


def main(argv=None):
    parser = argparse.ArgumentParser(description='Run the experiment for every data split')
    parser.add_argument('config', type=str, help='Experiment config (JSON)')
    parser.add_argument('--attribute', choices=['sex', 'age', 'both'], default='both', help='Split attribute(s)')
    parser.add_argument('--repeats', type=int, help='Override repeats')
    parser.add_argument('--seed', type=int, help='Override master seed')
    parser.add_argument('--backend', choices=['exact', 'gradient_accum', 'ensemble'], help='Valuation back-end')
    parser.add_argument('--out', type=str, help='Output directory for the sweep')
    parser.add_argument('--jobs', type=int, help='Parallel repeats')
    parser.add_argument('-v', '--verbose', action='store_true', help='INFO logging')
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)

    base = apply_overrides(load_config(args.config), seed=args.seed, repeats=args.repeats,
                           backend=args.backend, jobs=args.jobs)
    out = Path(args.out) if args.out else base.output_path() / "all_splits"
    attributes = ['sex', 'age'] if args.attribute == 'both' else [args.attribute]

    start = datetime.now()
    print_header(f"ALL-SPLITS SWEEP - {base.name} - {start.strftime('%Y-%m-%d %H:%M:%S')}")

    results = {}
    for attribute in attributes:
        for regime in SplitRegime:
            label = f"{attribute}_{regime.value}"
            split = base.split.model_copy(update={"attribute": attribute, "regime": regime})
            cfg = base.model_copy(update={"split": split, "name": f"{base.name}_{label}"})
            print(f"\n[RUNNING] {attribute}/{regime.value}...")
            try:
                run_experiment(cfg, output_dir=out / label)
                print(f"[SUCCESS] {attribute}/{regime.value}")
                results[label] = True
            except (ExperimentAborted, ReportError, ValueError) as e:
                print(f"[ERROR] {attribute}/{regime.value} failed: {e}")
                results[label] = False

    for name in REPORT_FILES:
        parts = [pd.read_csv(out / label / name) for label, ok in results.items() if ok]
        if parts:
            pd.concat(parts, ignore_index=True).to_csv(out / f"all_splits_{name}", index=False, lineterminator="\n")

    print_header("SWEEP SUMMARY")
    for label, ok in results.items():
        status = "SUCCESS" if ok else "FAILED"
        print(f"  {label:<14} {status}")
    print(f"\nTotal time: {(datetime.now() - start).total_seconds():.1f} seconds")
    print(f"Combined tables in {out}")
    return 0 if all(results.values()) else 1


if __name__ == '__main__':
    sys.exit(main())
