#!/usr/bin/env python3
"""
FL Contribution and Reward Toolkit - command line

Usage:
    python scripts/fl_rewards.py run configs/default_experiment.json
    python scripts/fl_rewards.py run configs/default_experiment.json --repeats 3 --backend gradient_accum
    python scripts/fl_rewards.py flip-study configs/flip_study.json
    python scripts/fl_rewards.py report runs/default_experiment
    python scripts/fl_rewards.py validate-config configs/full_scale.json
    python scripts/fl_rewards.py validate-config --schema
    python scripts/fl_rewards.py scalability configs/default_experiment.json --sizes 2 4 6 --target 20

Flags --seed, --repeats, --backend, --out and --jobs override the config file.
The default output root is $FL_REWARDS_OUTPUT_ROOT (or runs/). On failure a
JSON object {"error", "message", "exit_code"} is printed to stderr; the exit
code is 2 for configuration errors and 1 otherwise.
"""

import sys
import json
import logging
import argparse
import warnings
from pathlib import Path
from datetime import datetime

# Add project root to path
PROJECT_ROOT = Path(__file__).parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from pydantic import ValidationError

from experiments.config import ConfigError, apply_overrides, config_schema, load_config
from experiments.flip_study import label_flip_study
from experiments.reports import emit_reports, load_report
from experiments.runner import ExperimentAborted, run_experiment
from experiments.scalability import DEFAULT_TARGET, measure_scalability, scalability_frame
from synthdata.generator import ConfigurationError

warnings.filterwarnings('ignore', category=RuntimeWarning)

EXIT_FAILURE = 1
EXIT_CONFIG = 2
CONFIG_ERRORS = (ConfigError, ConfigurationError, ValidationError)


def print_header(title):
    """Print a formatted header"""
    print("\n" + "=" * 80)
    print(f"  {title}")
    print("=" * 80)


def fail(exc: Exception) -> int:
    code = EXIT_CONFIG if isinstance(exc, CONFIG_ERRORS) else EXIT_FAILURE
    print(f"\n[ERROR] {type(exc).__name__}: {exc}")
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}) + "\n")
    return code


def load_with_overrides(args):
    cfg = load_config(args.config)
    return apply_overrides(cfg, seed=args.seed, repeats=args.repeats, backend=args.backend,
                           out=args.out, jobs=args.jobs)


def print_run_summary(report):
    agg = report.aggregates()
    auroc = agg["total_auroc"]
    print(f"  Split:          {report.split_label}")
    print(f"  Repeats:        {len(report.repeats)} completed, {len(report.failures)} failed")
    print(f"  Total AUROC:    {auroc['mean']:.4f} +/- {auroc['ci95']:.4f}")
    for attribute, stat in agg["bias"].items():
        label = f"{attribute.capitalize()} bias:"
        print(f"  {label:<16}{stat['mean']:+.4f} +/- {stat['ci95']:.4f}")
    print("\n  Combined rewards [MU]:")
    for cid, stat in agg["combined"].items():
        print(f"    {cid:<16} {stat['mean']:8.2f} +/- {stat['ci95']:.2f}")


def cmd_run(args):
    cfg = load_with_overrides(args)
    print_header(f"FL REWARDS RUN - {cfg.name} - {datetime.now().strftime('%Y-%m-%d %H:%M:%S')}")
    print(f"\n[RUNNING] {cfg.repeats} repeats, {cfg.n_clients} clients, backend={cfg.valuation.backend.value}")
    report = run_experiment(cfg)
    print(f"[SUCCESS] Reports written to {cfg.output_path()}")
    print_header("RUN SUMMARY")
    print_run_summary(report)
    return 0


def cmd_flip_study(args):
    cfg = load_with_overrides(args)
    if args.repeats is not None:
        cfg = cfg.model_copy(update={"flip": cfg.flip.model_copy(update={"study_repeats": args.repeats})})
    print_header(f"LABEL FLIP STUDY - {cfg.name}")
    print(f"\n[RUNNING] flipped clients {cfg.flip.clients}, ratios {cfg.flip.study_ratios}, "
          f"{cfg.flip.study_repeats} repeats each")
    study = label_flip_study(cfg)
    print(f"[SUCCESS] Reports written to {cfg.output_path()}")
    print_header("FLIP SUMMARY")
    print(study.comparison_frame().to_string(index=False))
    for pool_id, verdict in study.summary().items():
        status = "lower" if verdict["flipped_lower_at_largest"] else "NOT lower"
        print(f"  {pool_id}: flipped clients {status} at ratio {verdict['largest_ratio']} "
              f"(p={verdict['p_value_at_largest']:.4f})")
    return 0


def cmd_report(args):
    run_dir = Path(args.run_dir)
    print_header(f"RE-EMITTING REPORTS - {run_dir}")
    report = load_report(run_dir / "report.joblib")
    written = emit_reports(report, Path(args.out) if args.out else run_dir)
    for name, path in written.items():
        print(f"  [OK] {name} -> {path}")
    return 0


def cmd_validate_config(args):
    if args.schema:
        print(json.dumps(config_schema(), indent=2))
        return 0
    if not args.config:
        raise ConfigError("validate-config needs a config path or --schema")
    cfg = load_config(args.config)
    print(f"[OK] {args.config}: experiment '{cfg.name}', {cfg.n_clients} clients "
          f"({', '.join(s.name for s in cfg.sources)}), split {cfg.split.attribute}/{cfg.split.regime.value}, "
          f"backend {cfg.valuation.backend.value}, {cfg.repeats} repeats")
    return 0


def cmd_scalability(args):
    cfg = load_with_overrides(args)
    print_header(f"SCALABILITY - ensemble valuation, sizes {args.sizes}")
    rows = measure_scalability(cfg, args.sizes, target=args.target, max_rounds=args.max_rounds)
    df = scalability_frame(rows)
    print(df.to_string(index=False))
    out = cfg.output_path()
    out.mkdir(parents=True, exist_ok=True)
    df.to_csv(out / "scalability.csv", index=False, lineterminator="\n")
    print(f"\n[SUCCESS] {out / 'scalability.csv'}")
    return 0


def add_override_flags(parser):
    parser.add_argument('config', type=str, help='Experiment config (JSON)')
    parser.add_argument('--seed', type=int, help='Master seed')
    parser.add_argument('--repeats', type=int, help='Number of repeats')
    parser.add_argument('--backend', choices=['exact', 'gradient_accum', 'ensemble'], help='Valuation back-end')
    parser.add_argument('--out', type=str, help='Output directory')
    parser.add_argument('--jobs', type=int, help='Parallel repeats')


def build_parser():
    parser = argparse.ArgumentParser(description='Shapley-value contributions and rewards for simulated FL')
    parser.add_argument('-v', '--verbose', action='count', default=0, help='-v for INFO, -vv for DEBUG')
    sub = parser.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='Run an experiment')
    add_override_flags(run)
    run.set_defaults(func=cmd_run)

    flip = sub.add_parser('flip-study', help='Compare flipped and unflipped counterpart rewards')
    add_override_flags(flip)
    flip.set_defaults(func=cmd_flip_study)

    report = sub.add_parser('report', help='Re-emit report files from a run directory')
    report.add_argument('run_dir', type=str, help='Directory holding report.joblib')
    report.add_argument('--out', type=str, help='Write files here instead of run_dir')
    report.set_defaults(func=cmd_report)

    validate = sub.add_parser('validate-config', help='Validate a config file')
    validate.add_argument('config', nargs='?', help='Experiment config (JSON)')
    validate.add_argument('--schema', action='store_true', help='Print the config JSON schema')
    validate.set_defaults(func=cmd_validate_config)

    scal = sub.add_parser('scalability', help='Time ensemble valuation per consortium size')
    add_override_flags(scal)
    scal.add_argument('--sizes', type=int, nargs='+', default=[2, 4, 6], help='Consortium sizes')
    scal.add_argument('--target', type=int, default=DEFAULT_TARGET, help='Size to extrapolate to')
    scal.add_argument('--max-rounds', type=int, help='Cap FedAvg rounds for the feature model')
    scal.set_defaults(func=cmd_scalability)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else (logging.INFO if args.verbose == 1 else logging.DEBUG)
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        return args.func(args)
    except ExperimentAborted as exc:
        for failure in exc.failures:
            print(f"  [ERROR] repeat {failure.repeat} ({failure.stage}): {failure.error}: {failure.message}")
        return fail(exc)
    except (ValueError, RuntimeError, OSError) as exc:
        return fail(exc)


if __name__ == '__main__':
    sys.exit(main())
