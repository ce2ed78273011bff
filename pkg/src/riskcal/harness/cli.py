"""Command-line interface.

Subcommands: calibrate, coverage, simulate, report. Exit codes: 0 on
success, 2 for validation or schema errors, 3 for I/O and parse errors.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from ..core import ParseError, RiskControlError, ValidationError, derive_seed
from ..envs import risk_reward_matrix
from .config import ExperimentConfig, SchedulerEnv, load_config
from .fileio import (
    load_result,
    load_risk_matrix,
    read_json,
    write_json,
    write_result,
    write_risk_matrix,
    write_values_csv,
)
from .runner import (
    STREAM_TRIAL,
    CoverageReport,
    prepare_runtime,
    run_coverage,
    run_single,
    write_histogram_csv,
    write_violin_csv,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="riskcal",
        description="Certify hyperparameter grids for mean- or quantile-risk control.",
    )
    parser.add_argument("--config", help="experiment config JSON")
    parser.add_argument("--seed", type=int, help="override the config master seed")
    parser.add_argument("--out", help="output directory (overrides config output_dir)")
    parser.add_argument("--method", choices=["mean", "quantile"],
                        help="override spec.method from the config")
    parser.add_argument("--quiet", action="store_true", help="suppress summaries")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("calibrate", help="run one calibration and write result.json")
    sub.add_parser("coverage", help="run repeated-trial coverage and write coverage.json")
    sub.add_parser("simulate", help="simulate scheduler episodes into a risk matrix file")

    rep = sub.add_parser("report", help="emit figure-ready CSV files")
    rep.add_argument("--ltt-result", help="result JSON of a mean-method calibration")
    rep.add_argument("--qltt-result", help="result JSON of a quantile-method calibration")
    rep.add_argument("--test-csv", help="risk matrix CSV with test episodes")
    rep.add_argument("--test-manifest", help="manifest JSON for --test-csv")
    rep.add_argument("--coverage", action="append", default=[],
                     help="coverage JSON (repeatable, one per method)")
    rep.add_argument("--alpha", type=float, help="override the alpha recorded in results")
    rep.add_argument("--q", type=float, help="override the outage rate for markers")
    return parser


def _load_experiment(args) -> ExperimentConfig:
    if not args.config:
        raise ValidationError("--config is required for this command")
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.method is not None and args.method != config.spec.method:
        config = replace(config, spec=replace(config.spec, method=args.method))
    if args.out is not None:
        config = replace(config, output_dir=args.out)
    if config.output_dir is None:
        raise ValidationError("an output directory is required (config output_dir or --out)")
    return config


def _out_dir(config: ExperimentConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_calibrate(args) -> int:
    config = _load_experiment(args)
    out = _out_dir(config)
    result, runtime = run_single(config)
    path = out / "result.json"
    write_result(path, result)
    if not args.quiet:
        if not result.certified:
            print("no hyperparameter certified")
        else:
            sel = runtime.grid.points[result.selected]
            print(f"certified {len(result.certified)} of {len(runtime.grid)} candidates")
            print(f"selected id {sel.id} params {tuple(sel.params)}")
        print(f"p-values: min {min(result.p_values):.3g} max {max(result.p_values):.3g}")
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_coverage(args) -> int:
    config = _load_experiment(args)
    out = _out_dir(config)
    report = run_coverage(config)
    path = out / "coverage.json"
    write_json(path, report.to_dict())
    if not args.quiet:
        lo, hi = report.ci95
        print(f"trials {report.trials}, violation rate {report.violation_rate:.4f} "
              f"(95% CI [{lo:.4f}, {hi:.4f}])")
        sizes = sorted(len(r.certified) for r in report.records)
        print(f"certified-set size: min {sizes[0]} median {sizes[len(sizes) // 2]} "
              f"max {sizes[-1]}")
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    config = _load_experiment(args)
    if not isinstance(config.env, SchedulerEnv):
        raise ValidationError("simulate requires env.type 'scheduler'")
    out = _out_dir(config)
    runtime = prepare_runtime(config)
    seeds = [derive_seed(config.seed, STREAM_TRIAL, 0, i) for i in range(config.n_cal)]
    m, rewards = risk_reward_matrix(config.env.cfg, runtime.grid, seeds,
                                    workers=config.workers)
    write_values_csv(out / "rewards.csv", rewards, runtime.grid.ids)
    write_risk_matrix(out / "risks.csv", out / "manifest.json", m, runtime.grid,
                      rewards_csv=str(out / "rewards.csv"))
    if not args.quiet:
        print(f"simulated {m.n} episodes x {m.n_points} candidates")
        print(f"wrote {out / 'risks.csv'}, {out / 'manifest.json'}, {out / 'rewards.csv'}")
    return EXIT_OK


def _cmd_report(args) -> int:
    if args.out is None:
        raise ValidationError("report requires --out")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    wrote_any = False

    results = {}
    for key, path in (("mean", args.ltt_result), ("quantile", args.qltt_result)):
        if path is not None:
            res = load_result(path)
            if res.spec.method != key:
                raise ValidationError(
                    f"{path}: expected a {key}-method result, got {res.spec.method}"
                )
            results[key] = res
    missing = [k for k in ("mean", "quantile") if k not in results]
    if results and args.test_csv:
        if args.test_manifest is None:
            raise ValidationError("--test-csv requires --test-manifest")
        test_m, test_grid, _ = load_risk_matrix(args.test_csv, args.test_manifest)
        ref = results.get("quantile") or results["mean"]
        alpha = args.alpha if args.alpha is not None else ref.spec.alpha
        q = args.q if args.q is not None else (ref.spec.q or 0.1)
        write_histogram_csv(out / "histogram.csv", results, test_m, test_grid, alpha, q)
        wrote_any = True
        if missing and not args.quiet:
            print(f"warning: no result for method(s) {missing}; histogram is partial",
                  file=sys.stderr)
        if not args.quiet:
            print(f"wrote {out / 'histogram.csv'}")

    if args.coverage:
        reports = [CoverageReport.from_dict(read_json(p)) for p in args.coverage]
        alpha = args.alpha if args.alpha is not None else reports[0].spec.alpha
        write_violin_csv(out / "violin.csv", reports, alpha)
        wrote_any = True
        if not args.quiet:
            print(f"wrote {out / 'violin.csv'}")

    if not wrote_any:
        if not args.quiet:
            print("warning: nothing to report (no inputs given)", file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "calibrate": _cmd_calibrate,
        "coverage": _cmd_coverage,
        "simulate": _cmd_simulate,
        "report": _cmd_report,
    }
    try:
        return handlers[args.command](args)
    except (FileNotFoundError, OSError, ParseError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ValidationError, RiskControlError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
