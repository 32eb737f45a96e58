"""Command-line entry point: one subcommand per experiment suite.

Usage:

    triggerlab <suite> [--config FILE] [--seed N] [--replicates N]
               [--set key=value ...] [--out results.csv] [--plot chart.svg]

Precedence: suite defaults < config file < --seed/--replicates/--set.
The exit code is 0 iff every pass/fail flag in the emitted rows passed.
Relative --out/--plot paths are resolved against $TRIGGERLAB_OUT_DIR when
that variable is set.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from triggerlab.errors import TriggerLabError
from triggerlab.expcli.config import (
    SUITE_PARAMS,
    ExperimentConfig,
    apply_overrides,
    default_config,
    parse_config,
)
from triggerlab.expcli.plotting import emit_plot
from triggerlab.expcli.rows import all_passed, rows_to_csv
from triggerlab.expcli.suites import PLOT_X, regime_report_text, run_suite

OUT_DIR_ENV = "TRIGGERLAB_OUT_DIR"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triggerlab",
        description="Run latent-trigger evaluation experiment suites.",
    )
    sub = parser.add_subparsers(dest="suite", required=True)
    for suite, spec in SUITE_PARAMS.items():
        keys = ", ".join(spec)
        sp = sub.add_parser(suite, help=f"parameters: {keys}")
        sp.add_argument("--config", type=str, default=None,
                        help="config file (single [suite] section)")
        sp.add_argument("--seed", type=int, default=None, help="64-bit seed")
        sp.add_argument("--replicates", type=int, default=None)
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one suite parameter")
        sp.add_argument("--out", type=str, default=None, help="CSV output path")
        sp.add_argument("--plot", type=str, default=None, help="SVG output path")
    return parser


def _resolve(path: str) -> Path:
    base = os.environ.get(OUT_DIR_ENV)
    p = Path(path)
    if base and not p.is_absolute():
        return Path(base) / p
    return p


def load_config(args) -> ExperimentConfig:
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = parse_config(fh.read())
        if cfg.experiment != args.suite:
            raise TriggerLabError(
                f"config file is for suite {cfg.experiment!r}, not {args.suite!r}"
            )
    else:
        cfg = default_config(args.suite)
    overrides = list(args.set)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.replicates is not None:
        overrides.append(f"replicates={args.replicates}")
    return apply_overrides(cfg, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        rows = run_suite(cfg)
    except TriggerLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    csv_text = rows_to_csv(rows)
    if args.out:
        out = _resolve(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(csv_text, encoding="utf-8")
        print(f"wrote {out}")
    else:
        sys.stdout.write(csv_text)

    if args.plot:
        try:
            svg = emit_plot(rows, PLOT_X[cfg.experiment],
                            title=f"{cfg.experiment} (seed {cfg.seed})")
        except TriggerLabError as exc:
            print(f"plot error: {exc}", file=sys.stderr)
            return 2
        plot = _resolve(args.plot)
        plot.parent.mkdir(parents=True, exist_ok=True)
        plot.write_text(svg, encoding="utf-8")
        print(f"wrote {plot}")

    if cfg.experiment == "regime_report":
        print(regime_report_text(cfg))

    checked = [r for r in rows if r.passed is not None]
    n_pass = sum(1 for r in checked if r.passed)
    status = "PASS" if all_passed(rows) else "FAIL"
    print(f"{cfg.experiment}: {n_pass}/{len(checked)} checks passed [{status}]")
    return 0 if all_passed(rows) else 1


if __name__ == "__main__":
    raise SystemExit(main())
