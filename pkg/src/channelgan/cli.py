"""Command line entry point.

Verbs:
    channelgan run CONFIG.ini [--out DIR] [--seed N]
    channelgan run --preset NAME [--out DIR] [--seed N]
    channelgan presets
    channelgan compare RUN_A RUN_B
"""

from __future__ import annotations

import argparse
import sys

from . import experiment
from .errors import ConfigError, TrainingDiverged


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="channelgan",
        description="Learn stochastic channel models p(y|x) with a conditional variational GAN.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train and evaluate one experiment")
    run.add_argument("config", nargs="?", help="experiment INI file")
    run.add_argument("--preset", help="built-in experiment name (see 'presets')")
    run.add_argument("--seed", type=int, help="override the master seed")
    run.add_argument("--out", help="output directory")

    sub.add_parser("presets", help="list built-in experiments")

    cmp = sub.add_parser("compare", help="compare two run reports side by side")
    cmp.add_argument("report_a", help="report.json or run directory")
    cmp.add_argument("report_b", help="report.json or run directory")
    return parser


def _cmd_run(args) -> int:
    if (args.config is None) == (args.preset is None):
        print("run: give exactly one of CONFIG or --preset", file=sys.stderr)
        return 2
    if args.preset is not None:
        config = experiment.get_preset(args.preset)
    else:
        config = experiment.parse_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    report, out = experiment.run_experiment(config, args.out)
    marg = report.summary["marginal"]
    print(f"{config.name}: wrote {out}")
    print(f"marginal JS = {marg['js']:.5f}, KL = {marg['kl']:.5f}")
    return 0


def _cmd_presets() -> int:
    for name in experiment.list_presets():
        print(name)
    return 0


def _cmd_compare(args) -> int:
    a = experiment.load_report(args.report_a)
    b = experiment.load_report(args.report_b)
    cmp = experiment.compare_runs(a, b)
    print(experiment.format_comparison(cmp))
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "presets":
            return _cmd_presets()
        if args.command == "compare":
            return _cmd_compare(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TrainingDiverged as exc:
        print(f"training diverged at {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
