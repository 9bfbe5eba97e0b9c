"""Command line entry point.

    volterra-sing <subcommand> --config FILE [--out DIR] [--seed N]
                  [--threads K] [--no-plots]

Subcommands map one-to-one onto experiments (the config's ``experiment``
field must agree) plus ``validate-config``.  Exit codes: 0 when every
verdict passes, 1 when any verdict fails, 2 on config or domain errors.
"""

from __future__ import annotations

import argparse
import sys

from .config import ConfigError, load_config
from .coefficients import CoefficientError
from .experiments import run_experiment
from .kernels import KernelError
from .reporting import write_report
from .stats import StatsError

SUBCOMMANDS = {
    "clt-rate": "clt_rate",
    "reg-rate": "regularization_rate",
    "ito-equiv": "ito_equivalence",
    "properties": "property_suite",
    "kernel-audit": "kernel_audit",
}

_DOMAIN_ERRORS = (ConfigError, KernelError, CoefficientError, StatsError, ValueError)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="volterra-sing",
        description="Experiments on singular stochastic Volterra equations",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in list(SUBCOMMANDS) + ["validate-config"]:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--threads", type=int, default=None, help="path-chunk worker threads")
        p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    overrides = {"out_dir": args.out, "seed": args.seed, "threads": args.threads}
    try:
        config = load_config(args.config, overrides)
        if args.command == "validate-config":
            import json

            print(json.dumps(config.to_dict(), indent=2, sort_keys=True))
            print(f"config_hash: {config.config_hash()}")
            return 0
        expected = SUBCOMMANDS[args.command]
        if config.experiment != expected:
            raise ConfigError(
                f"subcommand {args.command} expects experiment={expected!r}, "
                f"config says {config.experiment!r}"
            )
        report = run_experiment(config)
    except _DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    paths = write_report(report, config.out_dir, threads=config.threads,
                         figures=not args.no_plots)
    for v in report.verdicts:
        status = "PASS" if v.passed else "FAIL"
        print(f"[{status}] {v.name}: {v.measured}  ({v.threshold})")
    for note in report.notes:
        print(f"note: {note}")
    print(f"wrote {paths['measurements']}")
    return 0 if report.all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
