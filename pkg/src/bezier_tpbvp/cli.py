"""Command-line entry point: ``bezier-tpbvp {guess,shoot,suite,export,catalog}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import harness
from .errors import BvpError, ConfigError
from .orbit import builtin_catalog

log = logging.getLogger("bezier_tpbvp")

EXIT_OK, EXIT_CONFIG, EXIT_UNCONVERGED = 0, 1, 2


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--rtol", type=float, help="integrator relative tolerance")
    common.add_argument("--atol", type=float, help="integrator absolute tolerance")
    common.add_argument("--quad-nodes", type=int, help="Gauss-Legendre node count")
    common.add_argument("--seedless", action="store_true",
                        help="accepted for compatibility; runs are deterministic")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="bezier-tpbvp",
        description="Bezier-curve initial guesses for shooting on two-point boundary value problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("guess", parents=[common], help="print the Bezier initial guess")
    p.add_argument("case")

    p = sub.add_parser("shoot", parents=[common], help="guess then shoot one case")
    p.add_argument("case")
    p.add_argument("--method", choices=harness.METHODS, default="proposed")

    p = sub.add_parser("suite", parents=[common], help="run all cases under both methods")
    p.add_argument("--out", default="results", help="output directory for reports")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")

    p = sub.add_parser("export", parents=[common], help="write trajectory samples as CSV")
    p.add_argument("case")
    p.add_argument("--source", choices=["bezier", "integrated"], default="bezier")
    p.add_argument("--samples", type=int, default=101)
    p.add_argument("--output", "-o", help="CSV path (default: <case>_<source>.csv)")

    sub.add_parser("catalog", parents=[common], help="print the built-in orbit cases as JSON")
    return parser


def _config(args) -> harness.HarnessConfig:
    config = harness.load_config(args.config) if args.config else harness.HarnessConfig()
    if args.rtol is not None:
        config.integrator.rtol = args.rtol
    if args.atol is not None:
        config.integrator.atol = args.atol
    if args.quad_nodes is not None:
        if args.quad_nodes < 2:
            raise ConfigError("--quad-nodes must be >= 2")
        config.quad_nodes = args.quad_nodes
    if config.integrator.rtol <= 0 or config.integrator.atol <= 0:
        raise ConfigError("integrator tolerances must be positive")
    return config


def _fmt(vec) -> str:
    return "(" + ", ".join(f"{v:.6f}" for v in np.atleast_1d(vec)) + ")"


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        config = _config(args)
        if args.command == "catalog":
            catalog = config.catalog if args.config else builtin_catalog()
            print(catalog.to_json())
            return EXIT_OK

        if args.command == "guess":
            result, guess = harness.bezier_guess(args.case, config)
            print(f"case {args.case}: t_1={result.t_1:.6f} x_1={_fmt(result.x_1)} "
                  f"L_min={result.L_min:.6e} evals={result.optimizer_evals} converged={result.converged}")
            print(f"initial derivative guess: {_fmt(guess)}")
            return EXIT_OK if result.converged else EXIT_UNCONVERGED

        if args.command == "shoot":
            report = harness.run_case(args.case, args.method, config)
            print(harness.format_table([report]))
            if report.failure:
                print(f"note: {report.failure}")
            return EXIT_OK if report.converged else EXIT_UNCONVERGED

        if args.command == "suite":
            reports = harness.run_suite(config, jobs=args.jobs)
            paths = harness.write_reports(reports, args.out)
            print(harness.format_table(reports))
            print(json.dumps(harness.summary_rows(reports), indent=1))
            log.info("wrote %s", ", ".join(str(p) for p in paths.values()))
            return EXIT_UNCONVERGED if harness.any_unconverged(reports) else EXIT_OK

        if args.command == "export":
            path = args.output or f"{args.case}_{args.source}.csv"
            rows = harness.export_trajectory(args.case, args.source, args.samples, config, path)
            print(f"wrote {len(rows)} rows to {path}")
            return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BvpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNCONVERGED
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
