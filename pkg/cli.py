#!/usr/bin/env python3
"""
Command line entry point

    python cli.py run input/case1.cfg [input/case2.cfg ...] [--out DIR]
    python cli.py plot output/case1.csv --kind velocity_error [--out FILE]
    python cli.py verify {matrices,plant,potential,lyapunov,all}

Exit status: 0 success, 2 usage, 3 scenario parse error, 4 validation or
unit error, 5 numerical divergence, 6 collision or barrier violation,
7 verification failure, 1 anything else.
"""

import argparse
import asyncio
import sys
from pathlib import Path
from typing import List, Optional

import structlog

from engine.orchestrator import PipelineConfig, SimulationPipeline, configure_logging
from engine.verification import SUITES, verify
from utils.errors import FlockingError, VerificationFailure
from utils.file_manager import SimLogFileManager
from utils.formatter import get_output_formatter
from utils.plotter import PLOT_KINDS, emit_plot, plot_data_from_frame

logger = structlog.get_logger("cli")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="flocksim",
                                     description="Leader-follower flocking of Euler-Lagrange agents")
    parser.add_argument("--log-level", default=None,
                        help="DEBUG, INFO, WARNING or ERROR (default: $FLOCKSIM_LOG_LEVEL or INFO)")
    parser.add_argument("--no-color", action="store_true", help="plain text reports")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="simulate one or more scenario files")
    run.add_argument("scenarios", nargs="+", help="scenario .cfg files")
    run.add_argument("--out", default=None, help="output directory (overrides [output] directory)")
    run.add_argument("--no-plots", action="store_true", help="skip the SVG plots")

    plot = commands.add_parser("plot", help="render an SVG plot from an emitted CSV log")
    plot.add_argument("log", help="CSV time series written by 'run'")
    plot.add_argument("--kind", required=True, choices=PLOT_KINDS)
    plot.add_argument("--out", default=None, help="SVG path (default: next to the log)")

    check = commands.add_parser("verify", help="run a property suite")
    check.add_argument("suite", choices=sorted(SUITES) + ["all"])
    return parser


def command_run(args, formatter) -> int:
    pipeline = SimulationPipeline(PipelineConfig(output_dir=args.out, write_plots=not args.no_plots))
    outcomes = asyncio.run(pipeline.run_batch(args.scenarios))
    status = 0
    for outcome in outcomes:
        if outcome.success:
            print(formatter.format_run_summary(outcome.name, outcome.summary, outcome.gain_report))
            for artifact in outcome.artifacts():
                print(f"  wrote {artifact}")
        else:
            print(f"error: {outcome.error}", file=sys.stderr)
            status = status or outcome.exit_code
    return status


def command_plot(args) -> int:
    files = SimLogFileManager()
    frame = files.read_log(args.log)
    manifest = files.read_manifest(args.log)
    log_path = Path(args.log)
    out = Path(args.out) if args.out else log_path.with_name(f"{log_path.stem}.{args.kind}.svg")
    data = plot_data_from_frame(frame, manifest, name=log_path.stem)
    print(emit_plot(data, out, args.kind))
    return 0


def command_verify(args, formatter) -> int:
    checks = verify(args.suite)
    print(formatter.format_verification_report(checks))
    failed = [check for check in checks if not check.passed]
    if failed:
        raise VerificationFailure(f"{len(failed)} of {len(checks)} checks failed")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    formatter = get_output_formatter(color=not args.no_color and sys.stdout.isatty())
    try:
        if args.command == "run":
            return command_run(args, formatter)
        if args.command == "plot":
            return command_plot(args)
        return command_verify(args, formatter)
    except FlockingError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception("unexpected failure", command=args.command)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
