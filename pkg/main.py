"""
Main entry point for the energy-function Kalman filter benchmark.

Subcommands:
    bench          Run the filter x assumed-Q grid and write rmse_table.csv
    gradcheck      Verify the energy gradients against finite differences
    energy-trace   Export the iteration trace of one EFKF measurement update
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from bench.commands import EXIT_USAGE, cmd_bench, cmd_energy_trace, cmd_gradcheck
from config import configure_logging, get_settings


logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subparser per command."""
    parser = argparse.ArgumentParser(
        prog="efkf",
        description="Alpha-divergence energy-function Kalman filter benchmark"
    )
    parser.add_argument("--log-level", default=None, help="Override EFKF_LOG_LEVEL (DEBUG, INFO, ...)")
    subparsers = parser.add_subparsers(dest="command", required=True)

    bench = subparsers.add_parser("bench", help="Run the RMSE benchmark grid")
    bench.add_argument("config", type=Path, help="YAML benchmark configuration")
    bench.add_argument("--workers", type=int, default=None, help="Worker threads (results do not depend on it)")
    bench.add_argument("--output-dir", type=Path, default=None, help="Override the configured output directory")

    gradcheck = subparsers.add_parser("gradcheck", help="Finite-difference check of the energy gradients")
    gradcheck.add_argument("--dims", type=int, nargs="+", default=[2, 4], help="State dimensions")
    gradcheck.add_argument("--trials", type=int, default=24, help="Number of random instances")
    gradcheck.add_argument("--seed", type=int, default=0, help="Instance seed")

    trace = subparsers.add_parser("energy-trace", help="Export energy_trace.csv for one EFKF update")
    trace.add_argument("config", type=Path, help="YAML benchmark configuration")
    trace.add_argument("--filter", dest="filter_id", default="ef_0.7", help="EFKF filter id ef_<alpha>")
    trace.add_argument("--run", type=int, default=0, help="Run index")
    trace.add_argument("--column", default=None, help="Assumed-Q column label (default: Q_CV)")
    trace.add_argument("--output-dir", type=Path, default=None, help="Override the configured output directory")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments and dispatch to the command.

    Returns:
        Process exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else 0

    configure_logging(get_settings(), level=args.log_level)

    if args.command == "bench":
        if args.workers is not None and args.workers < 1:
            logger.error("--workers must be at least 1")
            return EXIT_USAGE
        return cmd_bench(args.config, workers=args.workers, output_dir=args.output_dir)

    if args.command == "gradcheck":
        return cmd_gradcheck(dims=args.dims, trials=args.trials, seed=args.seed)

    return cmd_energy_trace(
        args.config,
        args.filter_id,
        run=args.run,
        column=args.column,
        output_dir=args.output_dir
    )


if __name__ == "__main__":
    sys.exit(main())
