"""
Command implementations behind the CLI.

Each command returns a process exit code: 0 on success, 1 when the
gradient check fails, 2 for usage or configuration errors and 3 when a
benchmark cell failed in every run or an energy trace could not be
produced.
"""

import logging
import sys
from pathlib import Path
from typing import Optional, Sequence, TextIO

import pandas as pd

from bench.artifact_store import ArtifactStore
from bench.gradcheck import COV_TOLERANCE, MEAN_TOLERANCE, GradientFn, run_gradcheck
from bench.schemas import BenchConfig, load_bench_config
from config import get_settings
from core.errors import ConfigError, FilterError
from filters.energy import energy_gradients
from tracking.filters import parse_ef_alpha
from tracking.runner import RunResult, benchmark_table, simulate_run, start_filter
from tracking.scenario import MATCH_LABEL, Scenario


logger = logging.getLogger(__name__)


EXIT_OK = 0
EXIT_GRADCHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_FILTER_FAILED = 3


def _diagnostic(message: str) -> None:
    logger.error(message)
    print(f"error: {message}", file=sys.stderr)


def _load(config_path: Path) -> Optional[BenchConfig]:
    try:
        return load_bench_config(config_path)
    except ConfigError as e:
        _diagnostic(str(e))
        return None


def rmse_rows(result: RunResult) -> list:
    """Rows of rmse_table.csv in filter order, then column order."""
    return [
        {
            "filter": cell.filter_id,
            "assumed_q_label": cell.label,
            "mean_rmse": cell.mean_rmse,
            "stderr_rmse": cell.stderr_rmse,
            "n_failed_runs": cell.n_failed,
        }
        for cell in result.ordered_cells()
    ]


def _write_paths(store: ArtifactStore, config: BenchConfig, result: RunResult) -> None:
    paths = config.output.paths
    for filter_id in paths.filters:
        cell = result.cell(filter_id, paths.column)
        for outcome in cell.outcomes:
            if outcome.run not in paths.runs:
                continue
            if outcome.failed:
                logger.warning(f"No path for {filter_id} run {outcome.run}: {outcome.error_type}")
                continue
            truth = result.runs[outcome.run].truth
            frame = pd.DataFrame({
                "t": range(1, truth.shape[0] + 1),
                "true_px": truth[:, 0],
                "true_py": truth[:, 2],
                "est_px": outcome.estimates[:, 0],
                "est_py": outcome.estimates[:, 2],
            })
            store.store_path(filter_id, outcome.run, frame)


def cmd_bench(
    config_path: Path,
    workers: Optional[int] = None,
    output_dir: Optional[Path] = None,
    stdout: TextIO = sys.stdout
) -> int:
    """
    Run the benchmark grid and write rmse_table.csv (and sample paths).

    Args:
        config_path: YAML configuration
        workers: Override of the configured worker count
        output_dir: Override of the configured output directory
        stdout: Stream receiving the printed table

    Returns:
        Exit code
    """
    config = _load(config_path)
    if config is None:
        return EXIT_USAGE

    try:
        scenario = config.to_scenario()
    except FilterError as e:
        _diagnostic(f"Invalid scenario: {e}")
        return EXIT_USAGE

    workers = workers or config.workers or get_settings().DEFAULT_WORKERS
    result = benchmark_table(scenario, config.filters, config.filter_settings, workers)

    store = ArtifactStore(output_dir or config.output.directory)
    rows = rmse_rows(result)
    store.store_rmse_table(rows)
    if config.output.paths.enabled:
        _write_paths(store, config, result)

    if config.output.print_table:
        print(pd.DataFrame(rows).to_string(index=False), file=stdout)

    failed_cells = [cell for cell in result.ordered_cells() if cell.all_failed]
    for cell in failed_cells:
        errors = sorted({outcome.error_type for outcome in cell.outcomes})
        _diagnostic(f"All {len(cell.outcomes)} runs of {cell.filter_id} [{cell.label}] failed: {errors}")
    return EXIT_FILTER_FAILED if failed_cells else EXIT_OK


def cmd_gradcheck(
    dims: Sequence[int] = (2, 4),
    trials: int = 24,
    seed: int = 0,
    gradient_fn: GradientFn = energy_gradients,
    stdout: TextIO = sys.stdout
) -> int:
    """
    Finite-difference check of the energy gradients.

    Args:
        dims: State dimensions
        trials: Number of random instances, >= 1
        seed: Instance seed
        gradient_fn: Gradient under test
        stdout: Stream receiving the summary

    Returns:
        0 if every trial is within tolerance, 1 otherwise, 2 on bad usage
    """
    try:
        report = run_gradcheck(dims, trials, seed, gradient_fn)
    except ValueError as e:
        _diagnostic(str(e))
        return EXIT_USAGE

    print(
        f"gradcheck: {len(report.trials)} trials, "
        f"worst mean error {report.worst_mean_error:.3e} (tol {MEAN_TOLERANCE:g}), "
        f"worst cov error {report.worst_cov_error:.3e} (tol {COV_TOLERANCE:g})",
        file=stdout
    )
    for trial in report.trials:
        if not trial.passed:
            print(
                f"  FAIL d={trial.dim} alpha={trial.alpha} S={trial.samples}: "
                f"mean {trial.mean_error:.3e}, cov {trial.cov_error:.3e}",
                file=stdout
            )

    if report.passed:
        return EXIT_OK
    logger.error("Energy gradients disagree with finite differences")
    return EXIT_GRADCHECK_FAILED


def _trace_column(scenario: Scenario, label: Optional[str]):
    if label is not None:
        return scenario.column(label)
    if MATCH_LABEL in scenario.column_labels:
        return scenario.column(MATCH_LABEL)
    return scenario.assumed_q[0]


def cmd_energy_trace(
    config_path: Path,
    filter_id: str,
    run: int = 0,
    column: Optional[str] = None,
    output_dir: Optional[Path] = None
) -> int:
    """
    Export the energy trace of the first measurement update of one run.

    The filter sees exactly the stream it gets inside ``cmd_bench``.

    Args:
        config_path: YAML configuration
        filter_id: ``ef_<alpha>`` filter
        run: Run index
        column: Assumed-Q column label (match column by default)
        output_dir: Override of the configured output directory

    Returns:
        Exit code
    """
    config = _load(config_path)
    if config is None:
        return EXIT_USAGE

    try:
        if parse_ef_alpha(filter_id) is None:
            raise ConfigError(f"Energy traces need an ef_<alpha> filter, got '{filter_id}'")
        if not 0 <= run < config.n_runs:
            raise ConfigError(f"Run index {run} outside [0, {config.n_runs})")
        scenario = config.to_scenario()
        assumed = _trace_column(scenario, column)
    except FilterError as e:
        _diagnostic(str(e))
        return EXIT_USAGE

    simulated = simulate_run(scenario, run)
    first = simulated.measurements[0]
    try:
        tracker = start_filter(filter_id, scenario, assumed.label, run, config.filter_settings)
        tracker.step(scenario.cv.transition_matrix(), assumed.matrix, first.y, first.model)
    except FilterError as e:
        _diagnostic(f"EFKF update failed: {e.error_type}: {e}")
        return EXIT_FILTER_FAILED

    trace = tracker.traces[0]
    frame = pd.DataFrame({
        "iteration": range(len(trace)),
        "energy": trace.energies,
        "step_size": trace.step_sizes,
    })
    store = ArtifactStore(output_dir or config.output.directory)
    store.store_energy_trace(frame, metadata={"filter": filter_id, "run": run, "column": assumed.label})
    return EXIT_OK
