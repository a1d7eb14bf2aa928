"""
Monte-Carlo execution of the tracking benchmark.

Each run simulates one true trajectory with the true Q_CV and one
measurement stream; the streams depend only on (seed, run), so every filter
and every assumed-Q column consumes identical data. Filters get their own
stream derived from (seed, run, column, filter). Runs whose filter raises a
FilterError are recorded and excluded from the cell statistics.

The grid of (filter, column, run) tasks is fanned out on a thread pool from
asyncio and reassembled in grid order, so results do not depend on the
number of workers.
"""

import asyncio
import functools
import hashlib
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.errors import FilterError, NonFinite
from tracking.cv_model import POSITION_INDEX, simulate_trajectory
from tracking.filters import FilterSettings, TrackingFilter, build_filter, validate_filter_id
from tracking.scenario import AssumedQ, Scenario
from tracking.sensors import Measurement, measure


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SimulatedRun:
    """True states x_1 ... x_T and the measurement of each."""

    run: int
    truth: np.ndarray
    measurements: List[Measurement]
    digest: str


@dataclass(eq=False)
class RunOutcome:
    """Result of one filter on one (column, run)."""

    filter_id: str
    label: str
    run: int
    digest: str
    rmse: Optional[float] = None
    estimates: Optional[np.ndarray] = None
    error_type: Optional[str] = None
    error_message: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error_type is not None


@dataclass(eq=False)
class CellResult:
    """RMSE statistics of one (filter, column) cell."""

    filter_id: str
    label: str
    outcomes: List[RunOutcome] = field(default_factory=list)

    @property
    def rmses(self) -> np.ndarray:
        return np.array([outcome.rmse for outcome in self.outcomes if not outcome.failed])

    @property
    def n_failed(self) -> int:
        return sum(1 for outcome in self.outcomes if outcome.failed)

    @property
    def all_failed(self) -> bool:
        return bool(self.outcomes) and self.n_failed == len(self.outcomes)

    @property
    def mean_rmse(self) -> float:
        rmses = self.rmses
        return float(np.mean(rmses)) if rmses.size else math.nan

    @property
    def stderr_rmse(self) -> float:
        rmses = self.rmses
        if rmses.size < 2:
            return 0.0 if rmses.size else math.nan
        return float(np.std(rmses, ddof=1) / math.sqrt(rmses.size))


@dataclass(eq=False)
class RunResult:
    """
    Benchmark grid: filters x assumed-Q columns.

    Attributes:
        filter_ids: Row order
        labels: Column order
        cells: Cell results keyed by (filter_id, label)
        runs: Simulated truth and measurements per run index
    """

    filter_ids: List[str]
    labels: List[str]
    cells: Dict[Tuple[str, str], CellResult] = field(default_factory=dict)
    runs: Dict[int, SimulatedRun] = field(default_factory=dict)

    def cell(self, filter_id: str, label: str) -> CellResult:
        return self.cells[(filter_id, label)]

    def ordered_cells(self) -> List[CellResult]:
        """Cells row by row in filter order, then column order."""
        return [self.cells[(filter_id, label)] for filter_id in self.filter_ids for label in self.labels]

    @property
    def failures(self) -> List[RunOutcome]:
        return [outcome for cell in self.ordered_cells() for outcome in cell.outcomes if outcome.failed]


def _stream_key(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "little")


def run_stream(scenario: Scenario, run: int) -> np.random.Generator:
    """Stream shared by all filters for the truth and measurements of a run."""
    return np.random.default_rng(np.random.SeedSequence([scenario.seed, run]))


def filter_stream(scenario: Scenario, run: int, label: str, filter_id: str) -> np.random.Generator:
    """Private stream of one filter on one (column, run)."""
    entropy = [scenario.seed, run, _stream_key(label), _stream_key(filter_id)]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def trajectory_digest(truth: np.ndarray, measurements: Sequence[Measurement]) -> str:
    """SHA-256 over the true states, observations and active sensor ids."""
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(truth, dtype=np.float64).tobytes())
    for item in measurements:
        digest.update(np.ascontiguousarray(item.y, dtype=np.float64).tobytes())
        digest.update(np.ascontiguousarray(item.active_ids, dtype=np.int64).tobytes())
    return digest.hexdigest()


def simulate_run(scenario: Scenario, run: int) -> SimulatedRun:
    """Simulate the true trajectory and the measurement stream of one run."""
    rng = run_stream(scenario, run)
    truth = simulate_trajectory(scenario.cv, scenario.init_belief.mean, scenario.horizon, rng)
    measurements = [
        measure(state, scenario.sensors, t, scenario.meas_noise, rng, linear=scenario.linear_measurements)
        for t, state in enumerate(truth)
    ]
    return SimulatedRun(run=run, truth=truth, measurements=measurements, digest=trajectory_digest(truth, measurements))


def position_rmse(truth: np.ndarray, estimates: np.ndarray) -> float:
    """sqrt of the mean squared position error over all steps."""
    error = np.asarray(estimates)[:, POSITION_INDEX] - np.asarray(truth)[:, POSITION_INDEX]
    return float(np.sqrt(np.mean(np.sum(error ** 2, axis=1))))


def start_filter(
    filter_id: str,
    scenario: Scenario,
    label: str,
    run: int,
    settings: Optional[FilterSettings] = None
) -> TrackingFilter:
    """Build a filter and initialize it with its private stream."""
    tracker = build_filter(filter_id, settings)
    tracker.initialize(scenario.init_belief, filter_stream(scenario, run, label, filter_id))
    return tracker


def run_single(
    filter_id: str,
    scenario: Scenario,
    column: AssumedQ,
    simulated: SimulatedRun,
    settings: Optional[FilterSettings] = None
) -> RunOutcome:
    """
    Filter one simulated run with the assumed Q of ``column``.

    Failures are returned in the outcome, never raised.
    """
    outcome = RunOutcome(filter_id=filter_id, label=column.label, run=simulated.run, digest=simulated.digest)
    F = scenario.cv.transition_matrix()

    try:
        tracker = start_filter(filter_id, scenario, column.label, simulated.run, settings)
        estimates = np.array([
            tracker.step(F, column.matrix, item.y, item.model) for item in simulated.measurements
        ])
        if not np.all(np.isfinite(estimates)):
            raise NonFinite("Filter produced non-finite state estimates")
    except FilterError as e:
        logger.warning(
            f"Run {simulated.run} of {filter_id} [{column.label}] excluded: {e.error_type}: {e}"
        )
        outcome.error_type = e.error_type
        outcome.error_message = str(e)
        return outcome

    outcome.estimates = estimates
    outcome.rmse = position_rmse(simulated.truth, estimates)
    return outcome


def run_filter_on_scenario(
    filter_id: str,
    scenario: Scenario,
    assumed_q: AssumedQ,
    settings: Optional[FilterSettings] = None
) -> CellResult:
    """
    All runs of one filter against one assumed-Q column.

    Returns:
        CellResult with per-run outcomes, mean RMSE and standard error
    """
    validate_filter_id(filter_id)
    cell = CellResult(filter_id=filter_id, label=assumed_q.label)
    for run in range(scenario.n_runs):
        cell.outcomes.append(run_single(filter_id, scenario, assumed_q, simulate_run(scenario, run), settings))
    return cell


async def benchmark_table_async(
    scenario: Scenario,
    filter_ids: Sequence[str],
    settings: Optional[FilterSettings] = None,
    workers: int = 1
) -> RunResult:
    """
    Full grid of filters x assumed-Q columns.

    Args:
        scenario: Benchmark definition
        filter_ids: Filters in row order
        settings: Filter hyperparameters
        workers: Thread-pool size

    Returns:
        RunResult with cells in deterministic order
    """
    filter_ids = [validate_filter_id(filter_id) for filter_id in filter_ids]
    result = RunResult(filter_ids=filter_ids, labels=scenario.column_labels)
    logger.info(
        f"Benchmark: {len(filter_ids)} filters x {len(result.labels)} columns x {scenario.n_runs} runs "
        f"(workers={workers})"
    )

    for run in range(scenario.n_runs):
        result.runs[run] = simulate_run(scenario, run)

    grid = [
        (filter_id, column, run)
        for filter_id in filter_ids
        for column in scenario.assumed_q
        for run in range(scenario.n_runs)
    ]

    loop = asyncio.get_running_loop()
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        tasks = [
            loop.run_in_executor(
                executor,
                functools.partial(run_single, filter_id, scenario, column, result.runs[run], settings)
            )
            for filter_id, column, run in grid
        ]
        outcomes = await asyncio.gather(*tasks)

    for outcome in outcomes:
        key = (outcome.filter_id, outcome.label)
        if key not in result.cells:
            result.cells[key] = CellResult(filter_id=outcome.filter_id, label=outcome.label)
        result.cells[key].outcomes.append(outcome)

    for cell in result.ordered_cells():
        logger.info(
            f"{cell.filter_id} [{cell.label}]: RMSE {cell.mean_rmse:.4f} +/- {cell.stderr_rmse:.4f} "
            f"({cell.n_failed} failed)"
        )
    return result


def benchmark_table(
    scenario: Scenario,
    filter_ids: Sequence[str],
    settings: Optional[FilterSettings] = None,
    workers: int = 1
) -> RunResult:
    """Synchronous wrapper around ``benchmark_table_async``."""
    return asyncio.run(benchmark_table_async(scenario, filter_ids, settings, workers))
