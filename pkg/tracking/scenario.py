"""
Tracking experiment definition.

A scenario fixes the true motion model, the sensor field, the horizon, the
measurement noise, the initial belief and the sweep of process-noise
covariances assumed by the filters. The sweep holds the mismatch columns
scale * I followed by the true Q_CV (the match column).
"""

import logging
from dataclasses import dataclass, field
from typing import List, NamedTuple, Sequence

import numpy as np

from core.errors import ConfigError
from gaussian.belief import GaussianBelief, symmetrize
from tracking.cv_model import STATE_DIM, CvModel
from tracking.sensors import ACTIVE_SENSORS, SensorField


logger = logging.getLogger(__name__)


MISMATCH_SCALES = (0.01, 0.05, 0.1, 0.5)
MATCH_LABEL = "Q_CV"


class AssumedQ(NamedTuple):
    """One column of the benchmark table."""

    label: str
    matrix: np.ndarray


def mismatch_label(scale: float) -> str:
    return f"{scale:g}xI"


def assumed_q_columns(cv: CvModel, scales: Sequence[float] = MISMATCH_SCALES, include_match: bool = True) -> List[AssumedQ]:
    """Mismatch columns scale * I in order, then the true Q_CV."""
    columns = [AssumedQ(mismatch_label(scale), scale * np.eye(STATE_DIM)) for scale in scales]
    if include_match:
        columns.append(AssumedQ(MATCH_LABEL, cv.process_noise()))
    return columns


@dataclass(frozen=True, eq=False)
class Scenario:
    """
    Full definition of one tracking benchmark.

    Attributes:
        cv: True motion model (simulation always uses its Q)
        sensors: Sensor field
        horizon: Steps T per run
        meas_noise: (3, 3) measurement noise covariance R
        assumed_q: Columns of assumed process-noise covariances
        n_runs: Monte-Carlo runs per cell
        seed: Master seed of every random stream
        init_belief: Initial belief; its mean is the true initial state
        linear_measurements: Replace range sensors with the linear stub
    """

    cv: CvModel = field(default_factory=CvModel)
    sensors: SensorField = field(default_factory=SensorField.grid)
    horizon: int = 30
    meas_noise: np.ndarray = field(default_factory=lambda: np.eye(ACTIVE_SENSORS))
    assumed_q: List[AssumedQ] = field(default_factory=list)
    n_runs: int = 100
    seed: int = 0
    init_belief: GaussianBelief = field(
        default_factory=lambda: GaussianBelief(np.zeros(STATE_DIM), 10.0 * np.eye(STATE_DIM))
    )
    linear_measurements: bool = False

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigError(f"horizon must be at least 1, got {self.horizon}")
        if self.n_runs < 1:
            raise ConfigError(f"n_runs must be at least 1, got {self.n_runs}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if self.init_belief.dim != STATE_DIM:
            raise ConfigError(f"Initial belief must be {STATE_DIM}-dimensional")

        meas_noise = symmetrize(self.meas_noise)
        if meas_noise.shape != (ACTIVE_SENSORS, ACTIVE_SENSORS):
            raise ConfigError(f"Measurement noise must be {ACTIVE_SENSORS}x{ACTIVE_SENSORS}, got {meas_noise.shape}")
        if np.any(np.linalg.eigvalsh(meas_noise) <= 0.0):
            raise ConfigError("Measurement noise covariance must be positive definite")
        object.__setattr__(self, "meas_noise", meas_noise)

        assumed_q = list(self.assumed_q) or assumed_q_columns(self.cv)
        for column in assumed_q:
            matrix = symmetrize(column.matrix)
            if matrix.shape != (STATE_DIM, STATE_DIM):
                raise ConfigError(f"Assumed Q '{column.label}' must be {STATE_DIM}x{STATE_DIM}")
            if np.min(np.linalg.eigvalsh(matrix)) < -1e-12:
                raise ConfigError(f"Assumed Q '{column.label}' is not positive semidefinite")
        labels = [column.label for column in assumed_q]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"Duplicate assumed-Q labels: {labels}")
        object.__setattr__(self, "assumed_q", assumed_q)

    @property
    def true_q(self) -> np.ndarray:
        return self.cv.process_noise()

    @property
    def column_labels(self) -> List[str]:
        return [column.label for column in self.assumed_q]

    def column(self, label: str) -> AssumedQ:
        for column in self.assumed_q:
            if column.label == label:
                return column
        raise ConfigError(f"Unknown assumed-Q column '{label}'; known: {self.column_labels}")
