"""
Benchmark configuration schema.

A single YAML file per invocation configures the scenario, the filters and
their hyperparameters, and the outputs. Every level forbids unknown keys so
that typos are reported instead of silently ignored; absent keys take the
scenario defaults.
"""

import logging
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from core.errors import ConfigError
from gaussian.belief import GaussianBelief
from tracking.cv_model import STATE_DIM, CvModel
from tracking.filters import FilterSettings, validate_filter_id
from tracking.scenario import MATCH_LABEL, MISMATCH_SCALES, Scenario, assumed_q_columns, mismatch_label
from tracking.sensors import ACTIVE_SENSORS, ActiveRule, SensorField


logger = logging.getLogger(__name__)


DEFAULT_FILTERS = ["ef_0.01", "ef_0.1", "ef_0.3", "ef_0.5", "ef_0.7", "ekf", "ukf", "pf", "enkf"]


class _Strict(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class GridConfig(_Strict):
    """Uniform sensor grid."""

    per_side: int = Field(default=3, ge=2, description="Sensors per side")
    extent: float = Field(default=50.0, gt=0.0, description="Half-width of the covered square")


class SensorConfig(_Strict):
    """Explicit sensor positions, or a grid when positions are absent."""

    positions: Optional[List[Tuple[float, float]]] = Field(default=None, description="Sensor (x, y) coordinates")
    grid: GridConfig = Field(default_factory=GridConfig, description="Grid used when positions are absent")
    active_rule: ActiveRule = Field(default=ActiveRule.NEAREST, description="Activation rule")

    @field_validator("positions")
    @classmethod
    def _enough_sensors(cls, value):
        if value is not None and len(value) < ACTIVE_SENSORS:
            raise ValueError(f"at least {ACTIVE_SENSORS} sensors are required, got {len(value)}")
        return value

    def to_field(self) -> SensorField:
        if self.positions is not None:
            return SensorField(positions=self.positions, active_rule=self.active_rule)
        return SensorField.grid(self.grid.per_side, self.grid.extent, self.active_rule)


class PathsConfig(_Strict):
    """Which sample paths to export as paths_<filter>_<run>.csv."""

    enabled: bool = Field(default=False, description="Write sample paths")
    filters: List[str] = Field(default_factory=lambda: ["ekf", "pf", "ef_0.7"], description="Filters to export")
    runs: List[int] = Field(default_factory=lambda: list(range(8)), description="Run indices to export")
    column: str = Field(default=MATCH_LABEL, description="Assumed-Q column of the exported paths")


class OutputConfig(_Strict):
    """Output directory and formats."""

    directory: Path = Field(default=Path("results"), description="Directory receiving the CSV files")
    paths: PathsConfig = Field(default_factory=PathsConfig, description="Sample-path export")
    print_table: bool = Field(default=True, description="Print the RMSE table to standard output")


class BenchConfig(_Strict):
    """Complete benchmark configuration."""

    seed: int = Field(default=0, ge=0, lt=2 ** 64, description="Master seed")
    n_runs: int = Field(default=100, ge=1, description="Monte-Carlo runs per cell")
    horizon: int = Field(default=30, ge=1, description="Time steps T per run")
    workers: Optional[int] = Field(default=None, ge=1, description="Parallel workers (does not affect results)")
    cv: CvModel = Field(default_factory=CvModel, description="True motion model")
    sensors: SensorConfig = Field(default_factory=SensorConfig, description="Sensor field")
    measurement: str = Field(default="range", description="'range' sensors or the 'linear' position stub")
    measurement_noise: Union[List[float], List[List[float]]] = Field(
        default_factory=lambda: [1.0] * ACTIVE_SENSORS,
        description="Diagonal of R or the full 3x3 matrix"
    )
    init_state: List[float] = Field(default_factory=lambda: [0.0] * STATE_DIM, description="True initial state")
    init_cov_scale: float = Field(default=10.0, gt=0.0, description="Initial belief covariance scale * I")
    mismatch_scales: List[float] = Field(default_factory=lambda: list(MISMATCH_SCALES), description="Mismatch columns scale * I")
    include_match: bool = Field(default=True, description="Append the true Q_CV column")
    filters: List[str] = Field(default_factory=lambda: list(DEFAULT_FILTERS), description="Filters in row order")
    filter_settings: FilterSettings = Field(default_factory=FilterSettings, description="Per-family hyperparameters")
    output: OutputConfig = Field(default_factory=OutputConfig, description="Outputs")

    @field_validator("measurement")
    @classmethod
    def _measurement_kind(cls, value):
        if value not in ("range", "linear"):
            raise ValueError(f"measurement must be 'range' or 'linear', got '{value}'")
        return value

    @field_validator("init_state")
    @classmethod
    def _state_size(cls, value):
        if len(value) != STATE_DIM:
            raise ValueError(f"init_state must have {STATE_DIM} entries")
        return value

    @field_validator("mismatch_scales")
    @classmethod
    def _positive_scales(cls, value):
        if any(scale <= 0.0 for scale in value):
            raise ValueError("mismatch scales must be positive")
        return value

    @field_validator("filters")
    @classmethod
    def _known_filters(cls, value):
        if not value:
            raise ValueError("at least one filter is required")
        if len(set(value)) != len(value):
            raise ValueError(f"duplicate filter ids in {value}")
        for filter_id in value:
            try:
                validate_filter_id(filter_id)
            except ConfigError as e:
                raise ValueError(str(e)) from e
        return value

    @model_validator(mode="after")
    def _has_columns(self):
        if not self.mismatch_scales and not self.include_match:
            raise ValueError("no assumed-Q columns: give mismatch_scales or include_match")
        if "kalman" in self.filters and self.measurement != "linear":
            raise ValueError("the kalman filter requires measurement: linear")

        paths = self.output.paths
        if paths.enabled:
            unknown = [filter_id for filter_id in paths.filters if filter_id not in self.filters]
            if unknown:
                raise ValueError(f"path filters {unknown} are not in filters")
            labels = [mismatch_label(scale) for scale in self.mismatch_scales]
            if self.include_match:
                labels.append(MATCH_LABEL)
            if paths.column not in labels:
                raise ValueError(f"path column '{paths.column}' is not one of {labels}")
        return self

    def noise_matrix(self) -> np.ndarray:
        noise = np.asarray(self.measurement_noise, dtype=float)
        if noise.ndim == 1:
            if noise.size != ACTIVE_SENSORS:
                raise ConfigError(f"measurement_noise diagonal must have {ACTIVE_SENSORS} entries")
            return np.diag(noise)
        return noise

    def to_scenario(self) -> Scenario:
        """
        Build the Scenario described by this configuration.

        Raises:
            ConfigError: If the scenario invariants fail
        """
        return Scenario(
            cv=self.cv,
            sensors=self.sensors.to_field(),
            horizon=self.horizon,
            meas_noise=self.noise_matrix(),
            assumed_q=assumed_q_columns(self.cv, self.mismatch_scales, self.include_match),
            n_runs=self.n_runs,
            seed=self.seed,
            init_belief=GaussianBelief(np.asarray(self.init_state), self.init_cov_scale * np.eye(STATE_DIM)),
            linear_measurements=self.measurement == "linear"
        )


def load_bench_config(path: Union[str, Path]) -> BenchConfig:
    """
    Parse a YAML benchmark configuration.

    Args:
        path: Configuration file

    Returns:
        Validated BenchConfig

    Raises:
        ConfigError: If the file is unreadable, not YAML, or fails validation
    """
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except OSError as e:
        raise ConfigError(f"Cannot read config {path}: {e}", details={"path": str(path)}) from e
    except yaml.YAMLError as e:
        raise ConfigError(f"Invalid YAML in {path}: {e}", details={"path": str(path)}) from e

    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"Config {path} must be a mapping at the top level")

    try:
        config = BenchConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"Invalid config {path}: {e}", details={"errors": e.errors()}) from e

    logger.info(f"Loaded bench config from {path}: {len(config.filters)} filters, {config.n_runs} runs")
    return config
