"""
Range sensors on the plane.

At each step three sensors of the field are active and report their
Euclidean distance to the target position. The linear position model is a
measurement stub with the same output size, used where an exact Kalman
oracle is needed.
"""

import logging
from enum import Enum
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from core.errors import DimensionMismatch
from filters.models import MeasurementModel
from gaussian.belief import as_vector
from tracking.cv_model import POSITION_INDEX, STATE_DIM


logger = logging.getLogger(__name__)


ACTIVE_SENSORS = 3


class ActiveRule(str, Enum):
    """Rule selecting the active sensors at each step."""

    NEAREST = "nearest"
    ROUND_ROBIN = "round_robin"


class SensorField(BaseModel):
    """Sensor coordinates and the activation rule."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    positions: List[Tuple[float, float]] = Field(description="Sensor (x, y) coordinates")
    active_rule: ActiveRule = Field(default=ActiveRule.NEAREST, description="Activation rule")

    @field_validator("positions")
    @classmethod
    def _enough_sensors(cls, value):
        if len(value) < ACTIVE_SENSORS:
            raise ValueError(f"At least {ACTIVE_SENSORS} sensors are required, got {len(value)}")
        return value

    @classmethod
    def grid(cls, per_side: int = 3, extent: float = 50.0, active_rule: ActiveRule = ActiveRule.NEAREST) -> "SensorField":
        """Uniform per_side x per_side grid over [-extent, extent]^2."""
        ticks = np.linspace(-extent, extent, per_side)
        positions = [(float(x), float(y)) for y in ticks for x in ticks]
        return cls(positions=positions, active_rule=active_rule)

    def coordinates(self) -> np.ndarray:
        return np.asarray(self.positions, dtype=float)

    def select(self, state: np.ndarray, t: int) -> np.ndarray:
        """
        Indices of the three active sensors at step ``t``.

        ``nearest`` picks the three closest to the state's position (ties
        broken by index); ``round_robin`` cycles through the field.
        """
        n_sensors = len(self.positions)
        if self.active_rule == ActiveRule.ROUND_ROBIN:
            return (ACTIVE_SENSORS * t + np.arange(ACTIVE_SENSORS)) % n_sensors

        position = as_vector(state)[POSITION_INDEX]
        distances = np.linalg.norm(self.coordinates() - position, axis=1)
        return np.argsort(distances, kind="stable")[:ACTIVE_SENSORS]


def range_sensor_model(
    sensor_xy: np.ndarray,
    noise_cov: np.ndarray,
    position_index: Sequence[int] = POSITION_INDEX,
    state_dim: int = STATE_DIM
) -> MeasurementModel:
    """
    Distances from the position components to fixed sensors.

    The Jacobian row of a sensor at zero distance is zero.

    Args:
        sensor_xy: (m, 2) sensor coordinates
        noise_cov: (m, m) measurement noise covariance
        position_index: State components holding the planar position
        state_dim: State dimension

    Returns:
        MeasurementModel over the state
    """
    position_index = list(position_index)
    sensor_xy = np.atleast_2d(np.asarray(sensor_xy, dtype=float))
    if sensor_xy.shape[1] != 2:
        raise DimensionMismatch(f"Sensor coordinates must be (m, 2), got {sensor_xy.shape}")

    def offsets(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x[..., position_index][..., None, :] - sensor_xy

    def observe(x: np.ndarray) -> np.ndarray:
        return np.linalg.norm(offsets(x), axis=-1)

    def jacobian(x: np.ndarray) -> np.ndarray:
        diff = offsets(x)
        distance = np.linalg.norm(diff, axis=-1, keepdims=True)
        direction = np.divide(diff, distance, out=np.zeros_like(diff), where=distance > 0.0)
        jac = np.zeros(diff.shape[:-1] + (state_dim,))
        jac[..., position_index] = direction
        return jac

    return MeasurementModel(h=observe, jacobian_h=jacobian, noise_cov=noise_cov)


def linear_position_model(noise_cov: np.ndarray) -> MeasurementModel:
    """Linear stub observing px, py and (px + py) / sqrt(2)."""
    diagonal = 1.0 / np.sqrt(2.0)
    H = np.array([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [diagonal, 0.0, diagonal, 0.0]
    ])
    return MeasurementModel.linear(H, noise_cov)


class Measurement(NamedTuple):
    """One synthesized observation with the model the filters should use."""

    y: np.ndarray
    active_ids: np.ndarray
    model: MeasurementModel


def measure(
    state: np.ndarray,
    sensors: SensorField,
    t: int,
    noise_cov: np.ndarray,
    rng: Optional[np.random.Generator] = None,
    linear: bool = False
) -> Measurement:
    """
    Synthesize the observation of ``state`` at step ``t``.

    Args:
        state: True state (4,)
        sensors: Sensor field
        t: Step index, used by the round-robin rule
        noise_cov: (3, 3) measurement noise covariance
        rng: Noise stream; None gives a noiseless observation
        linear: Use the linear position stub instead of range sensors

    Returns:
        Measurement with y, the active sensor ids and the noiseless model
    """
    state = as_vector(state)
    active_ids = sensors.select(state, t)
    if linear:
        model = linear_position_model(noise_cov)
    else:
        model = range_sensor_model(sensors.coordinates()[active_ids], noise_cov)

    y = as_vector(model.h(state))
    if rng is not None:
        y = y + rng.multivariate_normal(np.zeros(model.obs_dim), model.noise_cov)
    return Measurement(y=y, active_ids=active_ids, model=model)
