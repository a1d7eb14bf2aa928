"""
Planar constant-velocity motion model.

The state is laid out as [px, vx, py, vy]; each axis evolves with the block
[[1, dt], [0, 1]] and is driven by white acceleration noise of intensity
sigma_cv.
"""

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.linalg import block_diag

from core.errors import DimensionMismatch


logger = logging.getLogger(__name__)


STATE_DIM = 4
POSITION_INDEX = [0, 2]


class CvModel(BaseModel):
    """Time step and process-noise intensity of the CV model."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    dt: float = Field(default=1.0, gt=0.0, description="Time step")
    sigma_cv: float = Field(default=1.0, ge=0.0, description="Process-noise intensity")

    def transition_matrix(self) -> np.ndarray:
        """4x4 block-diagonal F."""
        block = np.array([[1.0, self.dt], [0.0, 1.0]])
        return block_diag(block, block)

    def process_noise(self) -> np.ndarray:
        """4x4 block-diagonal Q (PSD, rank 2)."""
        dt = self.dt
        block = self.sigma_cv * np.array([
            [dt ** 4 / 4.0, dt ** 3 / 2.0],
            [dt ** 3 / 2.0, dt ** 2]
        ])
        return block_diag(block, block)


def simulate_trajectory(
    cv: CvModel,
    init_state: np.ndarray,
    horizon: int,
    rng: np.random.Generator
) -> np.ndarray:
    """
    Roll the linear-Gaussian dynamics forward from ``init_state``.

    Args:
        cv: Motion model
        init_state: State x_0 (4,)
        horizon: Number of steps T >= 1
        rng: Random stream for the process noise

    Returns:
        (T, 4) array of states x_1 ... x_T
    """
    state = np.asarray(init_state, dtype=float).reshape(-1)
    if state.size != STATE_DIM:
        raise DimensionMismatch(f"CV state must have {STATE_DIM} components, got {state.size}")
    if horizon < 1:
        raise ValueError(f"Horizon must be at least 1, got {horizon}")

    F = cv.transition_matrix()
    # Q is singular, eigh handles the rank deficiency
    noise = rng.multivariate_normal(np.zeros(STATE_DIM), cv.process_noise(), size=horizon, method="eigh")

    states = np.empty((horizon, STATE_DIM))
    for t in range(horizon):
        state = F @ state + noise[t]
        states[t] = state
    return states
