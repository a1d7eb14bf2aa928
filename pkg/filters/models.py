"""
Measurement models p(y | x) = N(y; h(x), R).

The observation function and its Jacobian must broadcast over leading axes:
``h`` maps (..., d) to (..., m) and ``jacobian_h`` maps (..., d) to
(..., m, d). Linear models are built with ``MeasurementModel.linear``.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from core.errors import DimensionMismatch, NonFinite
from gaussian.belief import CholeskyFactor, as_vector, cholesky, symmetrize
from gaussian.operations import LOG_2PI


logger = logging.getLogger(__name__)


ObservationFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class MeasurementModel:
    """
    Nonlinear Gaussian observation model.

    Attributes:
        h: Observation function, (..., d) -> (..., m)
        jacobian_h: Jacobian of h, (..., d) -> (..., m, d)
        noise_cov: Symmetric PD measurement noise covariance R, (m, m)
        H: Observation matrix when the model is linear, else None
    """

    h: ObservationFn
    jacobian_h: ObservationFn
    noise_cov: np.ndarray
    H: Optional[np.ndarray] = None
    _noise_factor: CholeskyFactor = field(init=False, repr=False)

    def __post_init__(self):
        noise_cov = symmetrize(self.noise_cov)
        object.__setattr__(self, "noise_cov", noise_cov)
        object.__setattr__(self, "_noise_factor", cholesky(noise_cov))
        if self.H is not None:
            H = np.atleast_2d(np.asarray(self.H, dtype=float))
            if H.shape[0] != noise_cov.shape[0]:
                raise DimensionMismatch(f"H has {H.shape[0]} rows but R is {noise_cov.shape}")
            object.__setattr__(self, "H", H)

    @classmethod
    def linear(cls, H: np.ndarray, noise_cov: np.ndarray) -> "MeasurementModel":
        """Build the linear model h(x) = H x."""
        H = np.atleast_2d(np.asarray(H, dtype=float))

        def observe(x: np.ndarray) -> np.ndarray:
            return np.asarray(x, dtype=float) @ H.T

        def jacobian(x: np.ndarray) -> np.ndarray:
            x = np.asarray(x, dtype=float)
            return np.broadcast_to(H, x.shape[:-1] + H.shape).copy()

        return cls(h=observe, jacobian_h=jacobian, noise_cov=noise_cov, H=H)

    @property
    def obs_dim(self) -> int:
        return self.noise_cov.shape[0]

    @property
    def is_linear(self) -> bool:
        return self.H is not None

    def noise_factor(self) -> CholeskyFactor:
        """Cholesky factor of R."""
        return self._noise_factor

    def log_likelihood(self, y: np.ndarray, points: np.ndarray) -> np.ndarray:
        """
        log N(y; h(x), R) for one point or a batch of points.

        Args:
            y: Observation (m,)
            points: State (d,) or states (S, d)

        Returns:
            Scalar or (S,) array

        Raises:
            NonFinite: If h returns NaN
        """
        y = as_vector(y)
        if y.size != self.obs_dim:
            raise DimensionMismatch(f"Observation of length {y.size} does not match R {self.noise_cov.shape}")
        points = np.asarray(points, dtype=float)
        predicted = np.atleast_2d(self.h(points))
        if np.any(np.isnan(predicted)):
            raise NonFinite("Observation function returned NaN")

        z = self._noise_factor.whiten((y - predicted).T)
        values = (
            -0.5 * self.obs_dim * LOG_2PI
            - 0.5 * self._noise_factor.log_det()
            - 0.5 * np.sum(z * z, axis=0)
        )
        if points.ndim == 1:
            return float(values[0])
        return values


def check_jacobian(model: MeasurementModel, x: np.ndarray, step: float = 1e-6) -> float:
    """
    Worst relative error between jacobian_h and central differences of h.

    Args:
        model: Measurement model to validate
        x: State at which to compare
        step: Finite-difference step

    Returns:
        Max over entries of |analytic - numeric| / max(1, |numeric|)
    """
    x = as_vector(x)
    analytic = np.asarray(model.jacobian_h(x), dtype=float)
    numeric = np.empty_like(analytic)
    for j in range(x.size):
        offset = np.zeros_like(x)
        offset[j] = step
        numeric[:, j] = (model.h(x + offset) - model.h(x - offset)) / (2.0 * step)

    error = np.abs(analytic - numeric) / np.maximum(1.0, np.abs(numeric))
    worst = float(np.max(error))
    logger.debug(f"Jacobian check at {x}: worst relative error {worst:.3e}")
    return worst
