"""
Unscented Kalman measurement update with the scaled sigma-point set.

With lam = spread^2 (d + kappa) - d, the 2d + 1 sigma points are
mu and mu +/- the columns of chol((d + lam) Sigma). Mean weights are
lam / (d + lam) for the centre and 1 / (2 (d + lam)) otherwise; the centre
covariance weight adds 1 - spread^2 + beta.
"""

import logging
from typing import Callable, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from core.errors import ConfigError
from filters.models import MeasurementModel
from gaussian.belief import GaussianBelief, as_vector, cholesky, symmetrize


logger = logging.getLogger(__name__)


class UkfParams(BaseModel):
    """Scaled unscented transform constants; kappa=None means 3 - d."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    spread: float = Field(default=0.5, gt=0.0, description="Sigma-point spread")
    beta: float = Field(default=2.0, description="Prior-distribution weight on the centre point")
    kappa: Optional[float] = Field(default=None, description="Secondary scaling; None selects 3 - d")

    def scaling(self, dim: int) -> float:
        """
        Scaling parameter lam for state dimension ``dim``.

        Raises:
            ConfigError: If d + lam is not positive
        """
        kappa = 3.0 - dim if self.kappa is None else self.kappa
        lam = self.spread ** 2 * (dim + kappa) - dim
        if dim + lam <= 0.0:
            raise ConfigError(
                f"Unscented scaling gives d + lambda = {dim + lam:g}, must be positive",
                details={"dim": dim, "spread": self.spread, "kappa": kappa}
            )
        return lam

    def weights(self, dim: int) -> Tuple[np.ndarray, np.ndarray]:
        """Mean and covariance weights of the 2d + 1 sigma points."""
        lam = self.scaling(dim)
        mean_weights = np.full(2 * dim + 1, 0.5 / (dim + lam))
        mean_weights[0] = lam / (dim + lam)
        cov_weights = mean_weights.copy()
        cov_weights[0] += 1.0 - self.spread ** 2 + self.beta
        return mean_weights, cov_weights


def sigma_points(belief: GaussianBelief, params: UkfParams) -> np.ndarray:
    """
    Sigma points of a belief.

    Returns:
        Array of shape (2d + 1, d); row 0 is the mean
    """
    dim = belief.dim
    lam = params.scaling(dim)
    offsets = np.sqrt(dim + lam) * belief.factor().lower.T
    return np.vstack([belief.mean, belief.mean + offsets, belief.mean - offsets])


def unscented_transform(
    belief: GaussianBelief,
    fn: Callable[[np.ndarray], np.ndarray],
    params: UkfParams
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Propagate a belief through ``fn`` with sigma points.

    Args:
        belief: Input belief
        fn: Map broadcasting over rows, (n, d) -> (n, m)
        params: Unscented transform constants

    Returns:
        Tuple of (mean (m,), covariance (m, m), cross-covariance (d, m))
    """
    points = sigma_points(belief, params)
    mean_weights, cov_weights = params.weights(belief.dim)

    images = np.atleast_2d(np.asarray(fn(points), dtype=float))
    if images.shape[0] != points.shape[0]:
        images = images.reshape(points.shape[0], -1)
    mean = mean_weights @ images

    image_dev = images - mean
    state_dev = points - belief.mean
    cov = symmetrize((cov_weights[:, None] * image_dev).T @ image_dev)
    cross = (cov_weights[:, None] * state_dev).T @ image_dev
    return mean, cov, cross


def ukf_update(
    prior: GaussianBelief,
    y: np.ndarray,
    model: MeasurementModel,
    params: Optional[UkfParams] = None
) -> GaussianBelief:
    """
    Unscented Kalman measurement update.

    Args:
        prior: Predicted belief
        y: Observation
        model: Measurement model
        params: Unscented constants (defaults when omitted)

    Returns:
        Posterior belief

    Raises:
        NotPositiveDefinite: If the innovation or posterior covariance is not PD
    """
    params = params or UkfParams()
    y = as_vector(y)
    predicted, obs_cov, cross = unscented_transform(prior, model.h, params)

    innovation_cov = obs_cov + model.noise_cov
    factor = cholesky(innovation_cov)
    gain = factor.solve(cross.T).T

    mean = prior.mean + gain @ (y - predicted)
    cov = prior.cov - gain @ innovation_cov @ gain.T
    return GaussianBelief(mean, cov)
