"""
Exact linear-Gaussian measurement update and its first-order extension.

The Kalman update is the closed-form oracle used throughout: the EKF, UKF,
particle and ensemble filters all reduce to it on linear models, and the
EFKF converges to it. The innovation covariance is always factorized, never
inverted.
"""

import logging
import math

import numpy as np

from core.errors import DimensionMismatch
from filters.models import MeasurementModel
from gaussian.belief import GaussianBelief, as_vector, cholesky, symmetrize
from gaussian.operations import LOG_2PI, log_alpha_integral


logger = logging.getLogger(__name__)


def _check_linear(prior: GaussianBelief, y: np.ndarray, H: np.ndarray, R: np.ndarray):
    y = as_vector(y)
    H = np.atleast_2d(np.asarray(H, dtype=float))
    R = symmetrize(R)
    if H.shape != (y.size, prior.dim) or R.shape != (y.size, y.size):
        raise DimensionMismatch(
            f"Inconsistent shapes: y {y.shape}, H {H.shape}, R {R.shape}, state dimension {prior.dim}",
            details={"y": y.shape, "H": H.shape, "R": R.shape, "dim": prior.dim}
        )
    return y, H, R


def _gain_update(prior: GaussianBelief, innovation: np.ndarray, H: np.ndarray, R: np.ndarray) -> GaussianBelief:
    cov = prior.cov
    innovation_factor = cholesky(H @ cov @ H.T + R)
    gain = innovation_factor.solve(H @ cov).T

    mean = prior.mean + gain @ innovation
    # Joseph form keeps the covariance symmetric PSD under rounding
    reduction = np.eye(prior.dim) - gain @ H
    posterior_cov = reduction @ cov @ reduction.T + gain @ R @ gain.T
    return GaussianBelief(mean, posterior_cov)


def kalman_update(prior: GaussianBelief, y: np.ndarray, H: np.ndarray, R: np.ndarray) -> GaussianBelief:
    """
    Exact conjugate update for y = H x + v, v ~ N(0, R).

    Args:
        prior: Predicted belief
        y: Observation (m,)
        H: Observation matrix (m, d)
        R: Measurement noise covariance (m, m)

    Returns:
        Posterior belief

    Raises:
        NotPositiveDefinite: If the innovation covariance is not PD
        DimensionMismatch: If the shapes disagree
    """
    y, H, R = _check_linear(prior, y, H, R)
    return _gain_update(prior, y - H @ prior.mean, H, R)


def ekf_update(prior: GaussianBelief, y: np.ndarray, model: MeasurementModel) -> GaussianBelief:
    """
    Extended Kalman update linearized at the prior mean.

    Raises:
        NotPositiveDefinite: If the innovation covariance is not PD
    """
    H = np.asarray(model.jacobian_h(prior.mean), dtype=float).reshape(model.obs_dim, prior.dim)
    y, H, R = _check_linear(prior, y, H, model.noise_cov)
    predicted = as_vector(model.h(prior.mean))
    return _gain_update(prior, y - predicted, H, R)


def log_evidence_linear(prior: GaussianBelief, y: np.ndarray, H: np.ndarray, R: np.ndarray) -> float:
    """
    Closed-form log marginal likelihood log N(y; H mu, H Sigma H^T + R).

    Returns:
        log p(y)
    """
    y, H, R = _check_linear(prior, y, H, R)
    factor = cholesky(H @ prior.cov @ H.T + R)
    z = factor.whiten(y - H @ prior.mean)
    return -0.5 * y.size * LOG_2PI - 0.5 * factor.log_det() - 0.5 * float(z @ z)


def exact_linear_energy(
    q: GaussianBelief,
    prior: GaussianBelief,
    y: np.ndarray,
    H: np.ndarray,
    R: np.ndarray,
    alpha: float
) -> float:
    """
    Closed-form energy of q for a linear-Gaussian measurement.

    E(q) = -log p(y) - (1/alpha) log int p(x | y)^alpha q(x)^(1 - alpha) dx

    The value equals -log p(y) at the exact posterior and exceeds it
    elsewhere.

    Args:
        q: Approximation at which the energy is evaluated
        prior: Prior belief
        y: Observation
        H: Observation matrix
        R: Measurement noise covariance
        alpha: Divergence index in (0, 1]

    Returns:
        Energy value

    Raises:
        BlendNotPositiveDefinite: If the blended precision is not PD
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    posterior = kalman_update(prior, y, H, R)
    log_integral = log_alpha_integral(posterior, q, alpha)
    value = -log_evidence_linear(prior, y, H, R) - log_integral / alpha
    if not math.isfinite(value):
        logger.warning(f"Closed-form energy is not finite (alpha={alpha})")
    return value
