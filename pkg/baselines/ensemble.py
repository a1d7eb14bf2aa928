"""
Stochastic ensemble Kalman filter measurement update.

Each member is moved by the sample Kalman gain towards its own perturbed
observation y + v_i, v_i ~ N(0, R). Gains use sample cross-covariances of
the ensemble and its predicted observations; the innovation covariance is
factorized with jitter.
"""

import logging
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from core.errors import DimensionMismatch, NotPositiveDefinite, SingularEnsemble
from filters.models import MeasurementModel
from gaussian.belief import as_vector, cholesky_with_jitter, symmetrize


logger = logging.getLogger(__name__)


class EnsembleFilterParams(BaseModel):
    """Ensemble size and observation-perturbation switch."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_members: int = Field(default=500, ge=2, description="Ensemble size N")
    perturb: bool = Field(default=True, description="Perturb observations with N(0, R) draws")


def enkf_update(
    states: np.ndarray,
    y: np.ndarray,
    model: MeasurementModel,
    rng: Optional[np.random.Generator] = None,
    perturb: bool = True
) -> np.ndarray:
    """
    Ensemble Kalman update of an (N, d) ensemble.

    With ``perturb`` disabled the observation is not perturbed and R enters
    the innovation covariance directly, which applies the deterministic
    Kalman gain of the ensemble covariance to every member.

    Args:
        states: Forecast ensemble (N, d), N >= 2
        y: Observation (m,)
        model: Measurement model
        rng: Random stream for the observation perturbations
        perturb: Use perturbed observations

    Returns:
        Analysis ensemble (N, d)

    Raises:
        SingularEnsemble: If the ensemble has no spread or the innovation
            covariance is not PD after jitter
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    n_members = states.shape[0]
    if n_members < 2:
        raise SingularEnsemble(f"Ensemble update needs at least 2 members, got {n_members}")
    y = as_vector(y)
    if y.size != model.obs_dim:
        raise DimensionMismatch(f"Observation of length {y.size} does not match R {model.noise_cov.shape}")

    anomalies = states - states.mean(axis=0)
    if not np.any(anomalies):
        raise SingularEnsemble("Ensemble members are identical", details={"n_members": n_members})

    predicted = np.atleast_2d(np.asarray(model.h(states), dtype=float))
    if perturb:
        if rng is None:
            raise ValueError("A random generator is required for perturbed observations")
        noise = rng.multivariate_normal(np.zeros(model.obs_dim), model.noise_cov, size=n_members)
        predicted = predicted - noise
    obs_anomalies = predicted - predicted.mean(axis=0)

    scale = 1.0 / (n_members - 1)
    innovation_cov = symmetrize(scale * obs_anomalies.T @ obs_anomalies)
    if not perturb:
        innovation_cov = innovation_cov + model.noise_cov
    cross_cov = scale * anomalies.T @ obs_anomalies

    try:
        factor, _ = cholesky_with_jitter(innovation_cov)
    except NotPositiveDefinite as e:
        raise SingularEnsemble(
            "Sample innovation covariance is not positive definite",
            details={"n_members": n_members}
        ) from e

    # rows are K (y - yhat_i) for each member
    return states + factor.solve((y - predicted).T).T @ cross_cov.T
