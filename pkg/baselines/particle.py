"""
Bootstrap particle filter with systematic resampling.

Particles are propagated through the transition prior x <- F x + w,
w ~ N(0, Q), reweighted by the measurement likelihood in log space and
resampled systematically once the effective sample size drops below a
fraction of N.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import softmax

from core.errors import AllWeightsZero, DimensionMismatch, NonFinite
from filters.models import MeasurementModel
from gaussian.belief import GaussianBelief, symmetrize


logger = logging.getLogger(__name__)


WEIGHT_TOLERANCE = 1e-12


class ParticleFilterParams(BaseModel):
    """Particle count and resampling trigger (fraction of N)."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    n_particles: int = Field(default=2000, ge=1, description="Number of particles N")
    resample_threshold: float = Field(default=0.5, gt=0.0, le=1.0, description="Resample when ESS < threshold * N")


@dataclass(frozen=True, eq=False)
class ParticleEnsemble:
    """
    Weighted particle set.

    Attributes:
        particles: (N, d) states
        weights: (N,) simplex vector
    """

    particles: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        particles = np.atleast_2d(np.asarray(self.particles, dtype=float))
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if particles.shape[0] < 1 or weights.size != particles.shape[0]:
            raise DimensionMismatch(
                f"{particles.shape[0]} particles but {weights.size} weights",
                details={"particles": particles.shape, "weights": weights.shape}
            )
        if np.any(weights < 0.0) or abs(weights.sum() - 1.0) > WEIGHT_TOLERANCE:
            raise ValueError(f"Particle weights must form a simplex (sum={weights.sum()!r})")
        object.__setattr__(self, "particles", particles)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_belief(cls, belief: GaussianBelief, n_particles: int, rng: np.random.Generator) -> "ParticleEnsemble":
        """Draw an equally weighted ensemble from a Gaussian belief."""
        particles = rng.standard_normal((n_particles, belief.dim)) @ belief.factor().lower.T + belief.mean
        return cls(particles, np.full(n_particles, 1.0 / n_particles))

    @property
    def size(self) -> int:
        return self.particles.shape[0]

    def mean(self) -> np.ndarray:
        return self.weights @ self.particles

    def cov(self) -> np.ndarray:
        centered = self.particles - self.mean()
        return symmetrize((self.weights[:, None] * centered).T @ centered)


def effective_sample_size(weights: np.ndarray) -> float:
    """ESS = 1 / sum(w^2) of normalized weights; lies in [1, N]."""
    weights = np.asarray(weights, dtype=float)
    return float(1.0 / np.sum(weights ** 2))


def systematic_resample(weights: np.ndarray, offset: float) -> np.ndarray:
    """
    Systematic resampling indices.

    A single offset u in [0, 1) places N evenly spaced pointers
    (u + k) / N on the cumulative weights.

    Args:
        weights: (N,) normalized weights
        offset: Pointer offset u in [0, 1)

    Returns:
        (N,) integer indices of the surviving particles
    """
    if not 0.0 <= offset < 1.0:
        raise ValueError(f"Offset must lie in [0, 1), got {offset}")
    weights = np.asarray(weights, dtype=float)
    n = weights.size
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0
    pointers = (offset + np.arange(n)) / n
    indices = np.searchsorted(cumulative, pointers, side="right")
    return np.minimum(indices, n - 1)


def pf_step(
    ensemble: ParticleEnsemble,
    y: np.ndarray,
    F: np.ndarray,
    Q: np.ndarray,
    model: MeasurementModel,
    rng: np.random.Generator,
    params: Optional[ParticleFilterParams] = None
) -> ParticleEnsemble:
    """
    One predict-reweight-resample step of the bootstrap filter.

    Args:
        ensemble: Posterior ensemble at t - 1
        y: Observation at t
        F: Transition matrix (d, d)
        Q: Process noise covariance, PSD (d, d)
        model: Measurement model
        rng: Random stream for propagation and resampling
        params: Resampling trigger (defaults when omitted)

    Returns:
        Posterior ensemble at t

    Raises:
        AllWeightsZero: If every log-weight is non-finite
    """
    params = params or ParticleFilterParams()
    n, dim = ensemble.particles.shape
    F = np.asarray(F, dtype=float)
    if F.shape != (dim, dim):
        raise DimensionMismatch(f"Transition matrix {F.shape} does not match state dimension {dim}")

    noise = rng.multivariate_normal(np.zeros(dim), symmetrize(Q), size=n, method="eigh")
    particles = ensemble.particles @ F.T + noise

    try:
        log_lik = model.log_likelihood(y, particles)
    except NonFinite as e:
        raise AllWeightsZero(f"Likelihood evaluation failed: {e}", details={"n_particles": n}) from e

    with np.errstate(divide="ignore"):
        log_weights = np.log(ensemble.weights) + np.atleast_1d(log_lik)
    if np.any(np.isnan(log_weights)) or not np.any(np.isfinite(log_weights)):
        raise AllWeightsZero("All particle log-weights are non-finite", details={"n_particles": n})

    weights = softmax(log_weights)
    ess = effective_sample_size(weights)
    if ess < params.resample_threshold * n:
        indices = systematic_resample(weights, float(rng.uniform()))
        logger.debug(f"Resampling {n} particles (ESS={ess:.1f})")
        return ParticleEnsemble(particles[indices], np.full(n, 1.0 / n))

    return ParticleEnsemble(particles, weights / weights.sum())
