"""
Moment-matching diagnostic for converged updates.

At a stationary point of the energy the moments of the tilted distribution
p~(x) ~ p(x | y)^alpha q(x)^(1 - alpha) equal those of q. The tilted moments
are estimated by self-normalized importance sampling with proposal q and
log-weight alpha [log p0(x) + log p(y | x) - log q(x)]; the evidence cancels
in the normalization.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import softmax

from core.errors import DegenerateWeights, NonFinite
from filters.models import MeasurementModel
from gaussian.belief import GaussianBelief
from gaussian.operations import log_density, sample_reparam


logger = logging.getLogger(__name__)


MIN_SAMPLES = 100
MIN_ESS = 10.0


@dataclass(frozen=True, eq=False)
class TiltedMoments:
    """
    SNIS moment summary of the tilted distribution.

    Attributes:
        belief: Tilted mean and covariance (a moment summary, not a density claim)
        ess: Effective sample size of the importance weights
        mean_stderr: Standard error of each mean component, (d,)
        cov_stderr: Standard error of each covariance entry, (d, d)
    """

    belief: GaussianBelief
    ess: float
    mean_stderr: np.ndarray
    cov_stderr: np.ndarray


def tilted_moments_snis(
    q: GaussianBelief,
    y: np.ndarray,
    model: MeasurementModel,
    prior: GaussianBelief,
    alpha: float,
    n_samples: int,
    rng: Optional[np.random.Generator] = None
) -> TiltedMoments:
    """
    Estimate the tilted mean and covariance by self-normalized importance sampling.

    Args:
        q: Approximate posterior (the proposal)
        y: Observation
        model: Measurement model
        prior: Prior belief
        alpha: Divergence index in (0, 1]
        n_samples: Proposal draws, >= 100
        rng: Random generator (seeded with 0 when omitted)

    Returns:
        TiltedMoments with delta-method standard errors

    Raises:
        DegenerateWeights: If the effective sample size is below 10
        NonFinite: If a log-weight is NaN
    """
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"n_samples must be at least {MIN_SAMPLES}, got {n_samples}")
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    if rng is None:
        rng = np.random.default_rng(0)

    points = sample_reparam(q.mean, q.factor(), rng.standard_normal((n_samples, q.dim)))
    log_weights = alpha * (
        log_density(prior, points) + model.log_likelihood(y, points) - log_density(q, points)
    )
    if np.any(np.isnan(log_weights)):
        raise NonFinite("Importance log-weights contain NaN")

    weights = softmax(log_weights)
    ess = float(1.0 / np.sum(weights ** 2))
    if ess < MIN_ESS:
        raise DegenerateWeights(
            f"Effective sample size {ess:.1f} is below {MIN_ESS:.0f}",
            details={"ess": ess, "n_samples": n_samples}
        )

    mean = weights @ points
    centered = points - mean
    outer = np.einsum("si,sj->sij", centered, centered)
    cov = np.einsum("s,sij->ij", weights, outer)

    sq_weights = weights ** 2
    mean_stderr = np.sqrt(sq_weights @ centered ** 2)
    cov_stderr = np.sqrt(np.einsum("s,sij->ij", sq_weights, (outer - cov) ** 2))

    logger.debug(f"Tilted moments: ESS={ess:.1f} of {n_samples}")

    return TiltedMoments(
        belief=GaussianBelief.with_jitter(mean, cov),
        ess=ess,
        mean_stderr=mean_stderr,
        cov_stderr=cov_stderr
    )
