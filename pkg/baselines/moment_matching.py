"""
Direct moment matching: the alpha = 1 end of the divergence family.

The posterior mean and covariance are estimated by self-normalized
importance sampling with the prior as proposal, which is the tilted-moment
estimator with q equal to the prior and alpha = 1.
"""

from typing import Optional

import numpy as np

from filters.diagnostics import tilted_moments_snis
from filters.models import MeasurementModel
from gaussian.belief import GaussianBelief


def moment_matching_update(
    prior: GaussianBelief,
    y: np.ndarray,
    model: MeasurementModel,
    n_samples: int = 2000,
    rng: Optional[np.random.Generator] = None
) -> GaussianBelief:
    """
    Gaussian posterior whose moments match the SNIS posterior moments.

    Raises:
        DegenerateWeights: If the likelihood collapses the weights (ESS < 10)
    """
    return tilted_moments_snis(prior, y, model, prior, 1.0, n_samples, rng).belief
