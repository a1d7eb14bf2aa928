"""Linear-Gaussian time update."""

import numpy as np

from core.errors import DimensionMismatch
from gaussian.belief import GaussianBelief, symmetrize


def predict(posterior: GaussianBelief, F: np.ndarray, Q: np.ndarray) -> GaussianBelief:
    """
    Propagate a belief through x_t = F x_{t-1} + w, w ~ N(0, Q).

    Args:
        posterior: Belief at t-1
        F: Transition matrix (d, d)
        Q: Symmetric PSD process-noise covariance (d, d)

    Returns:
        Prior belief at t with mean F mu and covariance F Sigma F^T + Q

    Raises:
        DimensionMismatch: If F or Q do not match the belief dimension
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    Q = symmetrize(Q)
    d = posterior.dim
    if F.shape != (d, d) or Q.shape != (d, d):
        raise DimensionMismatch(
            f"Belief of dimension {d} does not match F {F.shape} and Q {Q.shape}",
            details={"F": F.shape, "Q": Q.shape}
        )
    return GaussianBelief(F @ posterior.mean, F @ posterior.cov @ F.T + Q)
