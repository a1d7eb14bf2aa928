"""
Exponential-family algebra on Gaussian beliefs.

Log-partition function and its gradients, reparametrized sampling, log
density, the cavity correction factor and closed-form divergences. All
functions are pure and accept a single point (d,) or a batch (S, d) where
points are involved.
"""

import math
from typing import Tuple

import numpy as np

from core.errors import BlendNotPositiveDefinite, DimensionMismatch, NotPositiveDefinite
from gaussian.belief import CholeskyFactor, GaussianBelief, NaturalParams, as_vector, cholesky, symmetrize


LOG_2PI = math.log(2.0 * math.pi)


def _check_points(x: np.ndarray, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != dim or x.ndim > 2:
        raise DimensionMismatch(
            f"Expected points of dimension {dim}, got shape {x.shape}",
            details={"expected": dim, "shape": x.shape}
        )
    return x


def log_partition(belief: GaussianBelief) -> float:
    """
    Log-partition function in mean parameters.

    log Z(mu, Sigma) = 1/2 mu^T Sigma^-1 mu + 1/2 log|Sigma|

    Args:
        belief: Gaussian belief

    Returns:
        Scalar log Z
    """
    factor = belief.factor()
    solved = factor.solve(belief.mean)
    return 0.5 * float(belief.mean @ solved) + 0.5 * factor.log_det()


def log_partition_gradients(belief: GaussianBelief) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gradients of log Z with respect to the mean and the covariance.

    The covariance gradient is the symmetric matrix G with
    d log Z = <G, dSigma> for symmetric perturbations.

    Returns:
        Tuple of (grad_mean, grad_cov) = (Lambda mu, 1/2 Lambda - 1/2 Lambda mu mu^T Lambda)
    """
    precision = belief.precision()
    v = precision @ belief.mean
    grad_cov = 0.5 * precision - 0.5 * np.outer(v, v)
    return v, symmetrize(grad_cov)


def sample_reparam(mean: np.ndarray, factor: CholeskyFactor, eps: np.ndarray) -> np.ndarray:
    """
    Reparametrized draw x = C eps + mean.

    Args:
        mean: Mean vector (d,)
        factor: Cholesky factor of the covariance
        eps: Standard normal noise, (d,) or (S, d)

    Returns:
        Points with the shape of ``eps``

    Raises:
        DimensionMismatch: If dimensions disagree
    """
    mean = as_vector(mean)
    if factor.dim != mean.size:
        raise DimensionMismatch(f"Factor of dimension {factor.dim} does not match mean {mean.size}")
    eps = _check_points(eps, mean.size)
    return eps @ factor.lower.T + mean


def log_density(belief: GaussianBelief, x: np.ndarray) -> np.ndarray:
    """
    Multivariate normal log-density.

    Args:
        belief: Gaussian belief
        x: Point (d,) or points (S, d)

    Returns:
        Scalar for a single point, (S,) array for a batch
    """
    x = _check_points(x, belief.dim)
    factor = belief.factor()
    centered = np.atleast_2d(x - belief.mean)
    z = factor.whiten(centered.T)
    values = -0.5 * belief.dim * LOG_2PI - 0.5 * factor.log_det() - 0.5 * np.sum(z * z, axis=0)
    if x.ndim == 1:
        return float(values[0])
    return values


def cavity_log_f(x: np.ndarray, q: NaturalParams, prior: NaturalParams) -> np.ndarray:
    """
    Log of the cavity factor f(x) = exp{lambda^T s(x)}, lambda = lambda_q - lambda_0.

    log f(x) = (eta_q - eta_0)^T x - 1/2 x^T (Lambda_q - Lambda_0) x

    No definiteness is required of the precision difference.

    Args:
        x: Point (d,) or points (S, d)
        q: Natural parameters of the approximation
        prior: Natural parameters of the prior

    Returns:
        Scalar for a single point, (S,) array for a batch
    """
    cavity = q - prior
    x = _check_points(x, cavity.dim)
    points = np.atleast_2d(x)
    values = points @ cavity.eta - 0.5 * np.einsum("si,ij,sj->s", points, cavity.precision, points)
    if x.ndim == 1:
        return float(values[0])
    return values


def kl_divergence(p: GaussianBelief, q: GaussianBelief) -> float:
    """Closed-form KL(p || q) between two Gaussians."""
    if p.dim != q.dim:
        raise DimensionMismatch(f"Dimensions differ: {p.dim} vs {q.dim}")
    q_factor = q.factor()
    diff = q.mean - p.mean
    trace_term = float(np.trace(q_factor.solve(p.cov)))
    quad_term = float(diff @ q_factor.solve(diff))
    return 0.5 * (trace_term + quad_term - p.dim + q_factor.log_det() - p.factor().log_det())


def log_alpha_integral(p: GaussianBelief, q: GaussianBelief, alpha: float) -> float:
    """
    log of int p(x)^alpha q(x)^(1-alpha) dx for two Gaussians.

    Equals A(alpha lambda_p + (1 - alpha) lambda_q) - alpha A(lambda_p)
    - (1 - alpha) A(lambda_q) with A the natural-form log-partition function.

    Raises:
        BlendNotPositiveDefinite: If the blended precision is not PD
    """
    if p.dim != q.dim:
        raise DimensionMismatch(f"Dimensions differ: {p.dim} vs {q.dim}")

    lam_p = p.to_natural()
    lam_q = q.to_natural()
    blend_precision = alpha * lam_p.precision + (1.0 - alpha) * lam_q.precision
    blend_eta = alpha * lam_p.eta + (1.0 - alpha) * lam_q.eta

    try:
        blend_factor = cholesky(blend_precision)
    except NotPositiveDefinite as e:
        raise BlendNotPositiveDefinite(
            "Blended precision is not positive definite; the alpha integral diverges",
            details={"alpha": alpha}
        ) from e

    log_z_blend = 0.5 * float(blend_eta @ blend_factor.solve(blend_eta)) - 0.5 * blend_factor.log_det()
    return log_z_blend - (alpha * log_partition(p) + (1.0 - alpha) * log_partition(q))


def alpha_divergence_gaussian(p: GaussianBelief, q: GaussianBelief, alpha: float) -> float:
    """
    Closed-form alpha divergence between two Gaussians.

    D_alpha[p || q] = (1 - int p^alpha q^(1-alpha) dx) / (alpha (1 - alpha))

    Args:
        p: First argument
        q: Second argument
        alpha: Divergence index in (0, 1)

    Returns:
        Non-negative divergence value

    Raises:
        BlendNotPositiveDefinite: If the blended precision is not PD
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")

    log_integral = log_alpha_integral(p, q, alpha)
    divergence = -math.expm1(log_integral) / (alpha * (1.0 - alpha))
    return max(divergence, 0.0)
