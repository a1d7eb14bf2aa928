"""
Monte-Carlo energy of the alpha-divergence measurement update.

For a prior p0 = N(mu0, Sigma0) and an approximation q = N(mu, Sigma), draws
x_s = C eps_s + mu (C = chol(Sigma)) give

    Psi(s) = alpha log N(y; h(x_s), R) - alpha log f(x_s)
    E      = log Z0 - log Zq - (1/alpha) log mean_s exp(Psi(s))

where f(x) = exp{(lambda_q - lambda_0)^T s(x)} is the cavity factor. The
log-mean-exp is evaluated with the max-shift, and the gradients with respect
to (mu, Sigma) are exact for fixed draws: they follow the reparametrization
path through the Cholesky map and the explicit dependence of f on lambda_q.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import linalg
from scipy.special import logsumexp, softmax

from core.errors import DimensionMismatch, NonFinite
from filters.models import MeasurementModel
from gaussian.belief import GaussianBelief, symmetrize
from gaussian.operations import cavity_log_f, log_partition, log_partition_gradients, sample_reparam


logger = logging.getLogger(__name__)


class AlphaConfig(BaseModel):
    """
    Hyperparameters of the energy-function Kalman filter.

    The step schedule is rho_i = step0 / (1 + i) ** step_decay.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: float = Field(default=0.5, gt=0.0, le=1.0, description="Divergence index")
    samples: int = Field(default=64, ge=1, description="Monte-Carlo draws S per iteration")
    iterations: int = Field(default=100, ge=1, description="Natural-gradient iterations I")
    step0: float = Field(default=0.5, ge=0.0, description="Initial step size")
    step_decay: float = Field(default=0.0, ge=0.0, description="Polynomial step decay exponent")
    seed: int = Field(default=0, ge=0, lt=2**64, description="Seed of the draw stream")
    fixed_crn: bool = Field(default=False, description="Reuse one draw across all iterations")

    def step_size(self, iteration: int) -> float:
        """Step size rho_i for zero-based iteration i."""
        return self.step0 / (1.0 + iteration) ** self.step_decay


@dataclass(frozen=True, eq=False)
class EnergyReport:
    """
    Stabilized energy estimate at one (mu, Sigma).

    Attributes:
        value: Energy estimate E-hat
        psi_max: Max of Psi(s) used for the shift
        weights: softmax of Psi(s), shape (S,)
        grad_mean: dE/dmu when computed
        grad_cov: Symmetric dE/dSigma when computed
    """

    value: float
    psi_max: float
    weights: np.ndarray
    grad_mean: Optional[np.ndarray] = None
    grad_cov: Optional[np.ndarray] = None


def _draws(eps_draws: np.ndarray, dim: int) -> np.ndarray:
    eps = np.atleast_2d(np.asarray(eps_draws, dtype=float))
    if eps.ndim != 2 or eps.shape[1] != dim:
        raise DimensionMismatch(
            f"Expected draws of shape (S, {dim}), got {np.shape(eps_draws)}",
            details={"dim": dim}
        )
    if not np.all(np.isfinite(eps)):
        raise NonFinite("Draws contain non-finite values")
    return eps


def psi_values(
    eps_draws: np.ndarray,
    y: np.ndarray,
    model: MeasurementModel,
    q: GaussianBelief,
    prior: GaussianBelief,
    alpha: float
) -> np.ndarray:
    """
    Per-draw exponent Psi(s) = alpha log p(y | x_s) - alpha log f(x_s).

    Args:
        eps_draws: Standard normal draws, shape (S, d)
        y: Observation (m,)
        model: Measurement model
        q: Current approximation
        prior: Prior belief
        alpha: Divergence index

    Returns:
        Array of shape (S,)

    Raises:
        NotPositiveDefinite: From the factorization of q
        DimensionMismatch: If q and prior dimensions differ
    """
    if q.dim != prior.dim:
        raise DimensionMismatch(f"q has dimension {q.dim}, prior {prior.dim}")
    eps = _draws(eps_draws, q.dim)
    points = sample_reparam(q.mean, q.factor(), eps)
    log_f = cavity_log_f(points, q.to_natural(), prior.to_natural())
    return alpha * model.log_likelihood(y, points) - alpha * log_f


def energy_from_psi(psi: np.ndarray, log_z_prior: float, log_z_q: float, alpha: float) -> EnergyReport:
    """
    Combine Psi(s) into the stabilized energy and its softmax weights.

    Raises:
        NonFinite: If any Psi(s) is NaN or all are -inf
    """
    psi = np.asarray(psi, dtype=float)
    if np.any(np.isnan(psi)):
        raise NonFinite("Psi contains NaN; check the observation function output")
    psi_max = float(np.max(psi))
    if not math.isfinite(psi_max):
        raise NonFinite(f"Maximum of Psi is {psi_max}", details={"psi_max": psi_max})

    shifted = psi - psi_max
    log_mean = float(logsumexp(shifted)) - math.log(psi.size)
    value = log_z_prior - log_z_q - log_mean / alpha - psi_max / alpha
    return EnergyReport(value=value, psi_max=psi_max, weights=softmax(shifted))


def energy_estimate(
    eps_draws: np.ndarray,
    y: np.ndarray,
    model: MeasurementModel,
    q: GaussianBelief,
    prior: GaussianBelief,
    alpha: float
) -> EnergyReport:
    """
    Stabilized Monte-Carlo energy (value and weights only).

    Returns:
        EnergyReport without gradients
    """
    psi = psi_values(eps_draws, y, model, q, prior, alpha)
    return energy_from_psi(psi, log_partition(prior), log_partition(q), alpha)


def _phi(matrix: np.ndarray) -> np.ndarray:
    """Lower triangle with the diagonal halved."""
    return np.tril(matrix) - 0.5 * np.diag(np.diag(matrix))


def energy_report(
    eps_draws: np.ndarray,
    y: np.ndarray,
    model: MeasurementModel,
    q: GaussianBelief,
    prior: GaussianBelief,
    alpha: float
) -> EnergyReport:
    """
    Energy estimate together with its exact gradients at fixed draws.

    Returns:
        EnergyReport with grad_mean and grad_cov filled in
    """
    if q.dim != prior.dim:
        raise DimensionMismatch(f"q has dimension {q.dim}, prior {prior.dim}")
    eps = _draws(eps_draws, q.dim)
    y = np.asarray(y, dtype=float).reshape(-1)

    lower = q.factor().lower
    points = sample_reparam(q.mean, q.factor(), eps)
    nat_q = q.to_natural()
    cavity = nat_q - prior.to_natural()

    log_lik = model.log_likelihood(y, points)
    log_f = cavity_log_f(points, nat_q, prior.to_natural())
    report = energy_from_psi(alpha * log_lik - alpha * log_f, log_partition(prior), log_partition(q), alpha)
    weights = report.weights

    # d(log p(y|x) - log f(x))/dx at fixed lambda
    residual = y - np.atleast_2d(model.h(points))
    jac = np.asarray(model.jacobian_h(points), dtype=float).reshape(points.shape[0], model.obs_dim, q.dim)
    scaled = model.noise_factor().solve(residual.T).T
    grad_x = np.einsum("smd,sm->sd", jac, scaled) - (cavity.eta - points @ cavity.precision)

    precision = nat_q.precision
    v = nat_q.eta
    u = points @ precision
    grad_z_mean, grad_z_cov = log_partition_gradients(q)

    grad_mean = -grad_z_mean - weights @ grad_x + weights @ u

    # reparametrization path: x_s = C eps_s + mu, adjoint of the Cholesky map
    adj_lower = np.einsum("s,si,sj->ij", weights, grad_x, eps)
    inner = _phi(lower.T @ adj_lower)
    left = linalg.solve_triangular(lower, inner, lower=True, trans="T", check_finite=False)
    reparam = linalg.solve_triangular(lower, left.T, lower=True, trans="T", check_finite=False).T

    # explicit dependence of log f on (eta_q, Lambda_q)
    u_bar = weights @ u
    explicit = symmetrize(np.outer(u_bar, v)) - 0.5 * np.einsum("s,si,sj->ij", weights, u, u)

    grad_cov = symmetrize(-grad_z_cov - symmetrize(reparam) - explicit)

    return EnergyReport(
        value=report.value,
        psi_max=report.psi_max,
        weights=weights,
        grad_mean=grad_mean,
        grad_cov=grad_cov
    )


def energy_gradients(
    eps_draws: np.ndarray,
    y: np.ndarray,
    model: MeasurementModel,
    q: GaussianBelief,
    prior: GaussianBelief,
    alpha: float
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exact gradients of ``energy_estimate(...).value`` at fixed draws.

    The covariance gradient G is symmetric and satisfies dE = <G, dSigma>
    for symmetric perturbations.

    Returns:
        Tuple of (grad_mean (d,), grad_cov (d, d))
    """
    report = energy_report(eps_draws, y, model, q, prior, alpha)
    return report.grad_mean, report.grad_cov
