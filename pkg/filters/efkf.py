"""
Energy-function Kalman filter measurement update.

Starting from q = prior, each iteration draws eps ~ N(0, I), estimates the
energy and its gradients, and takes the Sigma-conditioned natural-gradient
step

    mu    <- mu    - rho Sigma grad_mu E
    Sigma <- Sigma - rho Sigma grad_Sigma E Sigma

Steps that break positive definiteness are halved, and so are steps that
raise the energy evaluated at the draws of their own iteration. With common
random numbers (``fixed_crn``) every iteration shares those draws, so the
recorded energies never increase.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from core.errors import NotPositiveDefinite, StepFailed
from filters.energy import AlphaConfig, EnergyReport, energy_estimate, energy_report
from filters.models import MeasurementModel
from gaussian.belief import GaussianBelief, symmetrize


logger = logging.getLogger(__name__)


MAX_HALVINGS = 10
DESCENT_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class IterationRecord:
    """Energy at the iterate, the iterate itself and the step taken from it."""

    energy: float
    mean: np.ndarray
    cov: np.ndarray
    step_size: float


@dataclass(eq=False)
class FilterTrace:
    """Per-iteration history of one measurement update."""

    records: List[IterationRecord] = field(default_factory=list)
    posterior: Optional[GaussianBelief] = None

    def __len__(self) -> int:
        return len(self.records)

    @property
    def energies(self) -> np.ndarray:
        return np.array([record.energy for record in self.records])

    @property
    def step_sizes(self) -> np.ndarray:
        return np.array([record.step_size for record in self.records])


def _take_step(
    q: GaussianBelief,
    grad_mean: np.ndarray,
    grad_cov: np.ndarray,
    rho: float,
    max_halvings: int = MAX_HALVINGS
) -> Tuple[GaussianBelief, float]:
    cov = q.cov
    mean_direction = cov @ grad_mean
    cov_direction = cov @ grad_cov @ cov

    step = rho
    for attempt in range(max_halvings + 1):
        try:
            updated = GaussianBelief(q.mean - step * mean_direction, symmetrize(cov - step * cov_direction))
            if attempt:
                logger.debug(f"Natural-gradient step accepted after {attempt} halvings (rho={step:.3g})")
            return updated, step
        except NotPositiveDefinite:
            step *= 0.5

    raise StepFailed(
        f"Covariance lost positive definiteness after {max_halvings} step halvings",
        details={"initial_step": rho, "final_step": step}
    )


def natural_gradient_step(
    q: GaussianBelief,
    grad_mean: np.ndarray,
    grad_cov: np.ndarray,
    rho: float
) -> GaussianBelief:
    """
    Sigma-conditioned natural-gradient step on (mu, Sigma).

    Args:
        q: Current belief
        grad_mean: dE/dmu
        grad_cov: Symmetric dE/dSigma
        rho: Step size, > 0

    Returns:
        Updated belief

    Raises:
        StepFailed: If 10 halvings of rho cannot keep Sigma PD
    """
    if rho <= 0.0:
        raise ValueError(f"Step size must be positive, got {rho}")
    updated, _ = _take_step(q, np.asarray(grad_mean, dtype=float), symmetrize(grad_cov), rho)
    return updated


def efkf_update(
    prior: GaussianBelief,
    y: np.ndarray,
    model: MeasurementModel,
    config: AlphaConfig,
    rng: Optional[np.random.Generator] = None
) -> Tuple[GaussianBelief, FilterTrace]:
    """
    Alpha-divergence measurement update by energy minimization.

    Args:
        prior: Predicted belief p(x_t | y_1:t-1)
        y: Observation
        model: Measurement model
        config: Filter hyperparameters
        rng: Draw stream; defaults to one seeded with ``config.seed``

    Returns:
        Tuple of (posterior, trace)

    Raises:
        StepFailed: If a step cannot keep the covariance PD
        NonFinite: If the energy cannot be evaluated
    """
    if rng is None:
        rng = np.random.default_rng(config.seed)

    common_draws = rng.standard_normal((config.samples, prior.dim)) if config.fixed_crn else None
    trace = FilterTrace()
    q = prior

    for iteration in range(config.iterations):
        eps = common_draws if config.fixed_crn else rng.standard_normal((config.samples, prior.dim))
        report = energy_report(eps, y, model, q, prior, config.alpha)
        rho = config.step_size(iteration)

        if rho > 0.0:
            candidate, used = _take_step(q, report.grad_mean, report.grad_cov, rho)
            candidate, used = _enforce_descent(q, candidate, used, report, eps, y, model, prior, config.alpha)
        else:
            candidate, used = q, 0.0

        logger.debug(f"EFKF iteration {iteration}: energy={report.value:.6f} rho={used:.3g}")
        trace.records.append(IterationRecord(report.value, q.mean, q.cov, used))
        q = candidate

    trace.posterior = q
    return q, trace


def _enforce_descent(
    q: GaussianBelief,
    candidate: GaussianBelief,
    step: float,
    report: EnergyReport,
    eps: np.ndarray,
    y: np.ndarray,
    model: MeasurementModel,
    prior: GaussianBelief,
    alpha: float
) -> Tuple[GaussianBelief, float]:
    for _ in range(MAX_HALVINGS):
        energy = energy_estimate(eps, y, model, candidate, prior, alpha).value
        if energy <= report.value + DESCENT_TOLERANCE:
            return candidate, step
        step *= 0.5
        candidate, step = _take_step(q, report.grad_mean, report.grad_cov, step)

    energy = energy_estimate(eps, y, model, candidate, prior, alpha).value
    if energy <= report.value + DESCENT_TOLERANCE:
        return candidate, step

    logger.debug("No descending step found; keeping the current iterate")
    return q, 0.0
