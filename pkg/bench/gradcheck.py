"""
Finite-difference verification of the energy gradients.

Random range-sensor instances are drawn for each requested state dimension
and a rotation of alpha in {0.1, 0.5, 0.9} and S in {1, 8}. Central
differences of the energy at fixed draws are compared with the analytic
gradients; covariance entries are perturbed symmetrically.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, List, NamedTuple, Sequence, Tuple

import numpy as np

from filters.energy import energy_estimate, energy_gradients
from filters.models import MeasurementModel
from gaussian.belief import GaussianBelief
from tracking.sensors import range_sensor_model


logger = logging.getLogger(__name__)


FD_STEP = 1e-5
MEAN_TOLERANCE = 1e-5
COV_TOLERANCE = 1e-4
ALPHAS = (0.1, 0.5, 0.9)
SAMPLE_SIZES = (1, 8)
N_SENSORS = 3

GradientFn = Callable[..., Tuple[np.ndarray, np.ndarray]]


class GradcheckInstance(NamedTuple):
    """Everything needed to evaluate the energy at fixed draws."""

    eps: np.ndarray
    y: np.ndarray
    model: MeasurementModel
    q: GaussianBelief
    prior: GaussianBelief
    alpha: float


@dataclass(frozen=True)
class TrialResult:
    dim: int
    alpha: float
    samples: int
    mean_error: float
    cov_error: float

    @property
    def passed(self) -> bool:
        return self.mean_error <= MEAN_TOLERANCE and self.cov_error <= COV_TOLERANCE


@dataclass
class GradcheckReport:
    """Per-trial relative errors and the worst case over all trials."""

    trials: List[TrialResult] = field(default_factory=list)

    @property
    def worst_mean_error(self) -> float:
        return max((trial.mean_error for trial in self.trials), default=0.0)

    @property
    def worst_cov_error(self) -> float:
        return max((trial.cov_error for trial in self.trials), default=0.0)

    @property
    def passed(self) -> bool:
        return bool(self.trials) and all(trial.passed for trial in self.trials)


def _random_spd(dim: int, rng: np.random.Generator, floor: float) -> np.ndarray:
    factor = rng.standard_normal((dim, dim))
    return factor @ factor.T / dim + floor * np.eye(dim)


def random_instance(dim: int, alpha: float, samples: int, rng: np.random.Generator) -> GradcheckInstance:
    """
    Random range-sensor instance with q away from the prior.

    The planar position is taken from the first two state components;
    sensors sit 5 to 15 units from the prior mean.
    """
    prior = GaussianBelief(rng.normal(0.0, 3.0, dim), _random_spd(dim, rng, 0.5))
    q = GaussianBelief(prior.mean + 0.3 * rng.standard_normal(dim), _random_spd(dim, rng, 0.3))

    angles = rng.uniform(0.0, 2.0 * np.pi, N_SENSORS)
    radii = rng.uniform(5.0, 15.0, N_SENSORS)
    sensors = prior.mean[:2] + np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    model = range_sensor_model(sensors, 0.5 * np.eye(N_SENSORS), position_index=[0, 1], state_dim=dim)

    truth = prior.mean + rng.standard_normal(dim)
    y = model.h(truth) + rng.normal(0.0, np.sqrt(0.5), N_SENSORS)
    eps = rng.standard_normal((samples, dim))
    return GradcheckInstance(eps, y, model, q, prior, alpha)


def finite_difference_gradients(instance: GradcheckInstance, step: float = FD_STEP) -> Tuple[np.ndarray, np.ndarray]:
    """
    Central differences of the energy in mu and in symmetric Sigma.

    Returns:
        Tuple of (grad_mean (d,), grad_cov (d, d))
    """
    q = instance.q
    dim = q.dim

    def energy(mean: np.ndarray, cov: np.ndarray) -> float:
        return energy_estimate(
            instance.eps, instance.y, instance.model, GaussianBelief(mean, cov), instance.prior, instance.alpha
        ).value

    grad_mean = np.empty(dim)
    for i in range(dim):
        offset = np.zeros(dim)
        offset[i] = step
        grad_mean[i] = (energy(q.mean + offset, q.cov) - energy(q.mean - offset, q.cov)) / (2.0 * step)

    grad_cov = np.empty((dim, dim))
    for i in range(dim):
        for j in range(i, dim):
            direction = np.zeros((dim, dim))
            direction[i, j] = direction[j, i] = step
            delta = energy(q.mean, q.cov + direction) - energy(q.mean, q.cov - direction)
            # an off-diagonal perturbation moves both (i, j) and (j, i)
            grad_cov[i, j] = grad_cov[j, i] = delta / (2.0 * step if i == j else 4.0 * step)

    return grad_mean, grad_cov


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """max |analytic - numeric| / max(1, max |numeric|)."""
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    return float(np.max(np.abs(analytic - numeric)) / max(1.0, float(np.max(np.abs(numeric)))))


def run_gradcheck(
    dims: Sequence[int] = (2, 4),
    trials: int = 24,
    seed: int = 0,
    gradient_fn: GradientFn = energy_gradients
) -> GradcheckReport:
    """
    Compare ``gradient_fn`` with finite differences on random instances.

    Args:
        dims: State dimensions to cycle through
        trials: Number of random instances
        seed: Seed of the instance generator
        gradient_fn: Gradient under test, same signature as energy_gradients

    Returns:
        GradcheckReport
    """
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    if not dims or any(dim < 2 for dim in dims):
        raise ValueError(f"dimensions must be at least 2, got {list(dims)}")

    rng = np.random.default_rng(seed)
    settings = itertools.cycle(itertools.product(dims, ALPHAS, SAMPLE_SIZES))
    report = GradcheckReport()

    for _, (dim, alpha, samples) in zip(range(trials), settings):
        instance = random_instance(dim, alpha, samples, rng)
        analytic_mean, analytic_cov = gradient_fn(*instance)
        numeric_mean, numeric_cov = finite_difference_gradients(instance)

        trial = TrialResult(
            dim=dim,
            alpha=alpha,
            samples=samples,
            mean_error=relative_error(analytic_mean, numeric_mean),
            cov_error=relative_error(analytic_cov, numeric_cov)
        )
        report.trials.append(trial)
        logger.debug(
            f"Gradcheck d={dim} alpha={alpha} S={samples}: "
            f"mean {trial.mean_error:.2e}, cov {trial.cov_error:.2e}"
        )

    return report
