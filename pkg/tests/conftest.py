"""
Shared fixtures: seeded generators, random SPD matrices, a linear-Gaussian
measurement problem and a planar range-sensor problem.
"""

from typing import NamedTuple

import numpy as np
import pytest

from baselines.kalman import kalman_update
from filters.models import MeasurementModel
from gaussian.belief import GaussianBelief
from tracking.sensors import range_sensor_model


def random_spd(rng: np.random.Generator, dim: int, floor: float = 0.5) -> np.ndarray:
    factor = rng.standard_normal((dim, dim))
    return factor @ factor.T / dim + floor * np.eye(dim)


class LinearProblem(NamedTuple):
    prior: GaussianBelief
    y: np.ndarray
    H: np.ndarray
    R: np.ndarray
    model: MeasurementModel
    posterior: GaussianBelief


class RangeProblem(NamedTuple):
    prior: GaussianBelief
    y: np.ndarray
    model: MeasurementModel


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def spd():
    return random_spd


def make_linear_problem(rng: np.random.Generator, dim: int = 4, obs_dim: int = 3, noise: float = 0.1) -> LinearProblem:
    prior_mean = np.array([2.0, -2.0, 1.5, 2.0, -1.0, 0.5])[:dim]
    prior = GaussianBelief(prior_mean, 0.4 * np.eye(dim) + 0.1 * random_spd(rng, dim, 0.0))
    H = rng.standard_normal((obs_dim, dim))
    R = noise * np.eye(obs_dim)
    truth = prior.mean + rng.multivariate_normal(np.zeros(dim), prior.cov)
    y = H @ truth + rng.multivariate_normal(np.zeros(obs_dim), R)
    model = MeasurementModel.linear(H, R)
    return LinearProblem(prior, y, H, R, model, kalman_update(prior, y, H, R))


@pytest.fixture
def linear_problem(rng):
    """d=4, m=3 linear-Gaussian update with its exact posterior."""
    return make_linear_problem(rng)


@pytest.fixture
def linear_problem_2d(rng):
    return make_linear_problem(rng, dim=2, obs_dim=2, noise=0.3)


@pytest.fixture
def range_problem_2d():
    """Planar range-only update with three sensors about 5 units away."""
    prior = GaussianBelief(np.array([0.5, -0.3]), np.array([[1.0, 0.2], [0.2, 0.8]]))
    sensors = np.array([[5.0, 0.0], [0.0, 5.0], [-4.0, -3.0]])
    model = range_sensor_model(sensors, 0.2 * np.eye(3), position_index=[0, 1], state_dim=2)
    y = model.h(np.array([0.8, 0.1])) + np.array([0.1, -0.2, 0.05])
    return RangeProblem(prior, y, model)
