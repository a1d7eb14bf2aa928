import numpy as np
import pytest
from pydantic import ValidationError

from baselines.ensemble import EnsembleFilterParams, enkf_update
from core.errors import SingularEnsemble
from filters.models import MeasurementModel


@pytest.fixture
def scalar_model():
    return MeasurementModel.linear([[1.0]], [[1.0]])


def test_needs_two_members(scalar_model):
    with pytest.raises(SingularEnsemble):
        enkf_update(np.array([[0.0]]), np.array([1.0]), scalar_model, np.random.default_rng(0))
    with pytest.raises(ValidationError):
        EnsembleFilterParams(n_members=1)


def test_identical_members_are_singular(scalar_model):
    with pytest.raises(SingularEnsemble):
        enkf_update(np.ones((5, 1)), np.array([1.0]), scalar_model, np.random.default_rng(0))


def test_unperturbed_update_uses_ensemble_gain(scalar_model):
    updated = enkf_update(np.array([[-1.0], [1.0]]), np.array([1.0]), scalar_model, perturb=False)
    np.testing.assert_allclose(updated[:, 0], [1.0 / 3.0, 1.0])


def test_perturbation_needs_generator(scalar_model):
    with pytest.raises(ValueError):
        enkf_update(np.array([[-1.0], [1.0]]), np.array([1.0]), scalar_model)


def test_large_ensemble_matches_kalman(linear_problem_2d):
    prior, y, _, _, model, exact = linear_problem_2d
    rng = np.random.default_rng(8)
    n = 10000
    states = rng.multivariate_normal(prior.mean, prior.cov, size=n)
    updated = enkf_update(states, y, model, rng)

    stderr = np.sqrt(np.diag(exact.cov) / n)
    # sampled gain and perturbations roughly double the spread of the estimate
    assert np.all(np.abs(updated.mean(axis=0) - exact.mean) <= 5.0 * 2.0 * stderr)
    np.testing.assert_allclose(np.cov(updated.T), exact.cov, atol=0.1 * np.max(exact.cov))
