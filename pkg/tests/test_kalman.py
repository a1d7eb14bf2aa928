import numpy as np
import pytest
from scipy import integrate, stats

from baselines.kalman import ekf_update, exact_linear_energy, kalman_update, log_evidence_linear
from core.errors import DimensionMismatch
from gaussian.belief import GaussianBelief
from tracking.sensors import range_sensor_model


def test_scalar_update():
    posterior = kalman_update(GaussianBelief([0.0], [[1.0]]), [2.0], [[1.0]], [[1.0]])
    assert posterior.mean[0] == pytest.approx(1.0)
    assert posterior.cov[0, 0] == pytest.approx(0.5)


def test_uninformative_measurement_keeps_prior(rng, spd):
    prior = GaussianBelief(rng.standard_normal(3), spd(rng, 3))
    posterior = kalman_update(prior, np.ones(2), np.zeros((2, 3)), np.eye(2))
    np.testing.assert_array_equal(posterior.mean, prior.mean)
    np.testing.assert_allclose(posterior.cov, prior.cov, atol=1e-14)


def test_matches_numerical_integration():
    prior = GaussianBelief([0.3], [[0.8]])
    h, r, y = 1.5, 0.4, 1.1
    posterior = kalman_update(prior, [y], [[h]], [[r]])

    def joint(x):
        return stats.norm.pdf(x, 0.3, np.sqrt(0.8)) * stats.norm.pdf(y, h * x, np.sqrt(r))

    evidence, _ = integrate.quad(joint, -15.0, 15.0)
    mean = integrate.quad(lambda x: x * joint(x), -15.0, 15.0)[0] / evidence
    var = integrate.quad(lambda x: (x - mean) ** 2 * joint(x), -15.0, 15.0)[0] / evidence

    assert posterior.mean[0] == pytest.approx(mean, abs=1e-6)
    assert posterior.cov[0, 0] == pytest.approx(var, abs=1e-6)
    assert log_evidence_linear(prior, [y], [[h]], [[r]]) == pytest.approx(np.log(evidence), abs=1e-6)


def test_shape_validation():
    prior = GaussianBelief(np.zeros(2), np.eye(2))
    with pytest.raises(DimensionMismatch):
        kalman_update(prior, np.zeros(2), np.eye(3), np.eye(2))


def test_ekf_jacobian_row_for_range_sensor():
    model = range_sensor_model(np.zeros((1, 2)), np.eye(1))
    np.testing.assert_allclose(model.jacobian_h(np.array([3.0, 0.0, 4.0, 0.0])), [[0.6, 0.0, 0.8, 0.0]])


def test_ekf_matches_textbook_update():
    prior = GaussianBelief([3.0, 0.5, 4.0, -0.5], np.diag([2.0, 0.5, 2.0, 0.5]))
    sensors = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
    R = 0.5 * np.eye(3)
    model = range_sensor_model(sensors, R)
    y = np.array([5.2, 8.3, 6.9])

    H = model.jacobian_h(prior.mean)
    P = prior.cov
    K = P @ H.T @ np.linalg.inv(H @ P @ H.T + R)
    expected_mean = prior.mean + K @ (y - model.h(prior.mean))
    expected_cov = (np.eye(4) - K @ H) @ P

    posterior = ekf_update(prior, y, model)
    np.testing.assert_allclose(posterior.mean, expected_mean, atol=1e-9)
    np.testing.assert_allclose(posterior.cov, expected_cov, atol=1e-9)


def test_ekf_equals_kalman_on_linear_model(linear_problem):
    prior, y, H, R, model, exact = linear_problem
    posterior = ekf_update(prior, y, model)
    np.testing.assert_allclose(posterior.mean, exact.mean, atol=1e-12)
    np.testing.assert_allclose(posterior.cov, exact.cov, atol=1e-12)


def test_exact_energy_is_minimized_by_posterior(linear_problem):
    prior, y, H, R, _, exact = linear_problem
    evidence_energy = -log_evidence_linear(prior, y, H, R)
    assert exact_linear_energy(exact, prior, y, H, R, 0.5) == pytest.approx(evidence_energy, abs=1e-9)

    shifted = GaussianBelief(exact.mean + 0.1, exact.cov)
    assert exact_linear_energy(shifted, prior, y, H, R, 0.5) > evidence_energy
    assert exact_linear_energy(prior, prior, y, H, R, 0.5) > evidence_energy
