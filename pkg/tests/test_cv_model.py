import numpy as np
import pytest
from pydantic import ValidationError

from core.errors import DimensionMismatch
from tracking.cv_model import CvModel, simulate_trajectory


def test_transition_and_noise_blocks():
    cv = CvModel()
    F = cv.transition_matrix()
    Q = cv.process_noise()
    block_f = np.array([[1.0, 1.0], [0.0, 1.0]])
    block_q = np.array([[0.25, 0.5], [0.5, 1.0]])
    np.testing.assert_array_equal(F[:2, :2], block_f)
    np.testing.assert_array_equal(F[2:, 2:], block_f)
    np.testing.assert_array_equal(F[:2, 2:], 0.0)
    np.testing.assert_allclose(Q[:2, :2], block_q)
    np.testing.assert_allclose(Q[2:, 2:], block_q)
    assert np.linalg.matrix_rank(Q) == 2


def test_noise_scales_with_dt_and_intensity():
    Q = CvModel(dt=2.0, sigma_cv=0.5).process_noise()
    np.testing.assert_allclose(Q[:2, :2], 0.5 * np.array([[4.0, 4.0], [4.0, 4.0]]))


def test_invalid_parameters():
    with pytest.raises(ValidationError):
        CvModel(dt=0.0)
    with pytest.raises(ValidationError):
        CvModel(sigma_cv=-1.0)


def test_noiseless_trajectory_is_a_straight_line():
    cv = CvModel(sigma_cv=0.0)
    states = simulate_trajectory(cv, np.array([0.0, 1.0, 5.0, -0.5]), 3, np.random.default_rng(0))
    np.testing.assert_allclose(states[:, 0], [1.0, 2.0, 3.0])
    np.testing.assert_allclose(states[:, 2], [4.5, 4.0, 3.5])
    np.testing.assert_allclose(states[:, 1], 1.0)


def test_trajectory_is_seeded():
    cv = CvModel()
    first = simulate_trajectory(cv, np.zeros(4), 10, np.random.default_rng(4))
    second = simulate_trajectory(cv, np.zeros(4), 10, np.random.default_rng(4))
    assert first.shape == (10, 4)
    np.testing.assert_array_equal(first, second)


def test_trajectory_validation():
    with pytest.raises(DimensionMismatch):
        simulate_trajectory(CvModel(), np.zeros(3), 5, np.random.default_rng(0))
    with pytest.raises(ValueError):
        simulate_trajectory(CvModel(), np.zeros(4), 0, np.random.default_rng(0))
