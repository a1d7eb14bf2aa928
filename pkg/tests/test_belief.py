import numpy as np
import pytest

from core.errors import DimensionMismatch, FilterError, NotPositiveDefinite
from gaussian.belief import (
    CholeskyFactor,
    GaussianBelief,
    NaturalParams,
    cholesky,
    cholesky_with_jitter,
    symmetrize,
)


def test_errors_carry_type_and_details():
    error = NotPositiveDefinite("bad", details={"min_diag": -1.0})
    assert isinstance(error, FilterError)
    assert error.error_type == "not_positive_definite"
    assert error.details == {"min_diag": -1.0}
    assert FilterError("x", error_type="custom").error_type == "custom"


def test_symmetrize_rejects_non_square():
    with pytest.raises(DimensionMismatch):
        symmetrize(np.ones((2, 3)))


def test_cholesky_reconstructs(rng, spd):
    cov = spd(rng, 4)
    factor = cholesky(cov)
    np.testing.assert_allclose(factor.reconstruct(), cov, atol=1e-12)
    assert factor.log_det() == pytest.approx(np.linalg.slogdet(cov)[1], abs=1e-12)
    np.testing.assert_allclose(factor.inverse(), np.linalg.inv(cov), atol=1e-10)


def test_cholesky_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_factor_must_be_lower_triangular():
    with pytest.raises(DimensionMismatch):
        CholeskyFactor(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_jitter_repairs_singular_matrix():
    singular = np.array([[1.0, 1.0], [1.0, 1.0]])
    factor, delta = cholesky_with_jitter(singular)
    assert 0.0 < delta <= 1e-6
    np.testing.assert_allclose(factor.reconstruct(), singular + delta * np.eye(2), atol=1e-12)


def test_jitter_gives_up_beyond_maximum():
    with pytest.raises(NotPositiveDefinite):
        cholesky_with_jitter(np.diag([1.0, -1.0]))


def test_belief_symmetrizes_and_freezes():
    belief = GaussianBelief([1.0, 2.0], [[2.0, 0.5], [0.3, 1.0]])
    np.testing.assert_allclose(belief.cov, [[2.0, 0.4], [0.4, 1.0]])
    with pytest.raises(ValueError):
        belief.mean[0] = 5.0


def test_belief_rejects_bad_shapes():
    with pytest.raises(DimensionMismatch):
        GaussianBelief(np.zeros(3), np.eye(2))


def test_natural_round_trip(rng, spd):
    belief = GaussianBelief(rng.standard_normal(3), spd(rng, 3))
    natural = belief.to_natural()
    np.testing.assert_allclose(natural.precision @ belief.mean, natural.eta, atol=1e-12)
    back = natural.to_canonical()
    np.testing.assert_allclose(back.mean, belief.mean, atol=1e-10)
    np.testing.assert_allclose(back.cov, belief.cov, atol=1e-10)


def test_natural_difference_may_be_indefinite():
    cavity = NaturalParams(np.zeros(2), np.eye(2)) - NaturalParams(np.ones(2), 2.0 * np.eye(2))
    np.testing.assert_allclose(cavity.precision, -np.eye(2))
    with pytest.raises(NotPositiveDefinite):
        cavity.to_canonical()
