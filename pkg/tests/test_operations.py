import math

import numpy as np
import pytest
from scipy import integrate, stats

from core.errors import BlendNotPositiveDefinite, DimensionMismatch
from gaussian.belief import GaussianBelief
from gaussian.operations import (
    alpha_divergence_gaussian,
    cavity_log_f,
    kl_divergence,
    log_alpha_integral,
    log_density,
    log_partition,
    log_partition_gradients,
    sample_reparam,
)


@pytest.fixture
def pair(rng, spd):
    p = GaussianBelief(np.array([0.3, -0.2, 0.1]), spd(rng, 3))
    q = GaussianBelief(np.array([-0.1, 0.4, 0.2]), spd(rng, 3))
    return p, q


def test_log_partition_scalar():
    belief = GaussianBelief([2.0], [[4.0]])
    assert log_partition(belief) == pytest.approx(0.5 * 4.0 / 4.0 + 0.5 * math.log(4.0))


def test_log_partition_gradients_match_finite_differences(rng, spd):
    belief = GaussianBelief(rng.standard_normal(3), spd(rng, 3))
    grad_mean, grad_cov = log_partition_gradients(belief)
    step = 1e-6

    for i in range(3):
        offset = np.zeros(3)
        offset[i] = step
        numeric = (
            log_partition(GaussianBelief(belief.mean + offset, belief.cov))
            - log_partition(GaussianBelief(belief.mean - offset, belief.cov))
        ) / (2 * step)
        assert grad_mean[i] == pytest.approx(numeric, abs=1e-6)

    for i in range(3):
        for j in range(i + 1):
            bump = np.zeros((3, 3))
            bump[i, j] = bump[j, i] = step
            numeric = (
                log_partition(GaussianBelief(belief.mean, belief.cov + bump))
                - log_partition(GaussianBelief(belief.mean, belief.cov - bump))
            ) / (2 * step)
            expected = numeric if i == j else numeric / 2
            assert grad_cov[i, j] == pytest.approx(expected, abs=1e-6)


def test_sample_reparam_shapes_and_values():
    belief = GaussianBelief([1.0, -1.0], [[4.0, 0.0], [0.0, 9.0]])
    single = sample_reparam(belief.mean, belief.factor(), np.array([1.0, 1.0]))
    np.testing.assert_allclose(single, [3.0, 2.0])
    batch = sample_reparam(belief.mean, belief.factor(), np.zeros((5, 2)))
    assert batch.shape == (5, 2)
    np.testing.assert_allclose(batch, np.tile(belief.mean, (5, 1)))


def test_sample_reparam_rejects_wrong_dimension():
    belief = GaussianBelief(np.zeros(2), np.eye(2))
    with pytest.raises(DimensionMismatch):
        sample_reparam(belief.mean, belief.factor(), np.zeros((4, 3)))


def test_log_density_matches_scipy(pair, rng):
    p, _ = pair
    points = rng.standard_normal((7, 3))
    expected = stats.multivariate_normal(p.mean, p.cov).logpdf(points)
    np.testing.assert_allclose(log_density(p, points), expected, rtol=1e-10)
    assert log_density(p, points[0]) == pytest.approx(expected[0], rel=1e-10)


def test_cavity_vanishes_when_q_is_prior(pair, rng):
    p, _ = pair
    natural = p.to_natural()
    np.testing.assert_allclose(cavity_log_f(rng.standard_normal((4, 3)), natural, natural), 0.0, atol=1e-12)


def test_cavity_equals_log_density_ratio(pair, rng):
    p, q = pair
    points = rng.standard_normal((6, 3))
    expected = log_density(q, points) - log_density(p, points) + log_partition(q) - log_partition(p)
    np.testing.assert_allclose(cavity_log_f(points, q.to_natural(), p.to_natural()), expected, rtol=1e-9, atol=1e-9)


def test_kl_divergence_properties(pair):
    p, q = pair
    assert kl_divergence(p, p) == pytest.approx(0.0, abs=1e-12)
    assert kl_divergence(p, q) > 0.0

    one = GaussianBelief([0.0], [[1.0]])
    two = GaussianBelief([1.0], [[2.0]])
    expected = 0.5 * (1.0 / 2.0 + 1.0 / 2.0 - 1.0 + math.log(2.0))
    assert kl_divergence(one, two) == pytest.approx(expected)


def test_alpha_integral_is_zero_on_identical_beliefs(pair):
    p, _ = pair
    assert log_alpha_integral(p, p, 0.3) == pytest.approx(0.0, abs=1e-12)


def test_alpha_divergence_half_is_symmetric(pair):
    p, q = pair
    assert alpha_divergence_gaussian(p, q, 0.5) == pytest.approx(alpha_divergence_gaussian(q, p, 0.5), rel=1e-10)


@pytest.mark.parametrize("alpha,reference", [(1e-3, "q_p"), (1.0 - 1e-3, "p_q")])
def test_alpha_divergence_limits_approach_kl(pair, alpha, reference):
    p, q = pair
    kl = kl_divergence(q, p) if reference == "q_p" else kl_divergence(p, q)
    assert alpha_divergence_gaussian(p, q, alpha) == pytest.approx(kl, rel=1e-2)


def test_alpha_divergence_matches_quadrature():
    p = GaussianBelief([0.0], [[1.0]])
    q = GaussianBelief([1.0], [[1.0]])
    integral, _ = integrate.quad(
        lambda x: stats.norm.pdf(x, 0.0, 1.0) ** 0.5 * stats.norm.pdf(x, 1.0, 1.0) ** 0.5,
        -np.inf,
        np.inf
    )
    expected = (1.0 - integral) / 0.25
    assert alpha_divergence_gaussian(p, q, 0.5) == pytest.approx(expected, rel=1e-8)
    assert expected == pytest.approx(4.0 * (1.0 - math.exp(-0.125)), rel=1e-8)


def test_alpha_divergence_rejects_endpoints(pair):
    p, q = pair
    with pytest.raises(ValueError):
        alpha_divergence_gaussian(p, q, 1.0)


def test_blend_outside_unit_interval_can_diverge():
    wide = GaussianBelief(np.zeros(2), 10.0 * np.eye(2))
    narrow = GaussianBelief(np.zeros(2), 0.1 * np.eye(2))
    with pytest.raises(BlendNotPositiveDefinite):
        log_alpha_integral(wide, narrow, 1.5)
