import numpy as np
import pytest
from pydantic import ValidationError

from filters.models import check_jacobian
from tracking.sensors import (
    ActiveRule,
    SensorField,
    linear_position_model,
    measure,
    range_sensor_model,
)


def test_range_is_euclidean_distance():
    model = range_sensor_model(np.zeros((1, 2)), np.eye(1))
    assert model.h(np.array([3.0, 7.0, 4.0, -2.0]))[0] == pytest.approx(5.0)


def test_batched_observation_shapes():
    model = range_sensor_model(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.eye(3))
    points = np.zeros((6, 4))
    assert model.h(points).shape == (6, 3)
    assert model.jacobian_h(points).shape == (6, 3, 4)


def test_zero_distance_gives_zero_row():
    model = range_sensor_model(np.array([[2.0, 3.0], [0.0, 0.0], [5.0, 5.0]]), np.eye(3))
    jac = model.jacobian_h(np.array([2.0, 1.0, 3.0, 1.0]))
    np.testing.assert_array_equal(jac[0], 0.0)
    assert np.all(np.isfinite(jac))


def test_jacobian_matches_finite_differences():
    model = range_sensor_model(np.array([[10.0, -4.0], [-7.0, 3.0], [2.0, 12.0]]), np.eye(3))
    assert check_jacobian(model, np.array([1.5, 0.3, -2.0, 1.1])) <= 1e-6


def test_grid_and_nearest_selection():
    field = SensorField.grid(per_side=3, extent=10.0)
    assert len(field.positions) == 9
    active = field.select(np.array([9.0, 0.0, 9.0, 0.0]), t=0)
    assert len(active) == 3
    coordinates = field.coordinates()
    np.testing.assert_array_equal(coordinates[active[0]], [10.0, 10.0])
    assert {tuple(coordinates[i]) for i in active[1:]} == {(0.0, 10.0), (10.0, 0.0)}


def test_round_robin_cycles():
    field = SensorField.grid(per_side=2, extent=1.0, active_rule=ActiveRule.ROUND_ROBIN)
    np.testing.assert_array_equal(field.select(np.zeros(4), 0), [0, 1, 2])
    np.testing.assert_array_equal(field.select(np.zeros(4), 1), [3, 0, 1])


def test_field_needs_three_sensors():
    with pytest.raises(ValidationError):
        SensorField(positions=[(0.0, 0.0), (1.0, 1.0)])


def test_noiseless_measurement():
    field = SensorField(positions=[(0.0, 0.0), (6.0, 0.0), (0.0, 8.0), (100.0, 100.0)])
    item = measure(np.array([0.0, 1.0, 0.0, 1.0]), field, 0, np.eye(3))
    np.testing.assert_array_equal(item.active_ids, [0, 1, 2])
    np.testing.assert_allclose(item.y, [0.0, 6.0, 8.0])
    assert not item.model.is_linear


def test_linear_stub():
    model = linear_position_model(np.eye(3))
    assert model.is_linear
    np.testing.assert_allclose(model.h(np.array([1.0, 9.0, 1.0, 9.0])), [1.0, 1.0, np.sqrt(2.0)])
    field = SensorField.grid()
    item = measure(np.array([3.0, 0.0, 4.0, 0.0]), field, 0, np.eye(3), linear=True)
    assert item.model.is_linear
