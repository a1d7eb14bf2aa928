import numpy as np
import pytest

from bench.schemas import DEFAULT_FILTERS, BenchConfig, load_bench_config
from core.errors import ConfigError
from tracking.scenario import MATCH_LABEL


def write(tmp_path, text: str):
    path = tmp_path / "bench.yaml"
    path.write_text(text, encoding="utf-8")
    return path


def test_defaults_describe_the_full_grid():
    config = BenchConfig()
    assert config.filters == DEFAULT_FILTERS
    scenario = config.to_scenario()
    assert scenario.column_labels == ["0.01xI", "0.05xI", "0.1xI", "0.5xI", MATCH_LABEL]
    assert scenario.n_runs == 100
    assert scenario.horizon == 30
    assert len(scenario.sensors.positions) == 9
    np.testing.assert_allclose(scenario.init_belief.cov, 10.0 * np.eye(4))


def test_empty_file_gives_defaults(tmp_path):
    assert load_bench_config(write(tmp_path, "")).n_runs == 100


def test_loads_nested_settings(tmp_path):
    config = load_bench_config(write(tmp_path, """
seed: 3
n_runs: 2
measurement_noise: [[2.0, 0.1, 0.0], [0.1, 2.0, 0.0], [0.0, 0.0, 1.0]]
sensors:
  positions: [[0, 0], [10, 0], [0, 10], [10, 10]]
  active_rule: round_robin
filters: [ekf, ef_0.3]
filter_settings:
  ef: {samples: 8, fixed_crn: true}
"""))
    assert config.filter_settings.ef.samples == 8
    assert config.filter_settings.ef.fixed_crn
    scenario = config.to_scenario()
    assert scenario.meas_noise[0, 1] == pytest.approx(0.1)
    assert scenario.sensors.active_rule.value == "round_robin"


@pytest.mark.parametrize("text", [
    "n_runs: 5\nunknown_key: 1\n",
    "filter_settings:\n  ef: {sampels: 8}\n",
    "filters: [ekf, lstm]\n",
    "filters: [ekf, ekf]\n",
    "filters: [ef_1.5]\n",
    "filters: [kalman]\n",
    "mismatch_scales: []\ninclude_match: false\n",
    "mismatch_scales: [-0.1]\n",
    "measurement: bearing\n",
    "init_state: [0, 0]\n",
    "sensors: {positions: [[0, 0], [1, 1]]}\n",
    "output: {paths: {enabled: true, filters: [pf], column: Q_CV}}\nfilters: [ekf]\n",
    "output: {paths: {enabled: true, filters: [ekf], column: 3xI}}\nfilters: [ekf]\n",
    "- just\n- a list\n",
    "n_runs: [unclosed\n",
])
def test_invalid_configs_raise(tmp_path, text):
    with pytest.raises(ConfigError):
        load_bench_config(write(tmp_path, text))


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_bench_config(tmp_path / "absent.yaml")


def test_non_positive_definite_noise_fails_at_scenario():
    config = BenchConfig(measurement_noise=[1.0, 0.0, 1.0])
    with pytest.raises(ConfigError):
        config.to_scenario()


def test_kalman_allowed_with_linear_measurements():
    config = BenchConfig(measurement="linear", filters=["kalman", "ekf"])
    assert config.to_scenario().linear_measurements
