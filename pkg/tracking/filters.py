"""
Filter registry for the tracking benchmark.

Every filter exposes the same recursive interface: ``initialize`` with the
initial belief and a random stream, then one ``step`` per time step that
predicts with the assumed (F, Q), updates with the step's measurement model
and returns the state estimate. Ids are ``kalman``, ``ekf``, ``ukf``, ``pf``,
``enkf``, ``mm`` and ``ef_<alpha>``.
"""

import logging
import re
from abc import ABC, abstractmethod
from typing import Callable, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from baselines.ensemble import EnsembleFilterParams, enkf_update
from baselines.kalman import ekf_update, kalman_update
from baselines.moment_matching import moment_matching_update
from baselines.particle import ParticleEnsemble, ParticleFilterParams, pf_step
from baselines.unscented import UkfParams, ukf_update
from core.errors import ConfigError
from filters.efkf import FilterTrace, efkf_update
from filters.energy import AlphaConfig
from filters.models import MeasurementModel
from filters.prediction import predict
from gaussian.belief import GaussianBelief, symmetrize


logger = logging.getLogger(__name__)


EF_PATTERN = re.compile(r"^ef_(?P<alpha>\d*\.?\d+(?:[eE][-+]?\d+)?)$")


class EfSettings(BaseModel):
    """EFKF hyperparameters shared by every ``ef_<alpha>`` filter."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    samples: int = Field(default=64, ge=1, description="Monte-Carlo draws S per iteration")
    iterations: int = Field(default=100, ge=1, description="Natural-gradient iterations I")
    step0: float = Field(default=0.5, ge=0.0, description="Initial step size")
    step_decay: float = Field(default=0.0, ge=0.0, description="Polynomial step decay exponent")
    fixed_crn: bool = Field(default=False, description="Reuse one draw across iterations")

    def alpha_config(self, alpha: float, seed: int = 0) -> AlphaConfig:
        return AlphaConfig(alpha=alpha, seed=seed, **self.model_dump())


class FilterSettings(BaseModel):
    """Per-family hyperparameters used when building filters."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    ef: EfSettings = Field(default_factory=EfSettings)
    ukf: UkfParams = Field(default_factory=UkfParams)
    pf: ParticleFilterParams = Field(default_factory=ParticleFilterParams)
    enkf: EnsembleFilterParams = Field(default_factory=EnsembleFilterParams)
    mm_samples: int = Field(default=2000, ge=100, description="Importance draws of the mm filter")


class TrackingFilter(ABC):
    """
    Recursive filter over the CV state.

    Subclasses implement ``initialize`` and ``_step``; ``step`` returns the
    posterior state estimate after each measurement.
    """

    def __init__(self, filter_id: str):
        self.filter_id = filter_id
        self.rng: Optional[np.random.Generator] = None

    @abstractmethod
    def initialize(self, belief: GaussianBelief, rng: np.random.Generator) -> None:
        """Reset the filter to ``belief`` and bind its random stream."""

    @abstractmethod
    def step(self, F: np.ndarray, Q: np.ndarray, y: np.ndarray, model: MeasurementModel) -> np.ndarray:
        """Predict with (F, Q), update with y and return the state estimate."""


class GaussianTrackingFilter(TrackingFilter):
    """Filters that carry a GaussianBelief between steps."""

    def __init__(self, filter_id: str):
        super().__init__(filter_id)
        self.belief: Optional[GaussianBelief] = None

    def initialize(self, belief: GaussianBelief, rng: np.random.Generator) -> None:
        self.belief = belief
        self.rng = rng

    def step(self, F: np.ndarray, Q: np.ndarray, y: np.ndarray, model: MeasurementModel) -> np.ndarray:
        prior = predict(self.belief, F, Q)
        self.belief = self._update(prior, y, model)
        return self.belief.mean

    @abstractmethod
    def _update(self, prior: GaussianBelief, y: np.ndarray, model: MeasurementModel) -> GaussianBelief:
        pass


class KalmanFilter(GaussianTrackingFilter):
    """Exact Kalman filter; needs a linear measurement model."""

    def _update(self, prior, y, model):
        if not model.is_linear:
            raise ConfigError("The kalman filter requires linear measurements", details={"filter": self.filter_id})
        return kalman_update(prior, y, model.H, model.noise_cov)


class ExtendedKalmanFilter(GaussianTrackingFilter):
    def _update(self, prior, y, model):
        return ekf_update(prior, y, model)


class UnscentedKalmanFilter(GaussianTrackingFilter):
    def __init__(self, filter_id: str, params: UkfParams):
        super().__init__(filter_id)
        self.params = params

    def _update(self, prior, y, model):
        return ukf_update(prior, y, model, self.params)


class MomentMatchingFilter(GaussianTrackingFilter):
    def __init__(self, filter_id: str, n_samples: int):
        super().__init__(filter_id)
        self.n_samples = n_samples

    def _update(self, prior, y, model):
        return moment_matching_update(prior, y, model, self.n_samples, self.rng)


class EnergyFunctionFilter(GaussianTrackingFilter):
    """EFKF with a fixed alpha; keeps the trace of every update."""

    def __init__(self, filter_id: str, config: AlphaConfig):
        super().__init__(filter_id)
        self.config = config
        self.traces: List[FilterTrace] = []

    def initialize(self, belief, rng):
        super().initialize(belief, rng)
        self.traces = []

    def _update(self, prior, y, model):
        posterior, trace = efkf_update(prior, y, model, self.config, self.rng)
        self.traces.append(trace)
        return posterior


class ParticleFilter(TrackingFilter):
    """Bootstrap particle filter; the estimate is the weighted particle mean."""

    def __init__(self, filter_id: str, params: ParticleFilterParams):
        super().__init__(filter_id)
        self.params = params
        self.ensemble: Optional[ParticleEnsemble] = None

    def initialize(self, belief, rng):
        self.rng = rng
        self.ensemble = ParticleEnsemble.from_belief(belief, self.params.n_particles, rng)

    def step(self, F, Q, y, model):
        self.ensemble = pf_step(self.ensemble, y, F, Q, model, self.rng, self.params)
        return self.ensemble.mean()


class EnsembleKalmanFilter(TrackingFilter):
    """Stochastic EnKF; members are propagated with draws from the assumed Q."""

    def __init__(self, filter_id: str, params: EnsembleFilterParams):
        super().__init__(filter_id)
        self.params = params
        self.states: Optional[np.ndarray] = None

    def initialize(self, belief, rng):
        self.rng = rng
        self.states = ParticleEnsemble.from_belief(belief, self.params.n_members, rng).particles

    def step(self, F, Q, y, model):
        F = np.asarray(F, dtype=float)
        noise = self.rng.multivariate_normal(
            np.zeros(F.shape[0]), symmetrize(Q), size=self.states.shape[0], method="eigh"
        )
        forecast = self.states @ F.T + noise
        self.states = enkf_update(forecast, y, model, self.rng, self.params.perturb)
        return self.states.mean(axis=0)


FilterBuilder = Callable[[str, FilterSettings], TrackingFilter]


FILTER_REGISTRY: Dict[str, FilterBuilder] = {
    "kalman": lambda filter_id, settings: KalmanFilter(filter_id),
    "ekf": lambda filter_id, settings: ExtendedKalmanFilter(filter_id),
    "ukf": lambda filter_id, settings: UnscentedKalmanFilter(filter_id, settings.ukf),
    "pf": lambda filter_id, settings: ParticleFilter(filter_id, settings.pf),
    "enkf": lambda filter_id, settings: EnsembleKalmanFilter(filter_id, settings.enkf),
    "mm": lambda filter_id, settings: MomentMatchingFilter(filter_id, settings.mm_samples),
}


def parse_ef_alpha(filter_id: str) -> Optional[float]:
    """
    Alpha of an ``ef_<alpha>`` id, or None for other ids.

    Raises:
        ConfigError: If the id has the ef_ prefix but alpha is outside (0, 1]
    """
    if not filter_id.startswith("ef_"):
        return None
    match = EF_PATTERN.match(filter_id)
    if match is None:
        raise ConfigError(f"Malformed EFKF filter id '{filter_id}'; expected ef_<alpha>")
    alpha = float(match.group("alpha"))
    if not 0.0 < alpha <= 1.0:
        raise ConfigError(f"EFKF alpha must lie in (0, 1], got {alpha} from '{filter_id}'")
    return alpha


def validate_filter_id(filter_id: str) -> str:
    """
    Check that a filter id is known.

    Raises:
        ConfigError: For unknown or malformed ids
    """
    if filter_id in FILTER_REGISTRY or parse_ef_alpha(filter_id) is not None:
        return filter_id
    raise ConfigError(
        f"Unknown filter '{filter_id}'; known: {sorted(FILTER_REGISTRY)} and ef_<alpha>",
        details={"filter": filter_id}
    )


def build_filter(filter_id: str, settings: Optional[FilterSettings] = None) -> TrackingFilter:
    """
    Instantiate a filter by id.

    Args:
        filter_id: Registry id or ``ef_<alpha>``
        settings: Hyperparameters (defaults when omitted)

    Returns:
        Uninitialized TrackingFilter

    Raises:
        ConfigError: For unknown ids
    """
    settings = settings or FilterSettings()
    validate_filter_id(filter_id)
    alpha = parse_ef_alpha(filter_id)
    if alpha is not None:
        return EnergyFunctionFilter(filter_id, settings.ef.alpha_config(alpha))
    return FILTER_REGISTRY[filter_id](filter_id, settings)
