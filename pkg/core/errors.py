"""
Exception hierarchy for the filtering library.

Every failure raised by the numerical code derives from FilterError so that
callers (the tracking runner, the CLI) can catch one type, record the
``error_type`` and decide how to proceed.
"""

from typing import Any, Dict, Optional


class FilterError(Exception):
    """Base exception for numerical and configuration failures."""

    default_error_type = "filter_error"

    def __init__(
        self,
        message: str,
        error_type: Optional[str] = None,
        details: Optional[Dict[str, Any]] = None
    ):
        """
        Initialize filter exception.

        Args:
            message: Error message
            error_type: Machine-readable error kind (defaults to the class kind)
            details: Additional error details
        """
        super().__init__(message)
        self.error_type = error_type or self.default_error_type
        self.details = details or {}


class NotPositiveDefinite(FilterError):
    """A covariance or precision matrix failed Cholesky factorization."""

    default_error_type = "not_positive_definite"


class DimensionMismatch(FilterError):
    """Array shapes passed to an operation do not agree."""

    default_error_type = "dimension_mismatch"


class BlendNotPositiveDefinite(FilterError):
    """The blended precision of an alpha-divergence integral is not PD."""

    default_error_type = "blend_not_positive_definite"


class NonFinite(FilterError):
    """A log-weight, likelihood or energy evaluated to NaN."""

    default_error_type = "non_finite"


class StepFailed(FilterError):
    """A natural-gradient step could not keep the covariance PD."""

    default_error_type = "step_failed"


class DegenerateWeights(FilterError):
    """Importance weights collapsed below the usable effective sample size."""

    default_error_type = "degenerate_weights"


class AllWeightsZero(FilterError):
    """Particle log-weights are all non-finite."""

    default_error_type = "all_weights_zero"


class SingularEnsemble(FilterError):
    """Ensemble spread is too small to form a Kalman gain."""

    default_error_type = "singular_ensemble"


class ConfigError(FilterError):
    """Invalid benchmark or filter configuration."""

    default_error_type = "config_error"
