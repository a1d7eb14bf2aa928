"""
Gaussian value types in canonical and natural parameterization.

GaussianBelief stores (mean, covariance); NaturalParams stores
(precision @ mean, precision). Covariances are symmetrized on construction
and validated by Cholesky factorization; precisions are obtained from the
factor on demand.
"""

import logging
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy import linalg

from core.errors import DimensionMismatch, NotPositiveDefinite


logger = logging.getLogger(__name__)


JITTER_START = 1e-10
JITTER_MAX = 1e-6


def as_vector(x: np.ndarray) -> np.ndarray:
    """Flatten (d,), (d, 1) or (1, d) input into a float (d,) vector."""
    return np.asarray(x, dtype=float).reshape(-1)


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    """
    Return (M + M^T) / 2 as a float array.

    Raises:
        DimensionMismatch: If the input is not a square matrix
    """
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatch(
            f"Expected a square matrix, got shape {matrix.shape}",
            details={"shape": matrix.shape}
        )
    return 0.5 * (matrix + matrix.T)


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class CholeskyFactor:
    """Lower-triangular factor C with C @ C.T equal to a covariance."""

    lower: np.ndarray

    def __post_init__(self):
        lower = np.atleast_2d(np.asarray(self.lower, dtype=float))
        if lower.ndim != 2 or lower.shape[0] != lower.shape[1]:
            raise DimensionMismatch(f"Cholesky factor must be square, got {lower.shape}")
        if np.any(np.triu(lower, k=1) != 0.0):
            raise DimensionMismatch("Cholesky factor must be lower triangular")
        if np.any(np.diag(lower) <= 0.0):
            raise NotPositiveDefinite("Cholesky factor must have a positive diagonal")
        object.__setattr__(self, "lower", _frozen(lower))

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def reconstruct(self) -> np.ndarray:
        """Return C @ C.T."""
        return self.lower @ self.lower.T

    def log_det(self) -> float:
        """Log-determinant of the factorized matrix."""
        return 2.0 * float(np.sum(np.log(np.diag(self.lower))))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve (C C^T) z = rhs."""
        return linalg.cho_solve((self.lower, True), rhs, check_finite=False)

    def whiten(self, rhs: np.ndarray) -> np.ndarray:
        """Solve C z = rhs."""
        return linalg.solve_triangular(self.lower, rhs, lower=True, check_finite=False)

    def inverse(self) -> np.ndarray:
        """Inverse of the factorized matrix, symmetrized."""
        return symmetrize(self.solve(np.eye(self.dim)))


def cholesky(cov: np.ndarray) -> CholeskyFactor:
    """
    Factorize a symmetric positive definite matrix.

    Args:
        cov: Symmetric matrix, d >= 1

    Returns:
        Lower-triangular factor with positive diagonal

    Raises:
        NotPositiveDefinite: If a pivot is not strictly positive
        DimensionMismatch: If the matrix is not square
    """
    cov = symmetrize(cov)
    if cov.shape[0] < 1:
        raise DimensionMismatch("Cannot factorize an empty matrix")
    if not np.all(np.isfinite(cov)):
        raise NotPositiveDefinite("Matrix has non-finite entries")

    try:
        lower = linalg.cholesky(cov, lower=True, check_finite=False)
    except linalg.LinAlgError as e:
        raise NotPositiveDefinite(
            f"Cholesky factorization failed: {e}",
            details={"min_diag": float(np.min(np.diag(cov)))}
        ) from e

    if np.any(np.diag(lower) <= 0.0):
        raise NotPositiveDefinite("Cholesky factorization produced a zero pivot")

    return CholeskyFactor(lower)


def cholesky_with_jitter(
    cov: np.ndarray,
    initial: float = JITTER_START,
    maximum: float = JITTER_MAX
) -> Tuple[CholeskyFactor, float]:
    """
    Factorize, adding delta * I when plain factorization fails.

    Delta starts at ``initial`` and doubles up to ``maximum``.

    Args:
        cov: Symmetric matrix
        initial: First jitter tried
        maximum: Largest jitter tried

    Returns:
        Tuple of (factor of cov + delta * I, delta); delta is 0.0 when no
        jitter was needed

    Raises:
        NotPositiveDefinite: If factorization fails even at ``maximum``
    """
    cov = symmetrize(cov)
    try:
        return cholesky(cov), 0.0
    except NotPositiveDefinite:
        pass

    identity = np.eye(cov.shape[0])
    delta = initial
    while True:
        try:
            factor = cholesky(cov + delta * identity)
            logger.warning(f"Covariance required jitter {delta:.3g} to factorize")
            return factor, delta
        except NotPositiveDefinite:
            if delta >= maximum:
                raise NotPositiveDefinite(
                    f"Matrix not positive definite even with jitter {maximum:g}",
                    details={"max_jitter": maximum}
                )
            delta = min(2.0 * delta, maximum)


@dataclass(frozen=True, eq=False)
class GaussianBelief:
    """
    Multivariate normal in canonical form.

    Attributes:
        mean: Mean vector, shape (d,)
        cov: Symmetric positive definite covariance, shape (d, d)
    """

    mean: np.ndarray
    cov: np.ndarray
    _factor: CholeskyFactor = field(init=False, repr=False)

    def __post_init__(self):
        mean = as_vector(self.mean)
        cov = symmetrize(self.cov)
        if cov.shape != (mean.size, mean.size):
            raise DimensionMismatch(
                f"Mean of length {mean.size} does not match covariance {cov.shape}",
                details={"mean": mean.shape, "cov": cov.shape}
            )
        if not np.all(np.isfinite(mean)):
            raise DimensionMismatch("Mean has non-finite entries")

        object.__setattr__(self, "mean", _frozen(mean))
        object.__setattr__(self, "cov", _frozen(cov))
        object.__setattr__(self, "_factor", cholesky(cov))

    @classmethod
    def with_jitter(cls, mean: np.ndarray, cov: np.ndarray) -> "GaussianBelief":
        """Build a belief, jittering the covariance if it lost definiteness."""
        _, delta = cholesky_with_jitter(cov)
        cov = symmetrize(cov)
        if delta > 0.0:
            cov = cov + delta * np.eye(cov.shape[0])
        return cls(mean, cov)

    @property
    def dim(self) -> int:
        return self.mean.size

    def factor(self) -> CholeskyFactor:
        """Cholesky factor of the covariance."""
        return self._factor

    def precision(self) -> np.ndarray:
        """Precision matrix, computed from the factor."""
        return self._factor.inverse()

    def to_natural(self) -> "NaturalParams":
        """Convert to (precision @ mean, precision)."""
        return NaturalParams(self._factor.solve(self.mean), self.precision())


@dataclass(frozen=True, eq=False)
class NaturalParams:
    """
    Gaussian natural parameters (eta, precision) = (Lambda mu, Lambda).

    Differences of two values (the cavity parameter) are allowed, so the
    precision is only required to be symmetric.
    """

    eta: np.ndarray
    precision: np.ndarray

    def __post_init__(self):
        eta = as_vector(self.eta)
        precision = symmetrize(self.precision)
        if precision.shape != (eta.size, eta.size):
            raise DimensionMismatch(
                f"eta of length {eta.size} does not match precision {precision.shape}"
            )
        object.__setattr__(self, "eta", _frozen(eta))
        object.__setattr__(self, "precision", _frozen(precision))

    @property
    def dim(self) -> int:
        return self.eta.size

    def __sub__(self, other: "NaturalParams") -> "NaturalParams":
        if other.dim != self.dim:
            raise DimensionMismatch(f"Cannot subtract dimension {other.dim} from {self.dim}")
        return NaturalParams(self.eta - other.eta, self.precision - other.precision)

    def to_canonical(self) -> GaussianBelief:
        """
        Convert back to (mean, covariance).

        Raises:
            NotPositiveDefinite: If the precision is not PD
        """
        factor = cholesky(self.precision)
        return GaussianBelief(factor.solve(self.eta), factor.inverse())
