"""Stationary covariance functions: Matern-5/2, Matern-3/2 and RBF."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

SQRT3 = np.sqrt(3.0)
SQRT5 = np.sqrt(5.0)


class Family(str, enum.Enum):
    MATERN52 = "matern52"
    MATERN32 = "matern32"
    RBF = "rbf"

    @property
    def nu(self) -> float:
        """Matern smoothness; RBF is the infinite-smoothness limit."""
        return {"matern52": 2.5, "matern32": 1.5, "rbf": np.inf}[self.value]


@dataclass(frozen=True)
class Kernel:
    """Isotropic kernel ``variance * rho(r / lengthscale)``."""

    family: Family = Family.MATERN52
    lengthscale: float = 1.0
    variance: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        if not (self.lengthscale > 0 and np.isfinite(self.lengthscale)):
            raise ValueError(f"lengthscale must be positive, got {self.lengthscale}")
        if not (self.variance > 0 and np.isfinite(self.variance)):
            raise ValueError(f"variance must be positive, got {self.variance}")

    def correlation(self, r):
        """Correlation as a function of distance ``r`` (array-friendly)."""
        s = np.asarray(r, dtype=float) / self.lengthscale
        if self.family is Family.MATERN52:
            return (1.0 + SQRT5 * s + 5.0 / 3.0 * s**2) * np.exp(-SQRT5 * s)
        if self.family is Family.MATERN32:
            return (1.0 + SQRT3 * s) * np.exp(-SQRT3 * s)
        return np.exp(-0.5 * s**2)

    def with_params(self, lengthscale=None, variance=None) -> "Kernel":
        return Kernel(
            self.family,
            self.lengthscale if lengthscale is None else lengthscale,
            self.variance if variance is None else variance,
        )

    def __call__(self, X, Y=None):
        return kernel_matrix(self, X, X if Y is None else Y)


def as_points(X) -> np.ndarray:
    """Coerce to an ``(n, d)`` float array; a 1-D input is read as n points in 1-D."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 0:
        return X.reshape(1, 1)
    if X.ndim == 1:
        return X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError(f"expected a point list of shape (n, d), got shape {X.shape}")
    return X


def _as_point(x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1:
        raise ValueError(f"expected a single point, got shape {x.shape}")
    return x


def kernel_eval(kernel: Kernel, x, y) -> float:
    x, y = _as_point(x), _as_point(y)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    r = float(np.sqrt(np.sum((x - y) ** 2)))
    return float(kernel.variance * kernel.correlation(r))


def kernel_matrix(kernel: Kernel, X, Y) -> np.ndarray:
    """Cross-covariance matrix with entries ``k(X[i], Y[j])``."""
    X, Y = as_points(X), as_points(Y)
    if X.shape[1] != Y.shape[1]:
        raise ValueError(f"dimension mismatch: {X.shape[1]} vs {Y.shape[1]}")
    if X.shape[0] == 0 or Y.shape[0] == 0:
        return np.zeros((X.shape[0], Y.shape[0]))
    r = cdist(X, Y)
    return kernel.variance * kernel.correlation(r)
