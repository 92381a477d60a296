"""Exact zero-mean GP regression and marginal-likelihood hyperparameter search.

The posterior follows the usual Cholesky route::

    mu(x)      = k(x)^T (K + eta2 I)^{-1} y
    sigma^2(x) = k(x, x) - k(x)^T (K + eta2 I)^{-1} k(x)

with a small diagonal jitter (relative to the signal variance) that is
escalated when the factorization fails.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .errors import NumericalError
from .kernels import Family, Kernel, as_points, kernel_matrix

JITTER_START = 1e-8
JITTER_MAX = 1e-2
# clamp window for round-off negative variances, relative to max(1, variance)
VARIANCE_CLAMP = 1e-10
S2_FLOOR = 1e-6
LENGTHSCALE_BOUNDS = (1e-3, 10.0)


def _cholesky_with_jitter(K: np.ndarray, eta2: float, s2: float):
    n = K.shape[0]
    eye = np.eye(n)
    jitter = JITTER_START
    while jitter <= JITTER_MAX * (1 + 1e-12):
        A = K + (eta2 + jitter * s2) * eye
        try:
            return np.linalg.cholesky(A), jitter * s2
        except np.linalg.LinAlgError:
            jitter *= 10.0
    eig = np.linalg.eigvalsh(K + eta2 * eye)
    raise NumericalError(
        "Gram matrix factorization failed after jitter escalation to "
        f"{JITTER_MAX:g}*s2 (n={n}, eta2={eta2:g}, s2={s2:g}, "
        f"min eig={eig[0]:.3e}, max eig={eig[-1]:.3e}, "
        f"cond={abs(eig[-1] / eig[0]) if eig[0] != 0 else np.inf:.3e})"
    )


@dataclass(frozen=True)
class GpPosterior:
    kernel: Kernel
    X: np.ndarray
    y: np.ndarray
    eta2: float
    jitter: float = 0.0
    chol: np.ndarray = field(default=None, repr=False)
    alpha: np.ndarray = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def predict(self, x):
        mu, sd = self.predict_many(np.atleast_1d(np.asarray(x, dtype=float))[None, :])
        return float(mu[0]), float(sd[0])

    def cross_solve(self, Xq) -> np.ndarray:
        """``L^{-1} k(X, Xq)``, the quantity shared by the mean and variance."""
        Kq = kernel_matrix(self.kernel, self.X, Xq)
        return solve_triangular(self.chol, Kq, lower=True, check_finite=False)

    def predict_many(self, Xq):
        Xq = as_points(Xq)
        if self.n and Xq.shape[1] != self.dim:
            raise ValueError(f"dimension mismatch: {Xq.shape[1]} vs {self.dim}")
        if self.n == 0:
            m = Xq.shape[0]
            return np.zeros(m), np.full(m, np.sqrt(self.kernel.variance))
        V = self.cross_solve(Xq)
        w = solve_triangular(self.chol, self.y, lower=True, check_finite=False)
        return V.T @ w, std_from_reduction(self.kernel.variance, np.einsum("ij,ij->j", V, V))


def std_from_reduction(s2: float, explained) -> np.ndarray:
    """``sqrt(s2 - explained)`` with the round-off clamp policy."""
    var = s2 - np.asarray(explained)
    tol = VARIANCE_CLAMP * max(1.0, s2)
    if np.any(var < -tol):
        raise NumericalError(f"negative predictive variance {var.min():.3e} (s2={s2:g})")
    return np.sqrt(np.clip(var, 0.0, s2))


def gp_fit(kernel: Kernel, X, y, eta2: float = 0.0) -> GpPosterior:
    if eta2 < 0:
        raise ValueError("eta2 must be nonnegative")
    y = np.asarray(y, dtype=float).ravel()
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        X = X.reshape(0, X.shape[-1] if X.ndim == 2 else 1)
    else:
        X = as_points(X)
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"{X.shape[0]} inputs but {y.shape[0]} targets")
    if X.shape[0] == 0:
        return GpPosterior(kernel, X, y, eta2, 0.0, np.zeros((0, 0)), np.zeros(0))
    K = kernel_matrix(kernel, X, X)
    L, jitter = _cholesky_with_jitter(K, eta2, kernel.variance)
    alpha = cho_solve((L, True), y, check_finite=False)
    return GpPosterior(kernel, X, y, eta2, jitter, L, alpha)


def gp_update(post: GpPosterior, x, y: float) -> GpPosterior:
    """Append one observation by extending the Cholesky factor.

    Falls back to a full refit (with jitter escalation) when the new pivot
    is not safely positive, e.g. a repeated input with ``eta2 == 0``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    X = np.vstack([post.X, x[None, :]]) if post.n else x[None, :]
    Y = np.append(post.y, float(y))
    if post.n == 0:
        return gp_fit(post.kernel, X, Y, post.eta2)
    kx = kernel_matrix(post.kernel, post.X, x[None, :])[:, 0]
    l = solve_triangular(post.chol, kx, lower=True, check_finite=False)
    pivot = post.kernel.variance + post.eta2 + post.jitter - l @ l
    if pivot <= post.jitter * 1e-3 or pivot <= 0:
        return gp_fit(post.kernel, X, Y, post.eta2)
    n = post.n
    L = np.zeros((n + 1, n + 1))
    L[:n, :n] = post.chol
    L[n, :n] = l
    L[n, n] = np.sqrt(pivot)
    alpha = cho_solve((L, True), Y, check_finite=False)
    return GpPosterior(post.kernel, X, Y, post.eta2, post.jitter, L, alpha)


def gp_predict(post: GpPosterior, x):
    return post.predict(x)


def log_marginal_likelihood(kernel: Kernel, X, y, eta2: float = 0.0) -> float:
    y = np.asarray(y, dtype=float).ravel()
    if y.size == 0:
        raise ValueError("log marginal likelihood needs at least one observation")
    X = as_points(X)
    K = kernel_matrix(kernel, X, X)
    L, _ = _cholesky_with_jitter(K, eta2, kernel.variance)
    w = solve_triangular(L, y, lower=True, check_finite=False)
    n = y.size
    return float(-0.5 * w @ w - np.sum(np.log(np.diag(L))) - 0.5 * n * np.log(2 * np.pi))


@dataclass(frozen=True)
class SearchBudget:
    """Log-space grid search: a coarse grid, then ``rounds`` zoomed grids."""

    points_per_axis: int = 9
    rounds: int = 3
    zoom: float = 3.0


@dataclass
class FitResult:
    kernel: Kernel
    lml: float
    visited: list


def search_hyperparameters(
    family,
    X,
    y,
    eta2: float = 0.0,
    search: SearchBudget = SearchBudget(),
    domain_diagonal: float | None = None,
    s2_floor: float = S2_FLOOR,
) -> FitResult:
    """Maximize the log marginal likelihood over (lengthscale, variance).

    Every visited candidate is returned in ``visited`` as
    ``(lengthscale, variance, lml)``. The search is deterministic and each
    extra round only adds candidates, so a larger ``rounds`` never lowers
    the attained likelihood.
    """
    family = Family(family)
    X = as_points(X)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] < 2:
        raise ValueError("need at least two points to fit hyperparameters")
    if domain_diagonal is None:
        domain_diagonal = float(np.linalg.norm(X.max(axis=0) - X.min(axis=0))) or 1.0
    l_lo, l_hi = (b * domain_diagonal for b in LENGTHSCALE_BOUNDS)

    if np.ptp(y) == 0:
        # no empirical variance to explain
        k = Kernel(family, np.sqrt(l_lo * l_hi), s2_floor)
        return FitResult(k, log_marginal_likelihood(k, X, y, eta2), [])

    m2 = float(np.mean(y**2))
    bounds = np.log10([[l_lo, l_hi], [max(s2_floor, 1e-3 * m2), max(s2_floor, 1e2 * m2)]])
    center = bounds.mean(axis=1)
    half = 0.5 * (bounds[:, 1] - bounds[:, 0])

    visited = []
    best = None
    seen = set()
    for _ in range(search.rounds + 1):
        lo = np.maximum(center - half, bounds[:, 0])
        hi = np.minimum(center + half, bounds[:, 1])
        axes = [np.linspace(lo[i], hi[i], search.points_per_axis) for i in range(2)]
        for log_l, log_s2 in itertools.product(*axes):
            key = (round(log_l, 12), round(log_s2, 12))
            if key in seen:
                continue
            seen.add(key)
            k = Kernel(family, 10.0**log_l, 10.0**log_s2)
            try:
                lml = log_marginal_likelihood(k, X, y, eta2)
            except NumericalError:
                continue
            visited.append((k.lengthscale, k.variance, lml))
            if best is None or lml > best[1]:
                best = (k, lml, np.array([log_l, log_s2]))
        if best is None:
            raise NumericalError("every hyperparameter candidate failed to factorize")
        center = best[2]
        half = half / search.zoom
    return FitResult(best[0], best[1], visited)


def fit_hyperparameters(family, X, y, eta2=0.0, search=SearchBudget(), domain_diagonal=None) -> Kernel:
    return search_hyperparameters(family, X, y, eta2, search, domain_diagonal).kernel
