"""Player side: GP-UCB, MaxVar + Elimination, exploration schedules and information gain."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .gp import gp_fit, gp_update, std_from_reduction
from .kernels import Kernel, as_points, kernel_matrix


class Algorithm(str, enum.Enum):
    GPUCB = "gpucb"
    MAXVAR = "maxvar"


class BetaKind(str, enum.Enum):
    PRACTICAL = "practical"
    THEORY = "theory"
    DEFENSE = "defense"


@dataclass(frozen=True)
class BetaSchedule:
    kind: BetaKind = BetaKind.PRACTICAL
    defense_c: float = 0.0
    rkhs_bound: float = 1.0
    noise_sigma: float = 0.01
    lam: float = 1.0
    delta: float = 0.1
    log_base: float = math.e

    def __post_init__(self):
        object.__setattr__(self, "kind", BetaKind(self.kind))
        if self.defense_c < 0:
            raise ValueError("defense constant must be nonnegative")
        if self.lam <= 0 or not (0 < self.delta < 1):
            raise ValueError("theory schedule needs lam > 0 and delta in (0, 1)")

    def __call__(self, t: int, gamma_prev: float = 0.0) -> float:
        return beta_value(self, t, gamma_prev)


def beta_value(sched: BetaSchedule, t: int, gamma_prev: float = 0.0) -> float:
    """Exploration parameter ``beta_t`` (the square of the UCB multiplier)."""
    if t < 1:
        raise ValueError(f"rounds start at t=1, got t={t}")
    practical = 0.5 * math.log(2 * t) / math.log(sched.log_base)
    if sched.kind is BetaKind.PRACTICAL:
        return practical
    if sched.kind is BetaKind.DEFENSE:
        return practical + sched.defense_c
    root = sched.rkhs_bound + sched.noise_sigma / math.sqrt(sched.lam) * math.sqrt(
        2 * (gamma_prev + math.log(1 / sched.delta))
    )
    return root**2


def info_gain_curve(kernel: Kernel, candidates, t_max: int, lam: float = 1.0) -> np.ndarray:
    """Greedy log-det information gain for 0..t_max selections (without replacement).

    Entry t is ``0.5 * log det(I + K_S / lam)`` for the greedily grown set S of size t.
    """
    X = as_points(candidates)
    m = X.shape[0]
    if t_max > m:
        raise ValueError(f"cannot select {t_max} of {m} candidates")
    var = np.full(m, kernel.variance, dtype=float)
    rows = np.zeros((t_max, m))
    chosen = np.zeros(m, dtype=bool)
    gains = np.zeros(t_max + 1)
    for t in range(t_max):
        score = np.where(chosen, -np.inf, var)
        i = int(np.argmax(score))
        v_i = max(var[i], 0.0)
        gains[t + 1] = gains[t] + 0.5 * np.log1p(v_i / lam)
        chosen[i] = True
        # posterior covariance with x_i under noise lam, one Cholesky row at a time
        cov = kernel_matrix(kernel, X[i : i + 1], X)[0] - rows[:t, i] @ rows[:t]
        rows[t] = cov / np.sqrt(v_i + lam)
        var = var - rows[t] ** 2
    return gains


def empirical_info_gain(kernel: Kernel, candidates, t: int, lam: float = 1.0) -> float:
    if t == 0:
        return 0.0
    return float(info_gain_curve(kernel, candidates, t, lam)[t])


class PlayerState:
    """Posterior plus candidate-grid caches for one player.

    Owned by a single run loop and updated in place by :meth:`observe`.
    Means and deviations over the fixed candidate grid are maintained with
    rank-one updates of ``L^{-1} k(X, candidates)``.
    """

    def __init__(self, algorithm, kernel: Kernel, candidates, eta2: float, capacity: int = 128):
        self.algorithm = Algorithm(algorithm)
        self.candidates = as_points(candidates)
        self.eta2 = float(eta2)
        self.t = 0
        self.active = np.arange(len(self.candidates))
        self._capacity = capacity
        self.set_kernel(kernel)

    @property
    def kernel(self) -> Kernel:
        return self.posterior.kernel

    def set_kernel(self, kernel: Kernel, X=None, y=None):
        """(Re)fit from scratch, e.g. after online hyperparameter learning."""
        if X is None:
            X = getattr(self, "posterior", None)
            X, y = (X.X, X.y) if X is not None else (np.zeros((0, self.candidates.shape[1])), np.zeros(0))
        self.posterior = gp_fit(kernel, X, y, self.eta2)
        self._rebuild_cache()

    def _rebuild_cache(self):
        post = self.posterior
        cap = max(self._capacity, post.n + 1)
        self._V = np.zeros((cap, len(self.candidates)))
        if post.n:
            self._V[: post.n] = post.cross_solve(self.candidates)
        self._explained = np.einsum("ij,ij->j", self._V[: post.n], self._V[: post.n])

    def candidate_posterior(self):
        """Posterior mean and standard deviation at every candidate."""
        post = self.posterior
        if post.n == 0:
            m = len(self.candidates)
            return np.zeros(m), np.full(m, np.sqrt(post.kernel.variance))
        w = solve_triangular(post.chol, post.y, lower=True, check_finite=False)
        mu = self._V[: post.n].T @ w
        return mu, std_from_reduction(post.kernel.variance, self._explained)

    def observe(self, x, y: float) -> "PlayerState":
        old = self.posterior
        new = gp_update(old, x, y)
        n = old.n
        self.posterior = new
        self.t += 1
        if n and not np.array_equal(new.chol[:n, :n], old.chol):
            self._rebuild_cache()
            return self
        if n + 1 > self._V.shape[0]:
            self._V = np.vstack([self._V, np.zeros_like(self._V)])
        kx = kernel_matrix(new.kernel, np.atleast_2d(x), self.candidates)[0]
        row = (kx - new.chol[n, :n] @ self._V[:n]) / new.chol[n, n]
        self._V[n] = row
        self._explained = self._explained + row**2
        return self


def ucb_scores(state: PlayerState, beta_t: float) -> np.ndarray:
    mu, sd = state.candidate_posterior()
    return mu + np.sqrt(beta_t) * sd


def ucb_select_index(state: PlayerState, beta_t: float) -> int:
    if state.algorithm is not Algorithm.GPUCB:
        raise ValueError("ucb_select requires a GP-UCB player")
    return int(np.argmax(ucb_scores(state, beta_t)))


def ucb_select(state: PlayerState, beta_t: float) -> np.ndarray:
    return state.candidates[ucb_select_index(state, beta_t)]


def maxvar_elim_index(state: PlayerState, beta_t: float):
    if state.algorithm is not Algorithm.MAXVAR:
        raise ValueError("maxvar_elim_step requires a MaxVar player")
    if len(state.active) == 0:
        raise ValueError("active set is empty")
    mu, sd = state.candidate_posterior()
    act = state.active
    width = np.sqrt(beta_t) * sd[act]
    lcb_best = np.max(mu[act] - width)
    new_active = act[mu[act] + width >= lcb_best]
    state.active = new_active
    return int(new_active[int(np.argmax(sd[new_active]))]), new_active


def maxvar_elim_step(state: PlayerState, beta_t: float):
    """One MaxVar + Elimination round.

    Keeps active candidates whose UCB reaches the best LCB, then picks the
    survivor of largest posterior deviation. Returns the selected point and
    the (sorted) surviving candidate indices; ``state.active`` is updated.
    """
    i, new_active = maxvar_elim_index(state, beta_t)
    return state.candidates[i], new_active


def select(state: PlayerState, beta_t: float) -> int:
    """Index of the next candidate for either algorithm."""
    if state.algorithm is Algorithm.GPUCB:
        return ucb_select_index(state, beta_t)
    return maxvar_elim_index(state, beta_t)[0]


def observe(state: PlayerState, x, y: float) -> PlayerState:
    return state.observe(x, y)
