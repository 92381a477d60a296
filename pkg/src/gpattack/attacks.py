"""Adversary side: perturbation policies, budget gating and bound computations.

Every attack picks a corruption ``c_t`` for the queried point so that the
player observes ``f(x_t) + c_t + z_t``. The adversary sees ``x_t`` and the
noiseless value ``f(x_t)`` but never the noise ``z_t``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .algorithms import BetaSchedule
from .errors import ConfigurationError
from .kernels import as_points
from .objectives import (
    BumpSpec,
    Objective,
    Profile,
    Side,
    TargetRegion,
    convolved_bump_values,
    tensor_grid,
)


class Variant(str, enum.Enum):
    NONE = "none"
    RANDOM = "random"
    CLIPPING = "clipping"
    SUBTRACTION_RND = "subtraction_rnd"
    SUBTRACTION_SQ = "subtraction_sq"
    AGGRESSIVE = "aggressive"
    AGGRESSIVE_TRANSITION = "aggressive_transition"

    @property
    def is_subtraction(self) -> bool:
        return self in (Variant.SUBTRACTION_RND, Variant.SUBTRACTION_SQ)


# the scalar each variant exposes to sweeps and to the dynamic strategy
AGGRESSIVENESS_PARAM = {
    Variant.CLIPPING: "delta",
    Variant.SUBTRACTION_RND: "h_max",
    Variant.SUBTRACTION_SQ: "h_max",
    Variant.AGGRESSIVE: "h_max",
    Variant.AGGRESSIVE_TRANSITION: "h_max",
}


@dataclass
class DynamicState:
    theta: float
    F: float = 0.1
    K: int = 3
    consecutive_in_target: int = 0

    def __post_init__(self):
        if not self.theta > 0:
            raise ConfigurationError("dynamic theta must start positive")
        if not 0 < self.F < 1:
            raise ConfigurationError("dynamic fraction F must lie in (0, 1)")
        if self.K < 1:
            raise ConfigurationError("dynamic K must be a positive integer")


def dynamic_update(state: DynamicState, pulled_in_target: bool) -> DynamicState:
    """Back off after K consecutive in-target pulls, escalate on any miss."""
    if not pulled_in_target:
        return replace(state, theta=state.theta + state.F * state.theta, consecutive_in_target=0)
    count = state.consecutive_in_target + 1
    if count >= state.K:
        return replace(state, theta=state.theta - state.F * state.theta, consecutive_in_target=0)
    return replace(state, consecutive_in_target=count)


class BudgetMode(str, enum.Enum):
    UNCONSTRAINED = "unconstrained"
    CAPPED = "capped"


@dataclass
class BudgetLedger:
    mode: BudgetMode = BudgetMode.UNCONSTRAINED
    cap: float = math.inf
    spent: float = 0.0

    def __post_init__(self):
        self.mode = BudgetMode(self.mode)
        if self.mode is BudgetMode.CAPPED and not self.cap >= 0:
            raise ConfigurationError("a capped budget needs a nonnegative cap")

    @property
    def remaining(self) -> float:
        if self.mode is BudgetMode.UNCONSTRAINED:
            return math.inf
        return max(self.cap - self.spent, 0.0)


def budget_gate(ledger: BudgetLedger, c_requested: float) -> float:
    """Truncate the requested corruption to what the budget still allows."""
    if ledger.mode is BudgetMode.UNCONSTRAINED:
        c = float(c_requested)
    else:
        c = math.copysign(min(abs(c_requested), ledger.remaining), c_requested)
        if c == 0:
            c = 0.0
    ledger.spent += abs(c)
    if ledger.mode is BudgetMode.CAPPED and ledger.spent > ledger.cap:
        ledger.spent = ledger.cap
    return c


@dataclass
class AttackPolicy:
    """Attack configuration plus the mutable per-run adversary state.

    For the Subtraction variants each bump's ``height`` is a scale factor
    multiplied by ``h_max``; its profile follows the variant.
    """

    variant: Variant = Variant.NONE
    delta: float = 0.0
    h_max: float = 0.0
    bumps: Sequence[BumpSpec] = ()
    mu_a: float = 0.0
    sigma_a: float = 1.0
    transition_w: float = 0.0
    x_tilde_star_value: float = math.nan
    dynamic: DynamicState | None = None
    rng: np.random.Generator | None = field(default=None, repr=False)

    def __post_init__(self):
        self.variant = Variant(self.variant)
        if self.delta < 0 or self.h_max < 0:
            raise ConfigurationError("delta and h_max must be nonnegative")
        if self.variant is Variant.RANDOM and self.sigma_a < 0:
            raise ConfigurationError("sigma_a must be nonnegative")
        if self.variant is Variant.AGGRESSIVE_TRANSITION and not self.transition_w > 0:
            raise ConfigurationError("aggressive_transition needs a positive transition_w")
        if self.variant is Variant.CLIPPING and not np.isfinite(self.x_tilde_star_value):
            raise ConfigurationError("clipping needs x_tilde_star_value (use build_clipping_policy)")
        if self.variant.is_subtraction:
            profile = Profile.SMOOTH if self.variant is Variant.SUBTRACTION_RND else Profile.INDICATOR
            self.bumps = tuple(replace(b, profile=profile) for b in self.bumps)
            if not self.bumps:
                raise ConfigurationError("subtraction attacks need at least one bump")
        if self.dynamic is not None and self.variant not in AGGRESSIVENESS_PARAM:
            raise ConfigurationError(f"dynamic strategy is undefined for {self.variant.value}")

    @property
    def theta(self) -> float:
        """Current value of the variant's aggressiveness hyperparameter."""
        if self.dynamic is not None:
            return self.dynamic.theta
        name = AGGRESSIVENESS_PARAM.get(self.variant)
        return getattr(self, name) if name else math.nan

    def observe_pull(self, in_target: bool):
        if self.dynamic is not None:
            self.dynamic = dynamic_update(self.dynamic, in_target)

    def check_region(self, region: TargetRegion):
        if self.variant.is_subtraction:
            for b in self.bumps:
                if _bump_touches_region(b, region):
                    raise ConfigurationError(
                        f"bump at {b.center} (width {b.width}) reaches into the target region"
                    )
        if self.variant is Variant.AGGRESSIVE_TRANSITION and min(region.lengths) <= 3 * self.transition_w:
            raise ConfigurationError("transition_w must be below a third of the smallest region extent")


def _bump_touches_region(b: BumpSpec, region: TargetRegion) -> bool:
    c = np.asarray(b.center)
    gap = np.maximum(np.maximum(region.lower - c, c - region.upper), 0.0)
    dist = float(np.sqrt(np.sum(gap**2)))
    # the smooth bump vanishes on its boundary sphere, the indicator does not
    return dist <= b.width if b.profile is Profile.INDICATOR else dist < b.width


def perturbation_values(policy: AttackPolicy, region: TargetRegion, X, fX) -> np.ndarray:
    """Corruptions of every deterministic variant at a batch of points."""
    X = as_points(X)
    fX = np.asarray(fX, dtype=float).ravel()
    v = policy.variant
    if v is Variant.NONE:
        return np.zeros(len(X))
    if v is Variant.RANDOM:
        raise ValueError("the random baseline has no deterministic perturbation")
    inside = region.contains(X)
    theta = policy.theta
    if v is Variant.CLIPPING:
        clip = policy.x_tilde_star_value - theta
        return np.where(inside, 0.0, np.minimum(0.0, clip - fX))
    if v is Variant.AGGRESSIVE:
        return np.where(inside, 0.0, -theta)
    if v is Variant.AGGRESSIVE_TRANSITION:
        w = policy.transition_w
        lifted = convolved_bump_values(region.shrink(w), w, theta, X, Side.INSIDE)
        return -(theta - lifted)
    policy.check_region(region)
    total = np.zeros(len(X))
    for b in policy.bumps:
        total += b.values(X)
    return -theta * total


def attack_perturbation(policy: AttackPolicy, region: TargetRegion, x, f_x: float) -> float:
    if policy.variant is Variant.RANDOM:
        if policy.rng is None:
            raise ConfigurationError("the random baseline needs an adversary RNG stream")
        return float(policy.rng.normal(policy.mu_a, policy.sigma_a))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float(perturbation_values(policy, region, x[None, :], [f_x])[0])


def build_clipping_policy(obj: Objective, region: TargetRegion, delta: float, grid, **kwargs) -> AttackPolicy:
    """Clipping policy with the in-region maximum precomputed on ``grid``.

    ``grid`` is either a per-dimension resolution or an explicit point list
    (normally the player's candidate set).
    """
    grid = np.asarray(grid)
    X = as_points(grid) if grid.ndim == 2 else tensor_grid(obj.bounds, grid)
    mask = region.contains(X)
    if not mask.any():
        raise ConfigurationError("the target region contains no grid point")
    value = float(np.max(obj.values(X[mask])))
    return AttackPolicy(Variant.CLIPPING, delta=delta, x_tilde_star_value=value, **kwargs)


# --- subtraction presets ------------------------------------------------------
# Hand-placed bumps (centres, widths, height scales) that swallow the peaks
# outside each catalog target region. Reconstructions, tuned on the dense grid.
SUBTRACTION_PRESETS = {
    "synthetic1d": [dict(center=[-0.8], width=0.29, height_scale=1.0)],
    "forrester1d": [dict(center=[0.77], width=0.26, height_scale=1.0)],
    "levy1d": [
        dict(center=[1.0], width=1.9, height_scale=1.0),
        dict(center=[5.0], width=1.9, height_scale=1.0),
        dict(center=[9.0], width=1.9, height_scale=0.5),
    ],
    "levy_hard1d": [dict(center=[-7.15], width=0.95, height_scale=1.0)]
    + [dict(center=[c], width=1.9, height_scale=1.0) for c in (-5.2, -3.2, -1.2, 0.8, 2.8, 4.8, 6.8, 8.8)],
    "bohachevsky2d": [dict(center=[0.0, 0.0], width=14.0, height_scale=1.0)],
    "bohachevsky_hard2d": [dict(center=[0.0, 0.0], width=60.0, height_scale=1.0)],
    "branin2d": [
        dict(center=[np.pi, 2.275], width=4.5, height_scale=1.0),
        dict(center=[3 * np.pi, 2.475], width=5.0, height_scale=1.0),
    ],
    "camelback2d": [dict(center=[-0.0898, 0.7126], width=0.7, height_scale=1.0)],
}


def bumps_from_config(entries) -> tuple:
    return tuple(
        BumpSpec(tuple(np.atleast_1d(e["center"])), float(e["width"]), float(e.get("height_scale", 1.0)))
        for e in entries
    )


# --- attack success conditions ----------------------------------------------


@dataclass(frozen=True)
class ConditionReport:
    holds_i: bool
    holds_ii_gap: float
    B0: float

    def lines(self):
        return [
            f"condition (i)  Delta-optimal points in region and unperturbed: {self.holds_i}",
            f"condition (ii) out-of-region suboptimality gap: {self.holds_ii_gap:.9g}",
            f"               B0 = max |f - f_tilde|: {self.B0:.9g}",
        ]


def verify_attack_conditions(
    f_grid, f_tilde_grid, region_mask, Delta: float, tol: float = 1e-9, perturbation=None
) -> ConditionReport:
    """Check the attack success conditions on a grid.

    ``B0`` is read from ``perturbation`` when given, so a constant shift
    reports its magnitude without the round-off of ``f - (f + c)``.
    """
    f = np.asarray(f_grid, dtype=float).ravel()
    ft = np.asarray(f_tilde_grid, dtype=float).ravel()
    mask = np.asarray(region_mask, dtype=bool).ravel()
    if not (f.shape == ft.shape == mask.shape):
        raise ValueError("grids are not aligned")
    diff = np.abs(f - ft) if perturbation is None else np.abs(np.asarray(perturbation, dtype=float).ravel())
    if diff.shape != f.shape:
        raise ValueError("grids are not aligned")
    top = ft.max()
    near_opt = ft >= top - Delta
    holds_i = bool(np.all(mask[near_opt]) and np.all(np.abs(ft[near_opt] - f[near_opt]) <= tol))
    gap = float(np.min(top - ft[~mask])) if np.any(~mask) else math.inf
    return ConditionReport(holds_i, gap, float(np.max(diff)))


# --- suboptimal-pull budget bounds -------------------------------------------


class BoundKind(str, enum.Enum):
    UCB = "ucb"
    ELIM = "elim"


def corollary_constant(lam: float) -> float:
    """``C1 = 8 / (lam * log(1 + 1/lam))``."""
    return 8.0 / lam / math.log(1.0 + 1.0 / lam)


def corollary_n_max(
    Delta: float,
    T: int,
    schedule: BetaSchedule,
    gamma: Callable[[int], float],
    lam: float = 1.0,
    which: BoundKind = BoundKind.UCB,
) -> int:
    """Largest ``N <= T`` satisfying the suboptimal-action count inequality (linear scan)."""
    if not Delta > 0:
        raise ValueError("Delta must be positive")
    which = BoundKind(which)
    c1 = corollary_constant(lam)
    beta_T = schedule(T, gamma(T - 1))
    n_max = 0
    for n in range(1, T + 1):
        if which is BoundKind.UCB:
            rhs = c1 * gamma(n) * beta_T / Delta**2
        else:
            rhs = 4 * c1 * gamma(n) * schedule(n, gamma(n - 1)) / Delta**2
        if n <= rhs:
            n_max = n
    return n_max


def corollary_budget_bound(Delta, T, B0, schedule, gamma, lam=1.0, which=BoundKind.UCB) -> float:
    return B0 * corollary_n_max(Delta, T, schedule, gamma, lam, which)
