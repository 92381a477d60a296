"""Run-level measurements: success rate, normalized cost, regret, efficiency."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass
class RunTrace:
    """Per-step record of one corrupted bandit run.

    Initial design points carry ``t <= 0``; optimization rounds are
    ``t = 1..T``. Metrics only count the rounds.
    """

    t: np.ndarray
    X: np.ndarray
    f_x: np.ndarray
    c: np.ndarray
    z: np.ndarray
    y: np.ndarray
    in_target: np.ndarray
    f_min: float
    f_max: float
    f_star: float
    run_id: str = "run"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=int)
        self.X = np.asarray(self.X, dtype=float).reshape(len(self.t), -1)
        for name in ("f_x", "c", "z", "y"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        self.in_target = np.asarray(self.in_target, dtype=bool)

    def __len__(self):
        return len(self.t)

    @property
    def T(self) -> int:
        return int(np.sum(self.t >= 1))

    @property
    def rounds(self) -> np.ndarray:
        return self.t >= 1

    def _upto(self, t: int) -> np.ndarray:
        return (self.t >= 1) & (self.t <= t)


def success_rate(trace: RunTrace, t: int | None = None) -> float:
    t = trace.T if t is None else t
    if not 1 <= t <= trace.T:
        raise ValueError(f"t must lie in [1, {trace.T}], got {t}")
    return int(np.sum(trace.in_target[trace._upto(t)])) / t


def normalized_cost(trace: RunTrace, t: int | None = None) -> float:
    t = trace.T if t is None else t
    if not 0 <= t <= trace.T:
        raise ValueError(f"t must lie in [0, {trace.T}], got {t}")
    span = trace.f_max - trace.f_min
    if not span > 0:
        raise ValueError("objective range is zero; cost cannot be normalized")
    return float(np.sum(np.abs(trace.c[trace._upto(t)]))) / span


def cumulative_regret(trace: RunTrace, t: int | None = None) -> float:
    t = trace.T if t is None else t
    return float(np.sum(trace.f_star - trace.f_x[trace._upto(t)]))


def metric_curves(trace: RunTrace):
    """Per-step success rate, normalized cumulative cost and regret.

    Initial points (t <= 0) get NaN success rate and zero cost/regret.
    """
    rounds = trace.rounds
    hits = np.cumsum(np.where(rounds, trace.in_target, False))
    counts = np.maximum(trace.t, 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        sr = np.where(rounds, hits / np.where(counts > 0, counts, 1), np.nan)
    span = trace.f_max - trace.f_min
    cost = np.cumsum(np.where(rounds, np.abs(trace.c), 0.0)) / span
    regret = np.cumsum(np.where(rounds, trace.f_star - trace.f_x, 0.0))
    return sr, cost, regret


def _efficiency_key(entry):
    theta, sr, cost = entry
    if cost == 0:
        ratio = math.inf if sr > 0 else -math.inf
    else:
        ratio = sr / cost
    return ratio


def efficient_hyperparameter(results) -> float:
    """Hyperparameter with the largest success-rate-to-cost ratio.

    ``results`` holds ``(theta, success_rate_T, normalized_cost_T)`` tuples or
    mappings with those keys. Zero cost with positive success counts as
    infinitely efficient; zero cost and zero success ranks last. Ties go to
    the smallest theta.
    """
    rows = []
    for r in results:
        if isinstance(r, dict):
            r = (r["theta"], r["success_rate_T"], r["normalized_cost_T"])
        rows.append(tuple(float(v) for v in r))
    if not rows:
        raise ValueError("no results to choose from")
    best = max(rows, key=lambda e: (_efficiency_key(e), -e[0]))
    return best[0]
