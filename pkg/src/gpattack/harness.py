"""The corrupted GP-bandit game loop, sweeps and result files."""

from __future__ import annotations

import csv
import functools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import algorithms as alg
from .attacks import (
    AGGRESSIVENESS_PARAM,
    AttackPolicy,
    BudgetLedger,
    DynamicState,
    SUBTRACTION_PRESETS,
    Variant,
    attack_perturbation,
    budget_gate,
    build_clipping_policy,
    bumps_from_config,
)
from .config import ExperimentConfig, config_to_text, get_value, with_value
from .errors import ConfigurationError, NumericalError
from .gp import SearchBudget, search_hyperparameters
from .kernels import Family, Kernel
from .metrics import RunTrace, cumulative_regret, efficient_hyperparameter, metric_curves, normalized_cost, success_rate
from .objectives import Objective, TargetRegion, get_objective, tensor_grid

log = logging.getLogger(__name__)

OFFLINE_FIT_POINTS = 100
OFFLINE_FIT_POINTS_HIGH_DIM = (500, 500)  # grid, uniform
RANDOM_CANDIDATES = 4096
GRID_PER_DIM = 512


# --------------------------------------------------------------------------
# Setup helpers
# --------------------------------------------------------------------------


def resolved_region(config: ExperimentConfig, obj: Objective) -> TargetRegion:
    if config.region.centroid is None:
        return obj.region
    return TargetRegion(config.region.centroid, config.region.lengths)


def default_n_init(dim: int) -> int:
    return 10 if dim <= 2 else 50


def default_horizon(dim: int) -> int:
    return 100 if dim <= 2 else 250


@dataclass
class Streams:
    """Independent RNG streams of one run, derived from its seed."""

    init: np.random.Generator
    noise: np.random.Generator
    adversary: np.random.Generator
    fit: np.random.Generator
    candidates: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "Streams":
        children = np.random.SeedSequence(seed).spawn(5)
        return cls(*(np.random.default_rng(c) for c in children))


def candidate_points(obj: Objective, grid: int | None, rng: np.random.Generator) -> np.ndarray:
    """Fixed acquisition set: a tensor grid for d <= 2, seeded uniform samples otherwise."""
    if obj.dim <= 2:
        return tensor_grid(obj.bounds, [grid or GRID_PER_DIM] * obj.dim)
    lo, hi = obj.bounds[:, 0], obj.bounds[:, 1]
    return lo + (hi - lo) * rng.random((grid or RANDOM_CANDIDATES, obj.dim))


@functools.lru_cache(maxsize=64)
def offline_kernel(name: str, family: str, eta2: float, seed: int, grid: int | None = None) -> Kernel:
    """Fit hyperparameters on clean samples of the objective before the run.

    1-D/2-D: 100 points drawn from an evenly spaced grid. Higher dimensions:
    500 grid points plus 500 uniform points.
    """
    obj = get_objective(name)
    rng = Streams.from_seed(seed).fit
    if obj.dim <= 2:
        pool = tensor_grid(obj.bounds, [grid or GRID_PER_DIM] * obj.dim)
        X = pool[rng.choice(len(pool), OFFLINE_FIT_POINTS, replace=False)]
    else:
        n_grid, n_unif = OFFLINE_FIT_POINTS_HIGH_DIM
        per_dim = max(2, math.ceil(n_grid ** (1.0 / obj.dim)))
        pool = tensor_grid(obj.bounds, [per_dim] * obj.dim)
        Xg = pool[rng.choice(len(pool), min(n_grid, len(pool)), replace=False)]
        lo, hi = obj.bounds[:, 0], obj.bounds[:, 1]
        X = np.vstack([Xg, lo + (hi - lo) * rng.random((n_unif, obj.dim))])
    y = obj.values(X)
    return search_hyperparameters(family, X, y, eta2, SearchBudget(), obj.diagonal).kernel


def initial_kernel(config: ExperimentConfig, obj: Objective, X=None, y=None) -> Kernel:
    family = Family(config.kernel.family)
    fit = config.kernel.fit
    if fit == "fixed":
        return Kernel(family, config.kernel.lengthscale, config.kernel.variance)
    if fit == "offline":
        return offline_kernel(obj.name, family.value, config.eta2, config.seed, config.grid)
    return search_hyperparameters(family, X, y, config.eta2, SearchBudget(), obj.diagonal).kernel


def build_policy(config: ExperimentConfig, obj: Objective, region: TargetRegion, candidates, rng=None) -> AttackPolicy:
    a = config.attack
    variant = Variant(a.variant)
    dynamic = None
    if a.dynamic.enabled:
        if variant not in AGGRESSIVENESS_PARAM:
            raise ConfigurationError(f"dynamic strategy is undefined for {variant.value}")
        theta0 = getattr(a, AGGRESSIVENESS_PARAM[variant])
        dynamic = DynamicState(theta=theta0, F=a.dynamic.F, K=a.dynamic.K)
    common = dict(h_max=a.h_max, mu_a=a.mu_a, sigma_a=a.sigma_a, transition_w=a.transition_w, dynamic=dynamic, rng=rng)
    if variant is Variant.CLIPPING:
        policy = build_clipping_policy(obj, region, a.delta, candidates, **common)
    else:
        bumps = ()
        if variant.is_subtraction:
            entries = a.bumps
            if entries == "preset":
                if obj.name not in SUBTRACTION_PRESETS:
                    raise ConfigurationError(f"no subtraction preset for {obj.name}; set attack.bumps")
                entries = SUBTRACTION_PRESETS[obj.name]
            bumps = bumps_from_config(entries)
        policy = AttackPolicy(variant, delta=a.delta, bumps=bumps, **common)
    policy.check_region(region)
    return policy


def build_schedule(config: ExperimentConfig) -> alg.BetaSchedule:
    p = config.player
    return alg.BetaSchedule(
        kind=p.beta,
        defense_c=p.defense_c,
        rkhs_bound=p.rkhs_bound,
        noise_sigma=config.noise_sigma,
        lam=p.lam,
        delta=p.delta,
        log_base=p.log_base,
    )


# --------------------------------------------------------------------------
# Game loop
# --------------------------------------------------------------------------


def _respond(policy, ledger, region, obj, x, streams, noise_sigma):
    """Adversary and environment response to one query.

    The adversary sees only ``x`` and ``f(x)``; the player only ever gets ``y``.
    """
    f_x = float(obj.values(x[None, :])[0])
    c = budget_gate(ledger, attack_perturbation(policy, region, x, f_x))
    z = float(noise_sigma * streams.noise.standard_normal())
    return f_x, c, z, f_x + c + z


def run_experiment(config: ExperimentConfig, run_id: str | None = None) -> RunTrace:
    config.validate()
    obj = get_objective(config.objective)
    region = resolved_region(config, obj)
    if region.dim != obj.dim:
        raise ConfigurationError("region dimension does not match the objective")
    n_init = config.n_init or default_n_init(obj.dim)
    T = config.T or default_horizon(obj.dim)
    streams = Streams.from_seed(config.seed)
    candidates = candidate_points(obj, config.grid, streams.candidates)
    policy = build_policy(config, obj, region, candidates, rng=streams.adversary)
    a = config.attack
    ledger = BudgetLedger(a.budget_mode, a.budget_cap)
    schedule = build_schedule(config)

    rows = []
    lo, hi = obj.bounds[:, 0], obj.bounds[:, 1]
    X0 = lo + (hi - lo) * streams.init.random((n_init, obj.dim))
    for i, x in enumerate(X0):
        rows.append((i - n_init + 1, x) + _respond(policy, ledger, region, obj, x, streams, config.noise_sigma))

    X_init = np.array([r[1] for r in rows])
    y_init = np.array([r[5] for r in rows])
    online = config.kernel.fit == "online"
    kernel = initial_kernel(config, obj, X_init, y_init)
    state = alg.PlayerState(config.player.algorithm, kernel, candidates, config.eta2, capacity=n_init + T + 1)
    state.set_kernel(kernel, X_init, y_init)
    gammas = None
    if schedule.kind is alg.BetaKind.THEORY:
        gammas = alg.info_gain_curve(kernel, candidates, min(T, len(candidates)), schedule.lam)

    active_sizes = []
    beta_values = []
    for t in range(1, T + 1):
        try:
            gamma_prev = gammas[min(t - 1, len(gammas) - 1)] if gammas is not None else 0.0
            beta_t = schedule(t, gamma_prev)
            idx = alg.select(state, beta_t)
            x = candidates[idx]
            f_x, c, z, y = _respond(policy, ledger, region, obj, x, streams, config.noise_sigma)
            state.observe(x, y)
            if online:
                post = state.posterior
                refit = search_hyperparameters(
                    config.kernel.family, post.X, post.y, config.eta2, SearchBudget(), obj.diagonal
                ).kernel
                state.set_kernel(refit)
        except NumericalError as exc:
            raise NumericalError(f"round {t}: {exc}") from exc
        policy.observe_pull(bool(region.contains(x[None, :])[0]))
        rows.append((t, x, f_x, c, z, y))
        beta_values.append(beta_t)
        if state.algorithm is alg.Algorithm.MAXVAR:
            active_sizes.append(len(state.active))

    X = np.array([r[1] for r in rows])
    return RunTrace(
        t=[r[0] for r in rows],
        X=X,
        f_x=[r[2] for r in rows],
        c=[r[3] for r in rows],
        z=[r[4] for r in rows],
        y=[r[5] for r in rows],
        in_target=region.contains(X),
        f_min=obj.f_min,
        f_max=obj.f_max,
        f_star=obj.f_max,
        run_id=run_id or f"{config.objective}-{a.variant}-s{config.seed}",
        meta=dict(
            kernel=dict(family=state.kernel.family.value, lengthscale=state.kernel.lengthscale,
                        variance=state.kernel.variance),
            budget_spent=ledger.spent,
            active_sizes=active_sizes,
            beta=beta_values,
            theta_final=policy.theta,
        ),
    )


# --------------------------------------------------------------------------
# Sweeps
# --------------------------------------------------------------------------


@dataclass
class SweepSpec:
    base: ExperimentConfig
    param: str
    values: list
    seeds: list
    workers: int = 1


@dataclass
class SweepResult:
    rows: list  # one dict per (theta, seed)
    averages: list  # one dict per theta
    efficient_theta: float | None
    traces: dict = field(default_factory=dict)


def _run_cell(args):
    config, theta, seed = args
    try:
        trace = run_experiment(config, run_id=f"theta={theta:g}-seed={seed}")
    except Exception as exc:  # a failed cell is recorded, never fatal
        return theta, seed, None, f"{type(exc).__name__}: {exc}"
    return theta, seed, trace, None


def run_sweep(spec: SweepSpec) -> SweepResult:
    get_value(spec.base, spec.param)  # reject unknown parameter names early
    cells = []
    for theta in spec.values:
        for seed in spec.seeds:
            cfg = with_value(with_value(spec.base, spec.param, theta), "seed", seed)
            cells.append((cfg, float(theta), int(seed)))
    if spec.workers > 1:
        with ProcessPoolExecutor(spec.workers) as pool:
            outcomes = list(pool.map(_run_cell, cells))
    else:
        outcomes = [_run_cell(c) for c in cells]

    rows, traces = [], {}
    for theta, seed, trace, err in sorted(outcomes, key=lambda o: (o[0], o[1])):
        if trace is None:
            log.warning("sweep cell theta=%g seed=%d failed: %s", theta, seed, err)
            rows.append(dict(theta=theta, seed=seed, success_rate_T=math.nan, norm_cost_T=math.nan,
                             regret_T=math.nan, error=err))
            continue
        traces[(theta, seed)] = trace
        rows.append(dict(theta=theta, seed=seed, success_rate_T=success_rate(trace),
                         norm_cost_T=normalized_cost(trace), regret_T=cumulative_regret(trace), error=None))

    averages = []
    for theta in sorted({r["theta"] for r in rows}):
        ok = [r for r in rows if r["theta"] == theta and r["error"] is None]
        if not ok:
            averages.append(dict(theta=theta, seed="avg", success_rate_T=math.nan, norm_cost_T=math.nan,
                                 regret_T=math.nan))
            continue
        averages.append(dict(
            theta=theta,
            seed="avg",
            success_rate_T=float(np.mean([r["success_rate_T"] for r in ok])),
            norm_cost_T=float(np.mean([r["norm_cost_T"] for r in ok])),
            regret_T=float(np.mean([r["regret_T"] for r in ok])),
        ))
    usable = [(a["theta"], a["success_rate_T"], a["norm_cost_T"]) for a in averages if not math.isnan(a["success_rate_T"])]
    efficient = efficient_hyperparameter(usable) if usable else None
    return SweepResult(rows, averages, efficient, traces)


# --------------------------------------------------------------------------
# Output files
# --------------------------------------------------------------------------


def fmt(v) -> str:
    return f"{v:.9g}"


def trace_columns(dim: int) -> list:
    return (["run_id", "t"] + [f"x_{i}" for i in range(dim)]
            + ["f_x", "c_t", "z_t", "y_t", "in_target", "success_rate", "norm_cum_cost", "regret"])


def write_trace_csv(traces, path) -> Path:
    traces = [traces] if isinstance(traces, RunTrace) else list(traces)
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(trace_columns(traces[0].X.shape[1]))
            for tr in traces:
                sr, cost, regret = metric_curves(tr)
                for k in range(len(tr)):
                    writer.writerow(
                        [tr.run_id, int(tr.t[k])] + [fmt(v) for v in tr.X[k]]
                        + [fmt(tr.f_x[k]), fmt(tr.c[k]), fmt(tr.z[k]), fmt(tr.y[k]), int(tr.in_target[k]),
                           fmt(sr[k]), fmt(cost[k]), fmt(regret[k])]
                    )
    except OSError as exc:
        raise OSError(f"cannot write trace CSV {path}: {exc}") from exc
    return path


def write_trace_meta(traces, path) -> Path:
    traces = [traces] if isinstance(traces, RunTrace) else list(traces)
    meta = {tr.run_id: dict(f_min=tr.f_min, f_max=tr.f_max, f_star=tr.f_star, **tr.meta) for tr in traces}
    Path(path).write_text(json.dumps(meta, indent=2, default=float))
    return Path(path)


def read_trace_csv(path, meta_path=None) -> list:
    """Parse a trace CSV back into traces (ranges come from the JSON sidecar if given)."""
    meta = json.loads(Path(meta_path).read_text()) if meta_path else {}
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        dim = sum(1 for h in header if h.startswith("x_"))
        runs: dict = {}
        for row in reader:
            runs.setdefault(row[0], []).append(row)
    traces = []
    for run_id, rows in runs.items():
        cols = list(zip(*rows))
        m = meta.get(run_id, {})
        traces.append(RunTrace(
            t=[int(v) for v in cols[1]],
            X=np.array([[float(v) for v in r[2:2 + dim]] for r in rows]),
            f_x=[float(v) for v in cols[2 + dim]],
            c=[float(v) for v in cols[3 + dim]],
            z=[float(v) for v in cols[4 + dim]],
            y=[float(v) for v in cols[5 + dim]],
            in_target=[v == "1" for v in cols[6 + dim]],
            f_min=m.get("f_min", math.nan),
            f_max=m.get("f_max", math.nan),
            f_star=m.get("f_star", math.nan),
            run_id=run_id,
            meta=dict(csv_success_rate=[float(v) for v in cols[7 + dim]],
                      csv_norm_cum_cost=[float(v) for v in cols[8 + dim]],
                      csv_regret=[float(v) for v in cols[9 + dim]]),
        ))
    return traces


SUMMARY_COLUMNS = ["theta", "seed", "success_rate_T", "norm_cost_T", "regret_T"]


def write_summary_csv(result: SweepResult, path) -> Path:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(SUMMARY_COLUMNS)
            for r in result.rows + result.averages:
                writer.writerow([fmt(r["theta"]), r["seed"]] + [fmt(r[k]) for k in SUMMARY_COLUMNS[2:]])
    except OSError as exc:
        raise OSError(f"cannot write summary CSV {path}: {exc}") from exc
    return path


def read_summary_csv(path) -> list:
    with Path(path).open(newline="") as fh:
        return [
            dict(theta=float(r["theta"]), seed=r["seed"] if r["seed"] == "avg" else int(r["seed"]),
                 success_rate_T=float(r["success_rate_T"]), norm_cost_T=float(r["norm_cost_T"]),
                 regret_T=float(r["regret_T"]))
            for r in csv.DictReader(fh)
        ]


def emit_outputs(out_dir, trace=None, sweep: SweepResult | None = None, config: ExperimentConfig | None = None,
                 param: str = "theta", figures: bool = True) -> dict:
    """Write delimited results and (optionally) figures into ``out_dir``."""
    from . import plotting

    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    paths = {}
    if config is not None:
        paths["config"] = out / "config.txt"
        paths["config"].write_text(config_to_text(config))
    if trace is not None:
        paths["trace_csv"] = write_trace_csv(trace, out / "trace.csv")
        paths["trace_meta"] = write_trace_meta(trace, out / "trace.json")
        if figures:
            first = trace if isinstance(trace, RunTrace) else next(iter(trace))
            paths["trace_fig"] = plotting.plot_trace(first, out / "trace.svg")
    if sweep is not None:
        paths["summary_csv"] = write_summary_csv(sweep, out / "summary.csv")
        if sweep.traces:
            ordered = [sweep.traces[k] for k in sorted(sweep.traces)]
            paths["traces_csv"] = write_trace_csv(ordered, out / "traces.csv")
            paths["traces_meta"] = write_trace_meta(ordered, out / "traces.json")
        if figures:
            paths["scatter_fig"] = plotting.plot_success_vs_cost(sweep, out / "scatter.svg", param=param)
    return paths
