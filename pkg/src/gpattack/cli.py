"""Command line entry point: ``gpattack {run,sweep,bound,verify}``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import algorithms as alg
from .attacks import BoundKind, Variant, corollary_constant, corollary_n_max, perturbation_values, verify_attack_conditions
from .config import load_config, with_value
from .errors import ConfigurationError, NumericalError
from .harness import (
    SweepSpec,
    Streams,
    build_policy,
    build_schedule,
    candidate_points,
    default_horizon,
    emit_outputs,
    initial_kernel,
    resolved_region,
    run_experiment,
    run_sweep,
)
from .metrics import cumulative_regret, normalized_cost, success_rate
from .objectives import get_objective


def _csv_list(text: str, cast):
    try:
        return [cast(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def cmd_run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = with_value(config, "seed", args.seed)
    trace = run_experiment(config)
    print(f"run_id={trace.run_id} T={trace.T}")
    print(f"success_rate_T={success_rate(trace):.9g}")
    print(f"norm_cost_T={normalized_cost(trace):.9g}")
    print(f"regret_T={cumulative_regret(trace):.9g}")
    if args.out:
        for name, path in emit_outputs(args.out, trace=trace, config=config, figures=not args.no_figures).items():
            print(f"wrote {name}: {path}")
    return 0


def cmd_sweep(args) -> int:
    config = load_config(args.config)
    spec = SweepSpec(config, args.param, args.values, args.seeds, workers=args.workers)
    result = run_sweep(spec)
    print("theta,seed,success_rate_T,norm_cost_T,regret_T")
    for r in result.averages:
        print(f"{r['theta']:g},avg,{r['success_rate_T']:.6g},{r['norm_cost_T']:.6g},{r['regret_T']:.6g}")
    failed = [r for r in result.rows if r["error"]]
    for r in failed:
        print(f"failed theta={r['theta']:g} seed={r['seed']}: {r['error']}", file=sys.stderr)
    if result.efficient_theta is not None:
        print(f"efficient {args.param} = {result.efficient_theta:g}")
    if args.out:
        paths = emit_outputs(args.out, sweep=result, config=config, param=args.param, figures=not args.no_figures)
        for name, path in paths.items():
            print(f"wrote {name}: {path}")
    return 0


def cmd_bound(args) -> int:
    config = load_config(args.config)
    obj = get_objective(config.objective)
    T = config.T or default_horizon(obj.dim)
    candidates = candidate_points(obj, config.grid, Streams.from_seed(config.seed).candidates)
    kernel = initial_kernel(config, obj)
    unit = kernel.with_params(variance=1.0)
    lam = config.player.lam
    gammas = alg.info_gain_curve(unit, candidates, min(T, len(candidates)), lam)

    def gamma(n):
        return float(gammas[min(n, len(gammas) - 1)])

    schedule = build_schedule(config)
    c1 = corollary_constant(lam)
    print(f"kernel: {unit.family.value} lengthscale={unit.lengthscale:.6g} (unit variance)")
    print(f"C1 = {c1:.6g}   T = {T}   Delta = {args.delta:g}   B0 = {args.b0:g}")
    for which in BoundKind:
        n_max = corollary_n_max(args.delta, T, schedule, gamma, lam, which)
        print(f"{which.value:>4}: N_max = {n_max:4d}   budget bound B0*N_max = {args.b0 * n_max:.9g}")
    return 0


def cmd_verify(args) -> int:
    config = load_config(args.config)
    obj = get_objective(config.objective)
    region = resolved_region(config, obj)
    if Variant(config.attack.variant) is Variant.RANDOM:
        raise ConfigurationError("the random baseline has no fixed perturbed function to verify")
    candidates = candidate_points(obj, config.grid, Streams.from_seed(config.seed).candidates)
    policy = build_policy(config, obj, region, candidates)
    f = obj.values(candidates)
    c = perturbation_values(policy, region, candidates, f)
    f_tilde = f + c
    delta = args.delta if args.delta is not None else (config.attack.delta or 1.0)
    report = verify_attack_conditions(f, f_tilde, region.contains(candidates), delta, perturbation=c)
    print(f"objective={obj.name} attack={policy.variant.value} Delta={delta:g} grid points={len(candidates)}")
    for line in report.lines():
        print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpattack", description="Adversarial attacks on GP bandits.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="directory for trace CSV and figures")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="sweep one config key over values and seeds")
    p.add_argument("--config", required=True)
    p.add_argument("--param", required=True, help="dotted config key, e.g. attack.delta")
    p.add_argument("--values", required=True, type=lambda s: _csv_list(s, float))
    p.add_argument("--seeds", required=True, type=lambda s: _csv_list(s, int))
    p.add_argument("--out")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bound", help="print the budget bounds for suboptimal pulls")
    p.add_argument("--config", required=True)
    p.add_argument("--delta", required=True, type=float)
    p.add_argument("--b0", required=True, type=float)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("verify", help="check the attack success conditions on the candidate grid")
    p.add_argument("--config", required=True)
    p.add_argument("--delta", type=float, help="suboptimality level (default: attack.delta, else 1)")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, NumericalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
