"""Figures for runs and sweeps, rendered straight to files (no pyplot state)."""

from __future__ import annotations

from math import sqrt
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import numpy as np  # noqa: E402
from matplotlib import rc_context  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from .metrics import metric_curves  # noqa: E402

fig_width_pt = 345.0  # single column
inches_per_pt = 1.0 / 72.27
golden_mean = (sqrt(5.0) - 1.0) / 2.0
fig_width = fig_width_pt * inches_per_pt
fig_size = [fig_width, fig_width * golden_mean]

STYLE = {
    "axes.labelsize": 9,
    "font.size": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "font.family": "serif",
    "figure.figsize": fig_size,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "xtick.major.size": 3,
    "ytick.major.size": 3,
    "lines.linewidth": 1.2,
    "svg.hashsalt": "gpattack",  # stable SVG ids
}


def _save(fig: Figure, path) -> Path:
    path = Path(path)
    try:
        fig.savefig(path, bbox_inches="tight", metadata={"Date": None} if path.suffix == ".svg" else None)
    except OSError as exc:
        raise OSError(f"cannot write figure {path}: {exc}") from exc
    return path


def plot_success_vs_cost(sweep, path, param: str = "theta") -> Path:
    """Average success rate against normalized cost, one point per hyperparameter value.

    Per-seed results are drawn faintly behind the averages.
    """
    with rc_context(STYLE):
        fig = Figure()
        ax = fig.add_subplot(111)
        seeds = [r for r in sweep.rows if r.get("error") is None]
        avgs = [a for a in sweep.averages if np.isfinite(a["success_rate_T"])]
        floor = 1e-6
        if seeds:
            ax.scatter([max(r["norm_cost_T"], floor) for r in seeds], [r["success_rate_T"] for r in seeds],
                       s=8, color="0.7", label="per seed", zorder=1)
        if avgs:
            cost = np.array([max(a["norm_cost_T"], floor) for a in avgs])
            sr = np.array([a["success_rate_T"] for a in avgs])
            ax.plot(cost, sr, "o-", color="C0", ms=4, label="mean", zorder=2)
            for a, cx, sy in zip(avgs, cost, sr):
                ax.annotate(f"{a['theta']:g}", (cx, sy), textcoords="offset points", xytext=(3, 3), fontsize=6)
            if sweep.efficient_theta is not None:
                k = [a["theta"] for a in avgs].index(sweep.efficient_theta)
                ax.plot(cost[k], sr[k], "*", color="C3", ms=10, label=f"efficient {param}", zorder=3)
            ax.set_xscale("log")
        ax.set_xlabel("normalized cumulative cost")
        ax.set_ylabel("success rate")
        ax.set_ylim(-0.02, 1.02)
        ax.legend(frameon=False, loc="lower right")
        return _save(fig, path)


def plot_trace(trace, path) -> Path:
    """Success rate, normalized cost and regret of one run over the rounds."""
    sr, cost, regret = metric_curves(trace)
    rounds = trace.rounds
    t = trace.t[rounds]
    with rc_context(STYLE):
        fig = Figure(figsize=(fig_size[0], 1.6 * fig_size[1]))
        axes = fig.subplots(3, 1, sharex=True)
        for ax, values, label in zip(axes, (sr, cost, regret), ("success rate", "norm. cost", "regret")):
            ax.plot(t, values[rounds], color="C0")
            ax.set_ylabel(label)
        axes[0].set_ylim(-0.02, 1.02)
        axes[-1].set_xlabel("round $t$")
        fig.align_ylabels(axes)
        return _save(fig, path)
