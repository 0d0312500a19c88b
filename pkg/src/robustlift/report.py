"""Delimited trace/frontier output and the figures rendered alongside it."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .pareto import ParetoPoint
from .solvers import IterateTrace

__all__ = [
    "TRACE_HEADER",
    "FRONTIER_HEADER",
    "write_trace_csv",
    "write_frontier_csv",
    "render_convergence_figure",
    "render_frontier_figure",
]

TRACE_HEADER = "iteration,primal_residual,dual_residual,eps_pri,eps_dual,duality_gap,solver"
FRONTIER_HEADER = "phi,robust_value,expected_value,iterations"


def _cell(value: float) -> str:
    # empty cell, not zero, where a quantity was never computed
    if math.isnan(value):
        return ""
    return f"{value:.12e}"


def write_trace_csv(path, trace: IterateTrace) -> None:
    lines = [TRACE_HEADER]
    for i in range(len(trace)):
        lines.append(",".join([
            str(trace.iterations[i]),
            _cell(trace.primal_residual[i]),
            _cell(trace.dual_residual[i]),
            _cell(trace.eps_pri[i]),
            _cell(trace.eps_dual[i]),
            _cell(trace.duality_gap[i]),
            trace.solver,
        ]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_frontier_csv(path, points: list[ParetoPoint]) -> None:
    lines = [FRONTIER_HEADER]
    for pt in points:
        lines.append(",".join([
            _cell(pt.floor_value),
            _cell(pt.robust_value),
            _cell(pt.expected_value),
            str(pt.iterations),
        ]))
    Path(path).write_text("\n".join(lines) + "\n")


def _finite_series(iterations, values):
    xs = [k for k, v in zip(iterations, values) if not math.isnan(v)]
    ys = [v for v in values if not math.isnan(v)]
    return xs, ys


def render_convergence_figure(traces: list[IterateTrace], path) -> None:
    """Residuals (when present) and duality gaps on log axes, saved to ``path``."""
    residual_traces = [t for t in traces
                       if any(not math.isnan(v) for v in t.primal_residual)]
    gap_traces = [t for t in traces if any(not math.isnan(v) for v in t.duality_gap)]
    ncols = (1 if residual_traces else 0) + (1 if gap_traces else 0)
    if ncols == 0:
        ncols = 1
    fig, axes = plt.subplots(1, ncols, figsize=(6.0 * ncols, 4.2))
    if ncols == 1:
        axes = [axes]
    col = 0
    if residual_traces:
        ax = axes[col]
        col += 1
        for t in residual_traces:
            ax.semilogy(*_finite_series(t.iterations, t.primal_residual),
                        label=f"{t.solver} primal")
            ax.semilogy(*_finite_series(t.iterations, t.dual_residual),
                        label=f"{t.solver} dual")
        ax.set_xlabel("iteration")
        ax.set_ylabel("residual norm")
        ax.set_title("consensus residuals")
        ax.grid(True, alpha=0.3)
        ax.legend()
    if gap_traces:
        ax = axes[col]
        for t in gap_traces:
            xs, ys = _finite_series(t.iterations, t.duality_gap)
            ys = [max(y, 1e-16) for y in ys]
            ax.semilogy(xs, ys, label=t.solver)
        ax.set_xlabel("iteration")
        ax.set_ylabel("duality gap")
        ax.set_title("optimality certificate")
        ax.grid(True, alpha=0.3)
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_frontier_figure(points: list[ParetoPoint], path) -> None:
    """Expected vs. worst-case outcome of each frontier point, saved to ``path``."""
    solved = [pt for pt in points if math.isfinite(pt.robust_value)]
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ax.plot([pt.expected_value for pt in solved], [pt.robust_value for pt in solved],
            marker="o")
    ax.set_xlabel("expected outcome")
    ax.set_ylabel("worst-case outcome")
    ax.set_title("worst-case vs. expected tradeoff")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
