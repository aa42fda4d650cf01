"""Figure rendering for optimizer and pipeline results.

Renders to files through the Agg backend, so it works headless; nothing
here opens a window. Figures complement the machine-readable outputs
(JSON report, CSV trial rows) rather than replacing them.
"""

from __future__ import annotations

import os
from typing import List, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .guideline import (
    GuidelineProblem,
    GuidelineSolution,
    _accept,
    _attack_prob,
    _key_length,
)
from .mlts import rg_success_prob
from .pipeline import PipelineReport, TrialRow

__all__ = ["render_guideline_figure", "render_pipeline_figures"]


def render_guideline_figure(
    problem: GuidelineProblem, solution: GuidelineSolution, path: str
) -> str:
    """Efficiency heatmap over the (alpha, r) grid with the optimum marked.

    Infeasible cells are blanked; the chosen point is starred. Returns
    the written path.
    """
    alphas = problem.alpha_grid.values()
    rs = problem.r_grid.values()
    h = np.array([_accept(problem, a) for a in alphas])
    i_mlts = _attack_prob(problem)
    p_rg = np.array(
        [
            rg_success_prob(problem.adversary_searches, _key_length(problem, r))
            for r in rs
        ]
    )
    eff = np.outer(rs, h)  # rows r, cols alpha
    feas = p_rg[:, None] - i_mlts * h[None, :] >= 0.0
    masked = np.ma.masked_where(~feas, eff)

    fig, ax = plt.subplots(figsize=(7.5, 5.0))
    extent = (alphas[0], alphas[-1], rs[0], rs[-1])
    cmap = plt.get_cmap("viridis").copy()
    cmap.set_bad("lightgray")
    im = ax.imshow(
        masked,
        origin="lower",
        aspect="auto",
        extent=extent,
        cmap=cmap,
        vmin=0.0,
        vmax=1.0,
    )
    fig.colorbar(im, ax=ax, label="efficiency  E = P(accept) * r")
    marker = "*" if solution.feasible else "x"
    ax.plot(
        [solution.alpha_star],
        [solution.r_star],
        marker,
        color="red",
        markersize=14,
        markeredgecolor="white",
    )
    status = "optimum" if solution.feasible else "least-violating point"
    ax.set_title(
        f"feasible region (gray = infeasible), {status} at "
        f"alpha={solution.alpha_star:.4g}, r={solution.r_star:.3g}"
    )
    ax.set_xlabel("significance level alpha")
    ax.set_ylabel("compression ratio r")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_pipeline_figures(
    report: PipelineReport, rows: Sequence[TrialRow], directory: str
) -> List[str]:
    """Mismatch histogram and run-progress figure; returns written paths."""
    os.makedirs(directory, exist_ok=True)
    paths = []

    mismatches = np.array([row.mismatch for row in rows])
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.hist(mismatches, bins=min(40, max(5, len(rows) // 20 + 5)), color="tab:blue")
    ax.axvline(
        report.r_mismatch,
        color="tab:red",
        linestyle="--",
        label=f"mean = {report.r_mismatch:.3f}",
    )
    ax.set_xlabel("raw bit mismatch rate per trial")
    ax.set_ylabel("trials")
    ax.set_title("endpoint disagreement before reconciliation")
    ax.legend()
    fig.tight_layout()
    path = os.path.join(directory, "pipeline_mismatch.png")
    fig.savefig(path, dpi=130)
    plt.close(fig)
    paths.append(path)

    accepted = np.array([row.accepted for row in rows], dtype=float)
    trials = np.arange(1, len(rows) + 1)
    running = np.cumsum(accepted) / trials
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.plot(trials, running, color="tab:blue", label="running accept rate")
    hits = [row.trial + 1 for row in rows if row.eve_hit]
    if hits:
        ax.plot(
            hits,
            running[np.array(hits) - 1],
            "v",
            color="tab:red",
            label=f"attack hits ({len(hits)})",
        )
    ax.axhline(
        report.p_accept_empirical, color="gray", linestyle=":", linewidth=1
    )
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("trial")
    ax.set_ylabel("accept rate")
    ax.set_title(
        f"acceptance and attack hits (alpha={report.alpha:.4g}, r={report.r:.3g})"
    )
    ax.legend()
    fig.tight_layout()
    path = os.path.join(directory, "pipeline_progress.png")
    fig.savefig(path, dpi=130)
    plt.close(fig)
    paths.append(path)
    return paths
