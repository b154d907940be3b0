"""Figure rendering for solve reports.

Everything draws to files through the Agg backend so the command line
works headless.  Each function returns the path it wrote.
"""

from __future__ import annotations

from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .ocp import Iterate, OcpModel
from .solver import IterationRecord

_FIGSIZE = (8.0, 6.0)
_DPI = 150


def convergence_figure(records: Sequence[IterationRecord], path: str, title: str = "") -> str:
    """Optimality error, violation and barrier weight against iteration."""
    ks = [r.k for r in records]
    fig, (ax_top, ax_bot) = plt.subplots(2, 1, figsize=_FIGSIZE, sharex=True)
    floor = 1e-16
    ax_top.semilogy(ks, [max(r.error, floor) for r in records], label="error", marker=".")
    ax_top.semilogy(ks, [max(r.theta, floor) for r in records], label="violation", marker=".")
    if any(r.mode == "ip" for r in records):
        ax_top.semilogy(ks, [max(r.mu, floor) for r in records], label="barrier", ls="--")
    ax_top.legend(loc="best", fontsize=9)
    ax_top.set_ylabel("magnitude")
    if title:
        ax_top.set_title(title)
    ax_bot.plot(ks, [r.cost for r in records], marker=".")
    ax_bot.set_ylabel("cost")
    ax_bot.set_xlabel("iteration")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def trajectory_figure(model: OcpModel, it: Iterate, path: str, title: str = "") -> str:
    """States and controls against the stage index."""
    ts = np.arange(model.dims.horizon)
    fig, (ax_x, ax_u) = plt.subplots(2, 1, figsize=_FIGSIZE, sharex=True)
    for i in range(model.dims.n_x):
        ax_x.plot(ts, it.x[:, i], label=f"x{i}")
    ax_x.set_ylabel("state")
    ax_x.legend(loc="best", fontsize=8, ncol=2)
    if title:
        ax_x.set_title(title)
    for i in range(model.dims.n_u):
        ax_u.plot(ts, it.u[:, i], label=f"u{i}")
    ax_u.set_ylabel("control")
    ax_u.set_xlabel("stage")
    if model.dims.n_u <= 8:
        ax_u.legend(loc="best", fontsize=8, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def batch_figure(rows: Sequence[dict], path: str, title: str = "") -> str:
    """Iteration counts per run, colored by final status."""
    fig, ax = plt.subplots(figsize=_FIGSIZE)
    idx = np.arange(len(rows))
    counts = [row["iterations"] for row in rows]
    colors = ["tab:green" if row["status"] == "converged" else "tab:red" for row in rows]
    ax.bar(idx, counts, color=colors)
    ax.set_xticks(idx)
    ax.set_xticklabels([str(row["seed"]) for row in rows], fontsize=8)
    ax.set_xlabel("seed")
    ax.set_ylabel("iterations")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path
