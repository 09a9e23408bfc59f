"""Figures for fit reports: clustered curves with fitted means, and the fit trace."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .model import CurveSet, FitResult, map_partition, mean_curves  # noqa: E402

FIGSIZE = (6.0, 4.0)
DPI = 150


def _colors(K):
    cmap = plt.get_cmap("tab10" if K <= 10 else "viridis")
    return [cmap(k % 10) if K <= 10 else cmap(k / max(K - 1, 1)) for k in range(K)]


def plot_clusters(data: CurveSet, result: FitResult, path) -> Path:
    labels = map_partition(result.tau)
    K = result.params.K
    colors = _colors(K)
    grid = np.unique(data.x)
    means = mean_curves(result.params, result.basis, grid,
                        bounds=(float(data.x.min()), float(data.x.max())))
    fig, ax = plt.subplots(figsize=FIGSIZE)
    for i in range(data.n):
        ax.plot(data.x[i], data.y[i], color=colors[labels[i] - 1], lw=0.6, alpha=0.5)
    for k in range(K):
        ax.plot(grid, means[:, k], color=colors[k], lw=2.5,
                label=f"cluster {k + 1} ($\\pi$={result.params.pi[k]:.2f})")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(f"{result.engine} EM, K={K}, {result.n_iter} iterations")
    ax.legend(fontsize=8, frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return Path(path)


def plot_trace(result: FitResult, path) -> Path:
    it = result.trace.column("iteration")
    fig, (ax_k, ax_l) = plt.subplots(2, 1, figsize=FIGSIZE, sharex=True)
    ax_k.step(it, result.trace.column("K"), where="post", color="k")
    ax_k.set_ylabel("K")
    ax_k.set_yscale("log")
    ax_l.plot(it, result.trace.column("lam"), marker=".", color="tab:red")
    ax_l.set_ylabel("lambda")
    ax_l.set_xlabel("iteration")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
    return Path(path)
