"""Figure rendering for the CLI report path.

Each helper writes a PNG next to the delimited report and returns the path.
The Agg backend is forced so rendering works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_ratio_scan(rows, metric: str, path) -> str:
    """Metric curve over one compression-ratio scan (errorbars = fold std)."""
    axis = "mu" if rows and rows[0]["stage"] == "mu-scan" else "nu"
    ratios = [r[axis] for r in rows]
    means = [r["mean"] for r in rows]
    stds = [r["std"] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.errorbar(ratios, means, yerr=stds, marker="o", capsize=3)
    ax.set_xlabel(f"{axis} (compression ratio)")
    ax.set_ylabel(metric)
    ax.set_title(f"{metric} vs {axis}")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def plot_grid_heatmap(rows, metric: str, path) -> str:
    """Full mu x nu grid as a heatmap."""
    mus = sorted({r["mu"] for r in rows})
    nus = sorted({r["nu"] for r in rows})
    grid = np.full((len(nus), len(mus)), np.nan)
    for r in rows:
        grid[nus.index(r["nu"]), mus.index(r["mu"])] = r["mean"]
    fig, ax = plt.subplots(figsize=(5.4, 4.2))
    im = ax.imshow(grid, origin="lower", aspect="auto",
                   extent=(min(mus), max(mus), min(nus), max(nus)))
    fig.colorbar(im, ax=ax, label=metric)
    ax.set_xlabel("mu (feature ratio)")
    ax.set_ylabel("nu (label ratio)")
    ax.set_title(f"{metric} over the ratio grid")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def plot_sensitivity(report, metric: str, path) -> str:
    """Two panels: the metric and the normalized dep/rec terms vs log10(alpha)."""
    logs = np.log10(report.alphas)
    means = [s.get(metric, (np.nan, np.nan))[0] for s in report.metric_stats]
    stds = [s.get(metric, (np.nan, np.nan))[1] for s in report.metric_stats]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.6, 3.4))
    ax1.errorbar(logs, means, yerr=stds, marker="o", capsize=3)
    ax1.set_xlabel("log10(alpha)")
    ax1.set_ylabel(metric)
    ax1.grid(True, alpha=0.3)
    ax2.plot(logs, report.dep_norm, marker="o", label="dep'")
    ax2.plot(logs, report.rec_norm, marker="s", label="rec'")
    ax2.set_xlabel("log10(alpha)")
    ax2.set_ylabel("normalized term value")
    ax2.set_ylim(-0.05, 1.05)
    ax2.legend()
    ax2.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def plot_bound_summary(rows, path) -> str:
    """Mean realized bound and misclassification count per strategy."""
    names = [r["strategy"] for r in rows]
    xs = np.arange(len(names))
    fig, ax = plt.subplots(figsize=(5, 3.4))
    width = 0.38
    ax.bar(xs - width / 2, [r["mean_bound"] for r in rows], width, label="mean bound")
    ax.bar(xs + width / 2, [r["mean_n_mis"] for r in rows], width, label="mean errors")
    ax.set_xticks(xs, names)
    ax.set_ylabel("labels per instance")
    ax.set_title("misclassification bound by strategy")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)
