"""The two report figures: windowed learning curves and the summary bar chart."""

from __future__ import annotations

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .io import MetricsTable, mean_and_ci

CYCLE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")


def learning_curve(tables: dict[str, MetricsTable], out_path, window: int = 600,
                   mark_switch: bool = True) -> None:
    """Per-episode mean with a shaded 95% band for each algorithm.

    Plots the last `window` episodes. All inputs must share one episode range.
    """
    if not tables:
        raise ValueError("no input tables")
    ranges = {name: (t.episodes[0], t.episodes[-1]) for name, t in tables.items()}
    if len(set(ranges.values())) != 1:
        raise ValueError(f"episode ranges differ between inputs: {ranges}")

    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    for color, (label, table) in zip(CYCLE, tables.items()):
        n = len(table.episodes)
        w = min(window, n)
        xs = table.episodes[n - w:]
        mean, half = mean_and_ci(table.mse[:, n - w:])
        ax.plot(xs, mean, label=label, color=color, linewidth=1.2)
        ax.fill_between(xs, mean - half, mean + half, color=color, alpha=0.2, linewidth=0)
    if mark_switch:
        some = next(iter(tables.values()))
        n = len(some.episodes)
        w = min(window, n)
        ax.axvline(some.episodes[n - w] + w // 2, color="gray", linestyle="--",
                   linewidth=0.8, label="regime switch")
    ax.set_xlabel("episode")
    ax.set_ylabel("MSE per episode")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def bar_chart(summary: dict, out_path) -> None:
    """One bar per algorithm: windowed mean MSE with 95% CI whiskers."""
    algos = summary["algorithms"]
    if not algos:
        raise ValueError("summary contains no algorithms")
    names = list(algos)
    means, errs = [], []
    for name in names:
        entry = algos[name]
        for key in ("mean_last600", "ci_low", "ci_high"):
            if key not in entry:
                raise ValueError(f"summary entry for '{name}' lacks '{key}'")
        means.append(entry["mean_last600"])
        if entry["ci_high"] is None:
            errs.append(0.0)
        else:
            errs.append(entry["ci_high"] - entry["mean_last600"])

    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    xs = np.arange(len(names))
    ax.bar(xs, means, yerr=errs, capsize=4,
           color=[CYCLE[i % len(CYCLE)] for i in range(len(names))])
    ax.set_xticks(xs, names, rotation=15)
    ax.set_ylabel(f"average MSE (last {summary.get('window', 600)} episodes)")
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
