"""Readers for the experiment harness file formats.

This package talks to the experiment code only through its exported files:
the per-episode metrics CSV (trial,episode,regime,mse) and the summary JSON.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

METRIC_COLUMNS = ("trial", "episode", "regime", "mse")


@dataclass(frozen=True)
class MetricsTable:
    """Per-episode MSE matrix, one row per trial."""

    episodes: np.ndarray  # (E,)
    mse: np.ndarray       # (T, E)
    regimes: list[str]    # per episode


def read_metrics(path) -> MetricsTable:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        got = tuple(reader.fieldnames or ())
        if set(got) != set(METRIC_COLUMNS):
            missing = set(METRIC_COLUMNS) - set(got)
            raise ValueError(f"{path}: metrics csv missing columns {sorted(missing)}"
                             if missing else f"{path}: unexpected columns {got}")
        for rec in reader:
            rows.append((int(rec["trial"]), int(rec["episode"]),
                         rec["regime"], float(rec["mse"])))
    if not rows:
        raise ValueError(f"{path}: no data rows")

    trials = sorted({r[0] for r in rows})
    episodes = sorted({r[1] for r in rows})
    t_index = {t: i for i, t in enumerate(trials)}
    e_index = {e: i for i, e in enumerate(episodes)}
    mse = np.full((len(trials), len(episodes)), np.nan)
    regimes = [""] * len(episodes)
    for trial, episode, regime, value in rows:
        mse[t_index[trial], e_index[episode]] = value
        regimes[e_index[episode]] = regime
    if np.isnan(mse).any():
        raise ValueError(f"{path}: trials do not share the same episode range")
    return MetricsTable(episodes=np.asarray(episodes), mse=mse, regimes=regimes)


def read_summary(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        summary = json.load(fh)
    if "algorithms" not in summary:
        raise ValueError(f"{path}: summary json lacks an 'algorithms' section")
    return summary


def mean_and_ci(mse: np.ndarray):
    """Per-episode mean over trials and 95% t-interval half-width.

    Matches the experiment harness aggregation exactly (same estimator,
    same ddof), so replotting from raw rows reproduces its curves.
    """
    trials = mse.shape[0]
    mean = mse.mean(axis=0)
    if trials < 2:
        return mean, np.zeros_like(mean)
    half = sps.t.ppf(0.975, trials - 1) * mse.std(axis=0, ddof=1) / math.sqrt(trials)
    return mean, half
