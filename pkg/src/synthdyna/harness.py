"""Experiment protocol: trial loops for all four algorithms, the per-episode
MSE metric, multi-trial aggregation with confidence intervals, two-sample
t-tests, grid search, and the aggregated-model call-count demonstration.

Each trial owns three independently seeded random streams (environment wind,
model noise / replay sampling, minibatch selection), so a trial is a pure
function of its config and every run is reproducible bit for bit.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats as sps

from . import hallway, replay, synthmodel, td
from .hallway import EPISODE_LEN, GAMMA, REGIME_PERIOD, START, Regime
from .td import Transition

ALGORITHMS = ("modelfree", "allexp", "stableexp", "synthdyna")


@dataclass(frozen=True)
class TrialConfig:
    """One trial's settings. The defaults are the published configuration
    found by grid search on the windowed-MSE score; every run and the
    acceptance suite use them unless overridden."""

    algorithm: str = "modelfree"
    episodes: int = 15_000
    regime_period: int = REGIME_PERIOD
    gamma: float = GAMMA
    alpha: float = 0.4      # veridical TD step size
    beta: float = 0.1       # planning step size
    zeta: float = 0.1       # inner step size inside the meta-loss
    k: int = 5              # planning updates per environment step
    hidden_dim: int = 16
    noise_dim: int = 4
    batch_size: int = 32
    meta_lr: float = 1e-3
    meta_every: int = 1     # meta-update frequency in environment steps
    base_seed: int = 0
    trial_index: int = 0

    def validate(self) -> "TrialConfig":
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm '{self.algorithm}'")
        if self.episodes <= 0:
            raise ValueError("episodes must be positive")
        if self.alpha < 0 or self.beta < 0 or self.zeta <= 0 or self.meta_lr <= 0:
            raise ValueError("alpha/beta must be non-negative, zeta and meta_lr positive")
        if self.k < 0 or self.batch_size <= 0 or self.meta_every <= 0:
            raise ValueError("k must be >= 0, batch size and meta frequency positive")
        return self


@dataclass(frozen=True)
class EpisodeRecord:
    trial: int
    episode: int
    regime: Regime
    mse: float


class TrialError(RuntimeError):
    """A trial aborted: carries the 1-based environment step index."""


def trial_streams(config: TrialConfig):
    """Environment, model and minibatch generators for one trial."""
    root = np.random.SeedSequence(config.base_seed + config.trial_index)
    env_ss, model_ss, batch_ss = root.spawn(3)
    return (np.random.default_rng(env_ss), np.random.default_rng(model_ss),
            np.random.default_rng(batch_ss))


def mse_episode(snapshots, regime: Regime, gamma: float = GAMMA) -> float:
    """Mean squared value error over an episode's non-terminal states.

    snapshots holds (theta, state) pairs where theta was taken before that
    step's veridical update.
    """
    total = 0.0
    with np.errstate(over="ignore"):
        for theta, state in snapshots:
            v = hallway.true_value(state, regime, gamma)
            gap = np.float64(v - td.predict(theta, hallway.features(state)))
            total += float(gap * gap)
    return total / len(snapshots)


def run_trial(config: TrialConfig) -> list[EpisodeRecord]:
    """One full trial of the configured algorithm; one record per episode."""
    config.validate()
    rng_env, rng_model, rng_batch = trial_streams(config)
    algo = config.algorithm
    theta = td.zero_weights()
    theta_p = theta

    buffer = None
    source = None
    gen = None
    meta_buffer = None
    adam = None
    if algo == "allexp":
        buffer = replay.all_experience_buffer()
        source = buffer.sample
    elif algo == "stableexp":
        buffer = replay.stable_experience_buffer()
        source = buffer.sample
    elif algo == "synthdyna":
        gen = synthmodel.init_generator(rng_model, noise_dim=config.noise_dim,
                                        hidden_dim=config.hidden_dim)
        meta_buffer = synthmodel.MetaBuffer()
        adam = synthmodel.adam_init_for(gen, config.meta_lr)

    records = []
    global_step = 0
    for episode in range(config.episodes):
        regime = hallway.regime_at(episode, config.regime_period)
        state = START
        phi_prev = hallway.features(state)
        snapshots = []
        for _ in range(EPISODE_LEN):
            global_step += 1
            snapshots.append((theta, state))  # theta before the veridical update
            try:
                outcome = hallway.step(state, regime, rng_env)
                phi_t = hallway.features(outcome.next)
                tr = Transition(phi_prev, outcome.reward, phi_t, outcome.terminal)
                if meta_buffer is not None:
                    meta_buffer.append(synthmodel.MetaSample(
                        theta_p=theta_p, phi=phi_prev,
                        reward=outcome.reward, next_phi=phi_t))
                elif buffer is not None:
                    buffer.record(tr)
                theta = td.td_update(theta, tr, config.alpha, config.gamma)
                theta_p = theta
                if algo == "stableexp" or algo == "allexp":
                    theta = replay.plan(theta, source, config.k, config.beta,
                                        rng_model, config.gamma)
                elif algo == "synthdyna":
                    for _ in range(config.k):
                        synthetic = synthmodel.generate_transition(gen, rng_model)
                        theta = td.td_update(theta, synthetic, config.beta, config.gamma)
                    if global_step % config.meta_every == 0:
                        batch = meta_buffer.sample_batch(rng_batch, config.batch_size)
                        gen, adam, _ = synthmodel.meta_update(
                            gen, batch, adam, config.k, config.zeta, rng_model,
                            config.gamma)
            except (FloatingPointError, ValueError) as exc:
                raise TrialError(f"trial {config.trial_index} aborted at step "
                                 f"{global_step}: {exc}") from exc
            state = outcome.next
            phi_prev = phi_t
        mse = mse_episode(snapshots, regime, config.gamma)
        if not math.isfinite(mse):
            raise TrialError(f"trial {config.trial_index} aborted at step {global_step}: "
                             f"value weights diverged (episode MSE {mse})")
        records.append(EpisodeRecord(trial=config.trial_index, episode=episode,
                                     regime=regime, mse=mse))
    return records


def run_trials(config: TrialConfig, trials: int, workers: int = 1) -> list[EpisodeRecord]:
    """Run several trials (parallel workers allowed), merged in trial order."""
    configs = [replace(config, trial_index=i) for i in range(trials)]
    if workers <= 1 or trials <= 1:
        chunks = [run_trial(c) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, trials)) as pool:
            chunks = list(pool.map(run_trial, configs))
    out = []
    for chunk in chunks:
        out.extend(chunk)
    return out


# ---------------------------------------------------------------------------
# Aggregation and statistics


@dataclass(frozen=True)
class AggregateResult:
    episodes: np.ndarray        # episode indices
    mean: np.ndarray            # per-episode mean over trials
    ci_halfwidth: np.ndarray    # 95% band, NaN when trials < 2
    per_trial_window_avg: np.ndarray  # avg MSE over the scoring window, one per trial
    trials: int
    window: int


def _records_matrix(records: list[EpisodeRecord]) -> np.ndarray:
    by_trial: dict[int, dict[int, float]] = {}
    for r in records:
        by_trial.setdefault(r.trial, {})[r.episode] = r.mse
    counts = {t: len(v) for t, v in by_trial.items()}
    if len(set(counts.values())) > 1:
        raise ValueError(f"unequal episode counts across trials: {counts}")
    trials = sorted(by_trial)
    episodes = sorted(by_trial[trials[0]])
    return np.array([[by_trial[t][e] for e in episodes] for t in trials])


def confidence_halfwidth(values: np.ndarray, level: float = 0.95) -> float:
    """t-distribution CI half-width for the mean of a sample."""
    n = len(values)
    if n < 2:
        return float("nan")
    return float(sps.t.ppf(0.5 + level / 2, n - 1) * np.std(values, ddof=1) / math.sqrt(n))


def aggregate(records: list[EpisodeRecord], window: int = 600) -> AggregateResult:
    mat = _records_matrix(records)
    trials, n_episodes = mat.shape
    window = min(window, n_episodes)
    mean = mat.mean(axis=0)
    if trials >= 2:
        half = sps.t.ppf(0.975, trials - 1) * mat.std(axis=0, ddof=1) / math.sqrt(trials)
    else:
        half = np.full(n_episodes, np.nan)
    return AggregateResult(
        episodes=np.arange(n_episodes),
        mean=mean,
        ci_halfwidth=half,
        per_trial_window_avg=mat[:, n_episodes - window:].mean(axis=1),
        trials=trials,
        window=window,
    )


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    df: float
    degenerate: bool = False


def t_test(sample_a, sample_b, welch: bool = False) -> TTestResult:
    """Two-sample t-test; pooled-variance Student by default, Welch optional."""
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise ValueError("t_test: each sample needs at least 2 elements")
    va, vb = a.var(ddof=1), b.var(ddof=1)
    diff = a.mean() - b.mean()
    if va == 0.0 and vb == 0.0:
        if diff == 0.0:
            return TTestResult(t=0.0, p=1.0, df=na + nb - 2, degenerate=False)
        return TTestResult(t=math.copysign(math.inf, diff), p=0.0,
                           df=na + nb - 2, degenerate=True)
    if welch:
        se2a, se2b = va / na, vb / nb
        se = math.sqrt(se2a + se2b)
        df = (se2a + se2b) ** 2 / (se2a ** 2 / (na - 1) + se2b ** 2 / (nb - 1))
    else:
        df = na + nb - 2
        pooled = ((na - 1) * va + (nb - 1) * vb) / df
        se = math.sqrt(pooled * (1.0 / na + 1.0 / nb))
    t = diff / se
    p = 2.0 * float(sps.t.sf(abs(t), df))
    return TTestResult(t=float(t), p=p, df=float(df))


def summarize(per_algo_records: dict[str, list[EpisodeRecord]], window: int = 600,
              pairs: list[tuple[str, str]] | None = None, welch: bool = False) -> dict:
    """Cross-algorithm summary: windowed means with 95% CIs plus pairwise tests."""
    algos = {}
    scores = {}
    for name, records in per_algo_records.items():
        agg = aggregate(records, window)
        scores[name] = agg.per_trial_window_avg
        m = float(agg.per_trial_window_avg.mean())
        half = confidence_halfwidth(agg.per_trial_window_avg)
        algos[name] = {
            "mean_last600": m,
            "ci_low": m - half if math.isfinite(half) else None,
            "ci_high": m + half if math.isfinite(half) else None,
            "trials": int(agg.trials),
        }
    if pairs is None:
        names = sorted(per_algo_records)
        pairs = [(x, y) for i, x in enumerate(names) for y in names[i + 1:]]
    tests = []
    for a, b in pairs:
        r = t_test(scores[a], scores[b], welch=welch)
        tests.append({"algo_a": a, "algo_b": b, "t": r.t, "p": r.p, "df": r.df})
    return {"window": window, "algorithms": algos, "pairwise_tests": tests}


# ---------------------------------------------------------------------------
# Grid search


@dataclass(frozen=True)
class GridCell:
    settings: dict
    score: float
    failed: bool = False


def grid_search(base: TrialConfig, grid: dict[str, list], trials: int,
                window: int = 600, workers: int = 1):
    """Evaluate every grid cell; best = minimal mean windowed MSE.

    Ties prefer smaller step sizes (alpha, beta, zeta, meta_lr), then
    lexicographic order of the remaining settings. Failed cells are kept in
    the report but excluded from selection.
    """
    if not grid:
        raise ValueError("grid_search: empty grid")
    keys = sorted(grid)
    cells = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        settings = dict(zip(keys, combo))
        cfg = replace(base, **settings)
        try:
            records = run_trials(cfg, trials, workers)
            score = float(aggregate(records, window).per_trial_window_avg.mean())
            cells.append(GridCell(settings=settings, score=score))
        except TrialError:
            cells.append(GridCell(settings=settings, score=float("nan"), failed=True))
    usable = [c for c in cells if not c.failed]
    if not usable:
        raise RuntimeError("grid_search: every cell failed")

    def tiebreak(cell: GridCell):
        s = cell.settings
        steps = tuple(s.get(k, getattr(base, k)) for k in ("alpha", "beta", "zeta", "meta_lr"))
        return (cell.score, steps, tuple(sorted(s.items())))

    best = min(usable, key=tiebreak)
    return best, cells


# ---------------------------------------------------------------------------
# Aggregated-model call-count demonstration
#
# k duplicate one-hot states share a terminal transition with reward 1, so
# each has true value 1. A model sweeping one-hot tuples needs k calls per
# pass; a model emitting one k-hot tuple (reward scaled by k to keep the
# symmetric fixed point at 1) moves every coordinate per call.


@dataclass(frozen=True)
class TheoremDemoResult:
    env_model_calls: int
    aggregated_model_calls: int
    env_model_error: float
    aggregated_model_error: float


def theorem_demo(k: int, alpha: float, eps: float,
                 max_calls: int = 10_000_000) -> TheoremDemoResult:
    if k < 1:
        raise ValueError("theorem_demo: k must be >= 1")
    if not (0 < alpha and alpha * k < 1):
        raise ValueError(f"theorem_demo: need 0 < alpha and alpha*k < 1, "
                         f"got alpha={alpha}, k={k}")
    if eps <= 0:
        raise ValueError("theorem_demo: eps must be positive")
    zero = np.zeros(k)

    def run(transitions) -> tuple[int, float]:
        theta = np.zeros(k)
        calls = 0
        for tr in transitions:
            if np.max(np.abs(theta - 1.0)) < eps:
                break
            theta = td.td_update(theta, tr, alpha)
            calls += 1
            if calls >= max_calls:
                raise RuntimeError("theorem_demo: call budget exhausted")
        return calls, float(np.max(np.abs(theta - 1.0)))

    def env_sweep():
        for i in itertools.cycle(range(k)):
            phi = np.zeros(k)
            phi[i] = 1.0
            yield Transition(phi=phi, reward=1.0, next_phi=zero, terminal=True)

    def aggregated():
        khot = Transition(phi=np.ones(k), reward=float(k), next_phi=zero, terminal=True)
        while True:
            yield khot

    env_calls, env_err = run(env_sweep())
    agg_calls, agg_err = run(aggregated())
    return TheoremDemoResult(env_model_calls=env_calls, aggregated_model_calls=agg_calls,
                             env_model_error=env_err, aggregated_model_error=agg_err)


# ---------------------------------------------------------------------------
# File formats


def write_metrics_csv(path, records: list[EpisodeRecord]) -> None:
    """trial,episode,regime,mse with round-trippable float text."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["trial", "episode", "regime", "mse"])
        for r in records:
            writer.writerow([r.trial, r.episode, r.regime.value, repr(r.mse)])


def read_metrics_csv(path) -> list[EpisodeRecord]:
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        expected = {"trial", "episode", "regime", "mse"}
        if set(reader.fieldnames or ()) != expected:
            raise ValueError(f"metrics csv: expected columns {sorted(expected)}, "
                             f"got {reader.fieldnames}")
        for rec in reader:
            out.append(EpisodeRecord(trial=int(rec["trial"]), episode=int(rec["episode"]),
                                     regime=Regime(rec["regime"]), mse=float(rec["mse"])))
    return out


def write_summary_json(path, summary: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_grid_csv(path, cells: list[GridCell]) -> None:
    keys = sorted({k for c in cells for k in c.settings})
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(keys + ["score", "failed"])
        for c in cells:
            writer.writerow([repr(c.settings[k]) if isinstance(c.settings.get(k), float)
                             else c.settings.get(k, "") for k in keys]
                            + [repr(c.score), int(c.failed)])
