"""Dyna-style prediction in the non-stationary windy hallway.

A meta-learned generative transition model (SynthDyna) trained for usefulness
to a linear TD(0) learner, compared against model-free TD and two
experience-replay planners, with a reproducible experiment harness.
"""

from .hallway import (GAMMA, FEATURE_DIM, GridState, Regime, START,
                      features, regime_at, step, true_value, value_table)
from .td import Transition, predict, td_update, zero_weights
from .replay import ReplayBuffer, all_experience_buffer, stable_experience_buffer, plan
from .synthmodel import (GeneratorParams, MetaBuffer, MetaSample, generate,
                         init_generator, meta_loss, meta_update)
from .harness import (ALGORITHMS, EpisodeRecord, TrialConfig, aggregate,
                      grid_search, mse_episode, run_trial, run_trials,
                      summarize, t_test, theorem_demo)

__all__ = [
    "GAMMA", "FEATURE_DIM", "GridState", "Regime", "START",
    "features", "regime_at", "step", "true_value", "value_table",
    "Transition", "predict", "td_update", "zero_weights",
    "ReplayBuffer", "all_experience_buffer", "stable_experience_buffer", "plan",
    "GeneratorParams", "MetaBuffer", "MetaSample", "generate",
    "init_generator", "meta_loss", "meta_update",
    "ALGORITHMS", "EpisodeRecord", "TrialConfig", "aggregate",
    "grid_search", "mse_episode", "run_trial", "run_trials",
    "summarize", "t_test", "theorem_demo",
]

__version__ = "0.1.0"
