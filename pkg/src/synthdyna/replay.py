"""Experience buffers and the Dyna planning loop for the replay baselines.

AllExperienceDyna replays every stored tuple; StableExperienceDyna keeps only
the transitions that stay valid across reward-regime switches (non-terminating,
zero reward). Sampling is uniform over stored entries, so duplicated experience
is replayed proportionally to how often it occurred.
"""

from __future__ import annotations

import numpy as np

from .td import Transition, td_update


class NoExperienceError(RuntimeError):
    """Raised when sampling from a buffer that has not stored anything yet."""


def stable_predicate(tr: Transition) -> bool:
    return not tr.terminal and tr.reward == 0.0


class ReplayBuffer:
    """Append-only transition store with an optional insertion filter."""

    def __init__(self, predicate=None, capacity: int | None = None):
        self.predicate = predicate
        self.capacity = capacity
        self.entries: list[Transition] = []

    def __len__(self) -> int:
        return len(self.entries)

    def record(self, tr: Transition) -> bool:
        """Append if the filter passes. Returns whether the entry was kept."""
        if self.predicate is not None and not self.predicate(tr):
            return False
        if self.capacity is not None and len(self.entries) >= self.capacity:
            self.entries.pop(0)
        self.entries.append(tr)
        return True

    def sample(self, rng: np.random.Generator) -> Transition:
        if not self.entries:
            raise NoExperienceError("replay buffer is empty")
        return self.entries[int(rng.integers(0, len(self.entries)))]


def all_experience_buffer(capacity: int | None = None) -> ReplayBuffer:
    return ReplayBuffer(predicate=None, capacity=capacity)


def stable_experience_buffer(capacity: int | None = None) -> ReplayBuffer:
    return ReplayBuffer(predicate=stable_predicate, capacity=capacity)


def plan(theta: np.ndarray, transition_source, k: int, beta: float,
         rng: np.random.Generator, gamma: float | None = None) -> np.ndarray:
    """Apply k TD updates on fresh samples from a transition source.

    The source is a callable (rng) -> Transition that may raise
    NoExperienceError, in which case planning is skipped and theta is
    returned unchanged.
    """
    if k < 0:
        raise ValueError(f"plan: k must be non-negative, got {k}")
    kwargs = {} if gamma is None else {"gamma": gamma}
    for _ in range(k):
        try:
            tr = transition_source(rng)
        except NoExperienceError:
            return theta
        theta = td_update(theta, tr, beta, **kwargs)
    return theta
