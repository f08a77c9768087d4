"""Linear value function and the semi-gradient TD(0) update.

The same update handles veridical transitions from the hallway and internal
transitions replayed from a buffer or sampled from a generative model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hallway import FEATURE_DIM, GAMMA


@dataclass(frozen=True)
class Transition:
    """(phi, r, phi', terminal) in feature space."""

    phi: np.ndarray
    reward: float
    next_phi: np.ndarray
    terminal: bool = False

    def __post_init__(self):
        if self.terminal and np.any(self.next_phi):
            raise ValueError("terminal transition must carry a zero next feature vector")


def zero_weights(dim: int = FEATURE_DIM) -> np.ndarray:
    return np.zeros(dim)


def predict(theta: np.ndarray, phi: np.ndarray) -> float:
    if theta.shape != phi.shape:
        raise ValueError(f"predict: weights {theta.shape} vs features {phi.shape}")
    return float(theta @ phi)


def td_error(theta: np.ndarray, tr: Transition, gamma: float = GAMMA) -> float:
    with np.errstate(invalid="ignore", over="ignore"):  # callers reject non-finite results
        return tr.reward + gamma * (theta @ tr.next_phi) - theta @ tr.phi


def td_update(theta: np.ndarray, tr: Transition, stepsize: float,
              gamma: float = GAMMA) -> np.ndarray:
    """One semi-gradient TD(0) step; returns a fresh weight vector.

    A zero step size is allowed as a degenerate no-learning setting (used by
    diagnostic runs and dominated grid cells); negative steps are rejected.
    """
    if not (np.isfinite(stepsize) and stepsize >= 0):
        raise ValueError(f"td_update: step size must be finite and non-negative, got {stepsize}")
    delta = td_error(theta, tr, gamma)
    if not np.isfinite(delta):
        raise FloatingPointError(
            f"td_update: non-finite TD error {delta} (reward {tr.reward})")
    return theta + (stepsize * delta) * tr.phi
