"""The non-stationary windy hallway: a 3-row, 6-column gridworld.

Every step drifts one column East and one row North or South (fair coin,
clipped at the walls). The last column terminates the episode. Reward lives
either at the top-right cell (+1) or the bottom-right cell (-1); which one is
active flips every `regime period` episodes, and nothing in the observation
reveals the flip. Also holds the one-hot feature map and a dynamic-programming
oracle for the true value function.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

N_ROWS = 3
N_COLS = 6
TERMINAL_COL = N_COLS - 1
EPISODE_LEN = TERMINAL_COL  # start column 0, one column East per step
FEATURE_DIM = N_ROWS * TERMINAL_COL  # 15 non-terminal cells
GAMMA = 0.9
REGIME_PERIOD = 300


class Regime(Enum):
    PLUS_TOP = "PlusTop"        # +1 for terminating in row 0
    MINUS_BOTTOM = "MinusBottom"  # -1 for terminating in row 2


@dataclass(frozen=True)
class GridState:
    row: int
    col: int

    @property
    def terminal(self) -> bool:
        return self.col == TERMINAL_COL


@dataclass(frozen=True)
class StepOutcome:
    next: GridState
    reward: float
    terminal: bool


START = GridState(1, 0)


def regime_at(episode: int, period: int = REGIME_PERIOD) -> Regime:
    """Active reward regime for an episode index. period <= 0 never switches."""
    if period <= 0:
        return Regime.PLUS_TOP
    return Regime.PLUS_TOP if (episode // period) % 2 == 0 else Regime.MINUS_BOTTOM


def terminal_reward(row: int, regime: Regime) -> float:
    if regime is Regime.PLUS_TOP:
        return 1.0 if row == 0 else 0.0
    return -1.0 if row == 2 else 0.0


def step_with_draw(state: GridState, regime: Regime, north: bool) -> StepOutcome:
    """Deterministic transition given the wind draw (True = North-East)."""
    if state.terminal:
        raise ValueError(f"step from terminal state {state}")
    nrow = max(0, state.row - 1) if north else min(N_ROWS - 1, state.row + 1)
    nxt = GridState(nrow, state.col + 1)
    reward = terminal_reward(nrow, regime) if nxt.terminal else 0.0
    return StepOutcome(next=nxt, reward=reward, terminal=nxt.terminal)


def step(state: GridState, regime: Regime, rng: np.random.Generator) -> StepOutcome:
    """Sample one environment transition; North-East and South-East are equally likely."""
    return step_with_draw(state, regime, north=bool(rng.integers(0, 2) == 0))


def feature_index(state: GridState) -> int:
    if state.terminal:
        raise ValueError(f"terminal state {state} has no feature index")
    return state.row * TERMINAL_COL + state.col


_FEATURES = np.zeros((FEATURE_DIM + 1, FEATURE_DIM))
for _i in range(FEATURE_DIM):
    _FEATURES[_i, _i] = 1.0
_FEATURES.setflags(write=False)
_ZERO_FEATURES = _FEATURES[FEATURE_DIM]


def features(state: GridState) -> np.ndarray:
    """One-hot encoding of non-terminal cells; terminal maps to the zero vector.

    Returns read-only rows of a shared table, so callers can keep references
    without copying.
    """
    if state.terminal:
        return _ZERO_FEATURES
    return _FEATURES[feature_index(state)]


# ---------------------------------------------------------------------------
# True values
#
# All intermediate rewards are zero, so v(s) = gamma^(4 - col) * E[terminal
# reward | s]. The expectation is computed by backward induction over columns;
# it only ever averages halves of exact dyadic numbers, so the table is exact
# in float64 and the single discount multiply is the only rounding step.


def _expected_terminal_reward(regime: Regime) -> np.ndarray:
    exp = np.zeros((N_ROWS, N_COLS))
    for col in range(TERMINAL_COL - 1, -1, -1):
        for r in range(N_ROWS):
            up = max(0, r - 1)
            down = min(N_ROWS - 1, r + 1)
            if col == TERMINAL_COL - 1:
                nxt_up, nxt_down = terminal_reward(up, regime), terminal_reward(down, regime)
            else:
                nxt_up, nxt_down = exp[up, col + 1], exp[down, col + 1]
            exp[r, col] = 0.5 * (nxt_up + nxt_down)
    return exp[:, :TERMINAL_COL]


def value_table(regime: Regime, gamma: float = GAMMA) -> np.ndarray:
    """True values for every non-terminal cell, shape (3, 5)."""
    exp = _expected_terminal_reward(regime)
    discount = gamma ** np.arange(TERMINAL_COL - 1, -1, -1, dtype=np.float64)
    return exp * discount[None, :]


_VALUE_TABLES = {r: value_table(r) for r in Regime}
for _t in _VALUE_TABLES.values():
    _t.setflags(write=False)


def true_value(state: GridState, regime: Regime, gamma: float = GAMMA) -> float:
    if state.terminal:
        raise ValueError(f"true value queried for terminal state {state}")
    if gamma == GAMMA:
        return float(_VALUE_TABLES[regime][state.row, state.col])
    return float(value_table(regime, gamma)[state.row, state.col])


def monte_carlo_value(state: GridState, regime: Regime, episodes: int,
                      rng: np.random.Generator, gamma: float = GAMMA) -> float:
    """Estimate the value by rolling the wind forward, vectorized over episodes."""
    if state.terminal:
        raise ValueError(f"terminal state {state}")
    steps = TERMINAL_COL - state.col
    rows_now = np.full(episodes, state.row, dtype=np.int64)
    draws = rng.integers(0, 2, size=(episodes, steps))  # 0 = North-East
    for t in range(steps):
        rows_now = np.where(draws[:, t] == 0, np.maximum(rows_now - 1, 0),
                            np.minimum(rows_now + 1, N_ROWS - 1))
    if regime is Regime.PLUS_TOP:
        rewards = (rows_now == 0).astype(np.float64)
    else:
        rewards = -(rows_now == N_ROWS - 1).astype(np.float64)
    return float(gamma ** (steps - 1) * rewards.mean())


def oracle_rows() -> list[tuple[str, int, int, float]]:
    """(regime, row, col, value) for every non-terminal cell, both regimes."""
    out = []
    for regime in Regime:
        for r in range(N_ROWS):
            for c in range(TERMINAL_COL):
                out.append((regime.value, r, c, true_value(GridState(r, c), regime)))
    return out
