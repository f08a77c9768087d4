"""Model-free TD(0) on the stationary hallway: watch the estimate converge."""

import numpy as np

from synthdyna import hallway as hw
from synthdyna.hallway import Regime
from synthdyna.td import Transition, td_update, zero_weights

rng = np.random.default_rng(7)
theta = zero_weights()
start_idx = hw.feature_index(hw.START)
truth = hw.true_value(hw.START, Regime.PLUS_TOP)

print(f"true v(start) = {truth:.6f}; estimate every 500 episodes:")
for episode in range(1, 5001):
    state = hw.START
    while not state.terminal:
        out = hw.step(state, Regime.PLUS_TOP, rng)
        tr = Transition(hw.features(state), out.reward,
                        hw.features(out.next), out.terminal)
        theta = td_update(theta, tr, 0.1)
        state = out.next
    if episode % 500 == 0:
        print(f"  episode {episode:5d}: v̂(start) = {theta[start_idx]:+.4f}"
              f"  (gap {theta[start_idx] - truth:+.4f})")

table = hw.value_table(Regime.PLUS_TOP)
gaps = [abs(theta[hw.feature_index(hw.GridState(r, c))] - table[r, c])
        for r in range(3) for c in range(5)]
print(f"final mean |error| over all 15 cells: {np.mean(gaps):.4f}")
print("(a fixed step size keeps sampling noise in the estimate forever;"
      " the per-episode MSE metric averages it out)")
