"""Walk the windy hallway and print its true-value tables.

The hallway drifts East one column per step and North/South on a fair coin.
Only the final column terminates; the rewarded corner flips every 300
episodes between +1 at top-right and -1 at bottom-right.
"""

import numpy as np

from synthdyna import hallway as hw
from synthdyna.hallway import GridState, Regime

rng = np.random.default_rng(0)

print("One sampled episode under PlusTop:")
state = hw.START
t = 0
while not state.terminal:
    out = hw.step(state, Regime.PLUS_TOP, rng)
    print(f"  t={t}: ({state.row},{state.col}) -> ({out.next.row},{out.next.col})"
          f"  r={out.reward:+.0f}{'  [terminal]' if out.terminal else ''}")
    state, t = out.next, t + 1

for regime in Regime:
    print(f"\nTrue values, {regime.value} (rows 0..2, columns 0..4):")
    table = hw.value_table(regime)
    for r in range(3):
        print("  " + "  ".join(f"{table[r, c]:+.6f}" for c in range(5)))

print("\nMonte-Carlo cross-check at the start state (PlusTop):")
mc = hw.monte_carlo_value(hw.START, Regime.PLUS_TOP, episodes=200_000,
                          rng=np.random.default_rng(1))
dp = hw.true_value(hw.START, Regime.PLUS_TOP)
print(f"  dynamic programming {dp:.9f}  vs  200k rollouts {mc:.6f}  (gap {abs(dp-mc):.2e})")

print("\nEvery episode lasts exactly 5 steps; regime at episodes 0/300/600:",
      ", ".join(hw.regime_at(e).value for e in (0, 300, 600)))
