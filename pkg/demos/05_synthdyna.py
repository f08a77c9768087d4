"""Train SynthDyna's generative model and peek inside it.

The model maps Gaussian noise to whole transition tuples and is trained only
on how much its planning helps the value learner predict the next veridical
transition. Nothing asks it to imitate the hallway, and it does not.
"""

import numpy as np

from synthdyna import hallway as hw
from synthdyna import synthmodel as sm
from synthdyna import td
from synthdyna.harness import TrialConfig, run_trials, trial_streams
from synthdyna.hallway import EPISODE_LEN, START
from synthdyna.td import Transition

EPISODES = 1500
cfg = TrialConfig(algorithm="synthdyna", episodes=EPISODES, base_seed=0)

# run the loop inline so we can keep the trained generator at the end
rng_env, rng_model, rng_batch = trial_streams(cfg)
gen = sm.init_generator(rng_model, noise_dim=cfg.noise_dim, hidden_dim=cfg.hidden_dim)
buffer = sm.MetaBuffer()
adam = sm.adam_init_for(gen, cfg.meta_lr)
theta = td.zero_weights()
theta_p = theta
losses = []
for episode in range(EPISODES):
    regime = hw.regime_at(episode)
    state, phi_prev = START, hw.features(START)
    for _ in range(EPISODE_LEN):
        out = hw.step(state, regime, rng_env)
        phi_t = hw.features(out.next)
        buffer.append(sm.MetaSample(theta_p, phi_prev, out.reward, phi_t))
        theta = td.td_update(theta, Transition(phi_prev, out.reward, phi_t, out.terminal),
                             cfg.alpha)
        theta_p = theta
        for _ in range(cfg.k):
            theta = td.td_update(theta, sm.generate_transition(gen, rng_model), cfg.beta)
        batch = buffer.sample_batch(rng_batch, cfg.batch_size)
        gen, adam, loss = sm.meta_update(gen, batch, adam, cfg.k, cfg.zeta, rng_model)
        state, phi_prev = out.next, phi_t
    losses.append(loss)

chunk = EPISODES // 5
print("meta-loss trend (chunk means):",
      [f"{np.mean(losses[i:i + chunk]):.4f}" for i in range(0, EPISODES, chunk)])

z = np.random.default_rng(1).standard_normal((3, cfg.noise_dim))
print("\nthree sampled synthetic tuples (phi entries rounded):")
for zi in z:
    phi, r, nxt = sm.generate(gen, zi)
    print(f"  r={r:+.2f}  phi   {np.round(phi, 2)}")
    print(f"           phi'  {np.round(nxt, 2)}")
print("\nnote: these are nothing like one-hot hallway states; the model invents")
print("dense feature mixtures whose TD updates are useful, not accurate.")

print("\nhead-to-head, last 600 of 3000 episodes (3 trials each):")
from synthdyna.harness import aggregate
for algo in ("stableexp", "synthdyna"):
    recs = run_trials(TrialConfig(algorithm=algo, episodes=3000, base_seed=0), trials=3)
    print(f"  {algo:>10}: {aggregate(recs, window=600).per_trial_window_avg.mean():.4f}")
