"""SynthDyna's generative transition model and its meta-learning update.

The model is a 2-layer tanh network mapping Gaussian noise to a raw
transition tuple (phi, r, phi'). It is trained not to imitate the
environment but to be useful: the meta-loss replays k planning updates with
generated tuples from stored pre-planning weights, then scores the squared
TD error on the stored veridical transition that actually followed. The
TD target in that score is built from the stored initial weights, so the
model cannot shrink the loss by bending the target.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import AdamState
from .hallway import FEATURE_DIM, GAMMA
from .td import Transition


@dataclass(frozen=True)
class GeneratorParams:
    """Weights of the noise-to-transition network. Output is (phi | r | phi')."""

    w1: np.ndarray  # (hidden, noise_dim)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (2*feature_dim + 1, hidden)
    b2: np.ndarray  # (2*feature_dim + 1,)

    def __post_init__(self):
        h, z = self.w1.shape
        out, h2 = self.w2.shape
        if h != h2 or self.b1.shape != (h,) or self.b2.shape != (out,):
            raise ValueError("generator parameter shapes are inconsistent")
        if out % 2 != 1:
            raise ValueError(f"output dim {out} cannot split into (phi | r | phi')")

    @property
    def noise_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def feature_dim(self) -> int:
        return (self.w2.shape[0] - 1) // 2

    def as_dict(self) -> dict:
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}

    @staticmethod
    def from_dict(d: dict) -> "GeneratorParams":
        return GeneratorParams(w1=d["w1"], b1=d["b1"], w2=d["w2"], b2=d["b2"])


def init_generator(rng: np.random.Generator, feature_dim: int = FEATURE_DIM,
                   noise_dim: int = 8, hidden_dim: int = 32) -> GeneratorParams:
    """Symmetric uniform init scaled by 1/sqrt(fan-in)."""
    s1 = 1.0 / np.sqrt(noise_dim)
    s2 = 1.0 / np.sqrt(hidden_dim)
    out = 2 * feature_dim + 1
    return GeneratorParams(
        w1=rng.uniform(-s1, s1, size=(hidden_dim, noise_dim)),
        b1=rng.uniform(-s1, s1, size=hidden_dim),
        w2=rng.uniform(-s2, s2, size=(out, hidden_dim)),
        b2=rng.uniform(-s2, s2, size=out),
    )


def generate(params: GeneratorParams, z: np.ndarray):
    """Map one noise vector to a raw (phi, r, phi') tuple, no gradient tracking."""
    if z.shape != (params.noise_dim,):
        raise ValueError(f"noise shape {z.shape} does not match noise_dim {params.noise_dim}")
    out = params.w2 @ np.tanh(params.w1 @ z + params.b1) + params.b2
    n = params.feature_dim
    return out[:n], float(out[n]), out[n + 1:]


def generate_transition(params: GeneratorParams, rng: np.random.Generator) -> Transition:
    """Sample a synthetic transition for planning (one fresh noise vector)."""
    phi, reward, next_phi = generate(params, rng.standard_normal(params.noise_dim))
    return Transition(phi=phi, reward=reward, next_phi=next_phi, terminal=False)


@dataclass(frozen=True)
class MetaSample:
    """Stored meta-training tuple: pre-planning weights plus the veridical transition."""

    theta_p: np.ndarray
    phi: np.ndarray
    reward: float
    next_phi: np.ndarray


class MetaBuffer:
    """Append-only store of MetaSamples, sampled uniformly for minibatches."""

    def __init__(self):
        self.entries: list[MetaSample] = []

    def __len__(self) -> int:
        return len(self.entries)

    def append(self, sample: MetaSample) -> None:
        self.entries.append(sample)

    def sample_batch(self, rng: np.random.Generator, size: int) -> list[MetaSample]:
        if not self.entries:
            raise ValueError("meta buffer is empty")
        idx = rng.integers(0, len(self.entries), size=size)  # uniform, with replacement
        return [self.entries[int(i)] for i in idx]


def meta_loss_graph(params: GeneratorParams, batch: list[MetaSample], k: int,
                    zeta: float, noise: np.ndarray, gamma: float = GAMMA):
    """Build the differentiable meta-loss over a batch of stored samples.

    noise has shape (k, noise_dim, B): one fresh Gaussian vector per sample
    per inner planning step. The k inner TD updates run inside the graph so
    the returned loss is differentiable in the generator parameters; the
    evaluation target is assembled purely from stored quantities.

    Returns (loss node, target node, leaf dict) with leaves keyed like
    GeneratorParams.as_dict().
    """
    if k < 0:
        raise ValueError(f"meta loss: k must be non-negative, got {k}")
    if zeta <= 0:
        raise ValueError(f"meta loss: inner step size must be positive, got {zeta}")
    b = len(batch)
    if b == 0:
        raise ValueError("meta loss: empty batch")
    if noise.shape != (k, params.noise_dim, b):
        raise ValueError(f"meta loss: noise shape {noise.shape}, expected {(k, params.noise_dim, b)}")
    n = params.feature_dim

    leaves = {name: ad.leaf(value) for name, value in params.as_dict().items()}
    theta_p = ad.constant(np.stack([s.theta_p for s in batch], axis=1))  # (n, B)
    phi_eval = ad.constant(np.stack([s.phi for s in batch], axis=1))     # (n, B)
    next_eval = ad.constant(np.stack([s.next_phi for s in batch], axis=1))
    r_eval = ad.constant(np.array([s.reward for s in batch]))            # (B,)

    theta = theta_p
    with np.errstate(over="ignore", invalid="ignore"):  # non-finites raise below
        for i in range(k):
            out = ad.affine(leaves["w2"],
                            ad.tanh(ad.affine(leaves["w1"], ad.constant(noise[i]), leaves["b1"])),
                            leaves["b2"])                                # (2n+1, B)
            phi_gen = ad.rows(out, 0, n)
            r_gen = ad.row(out, n)
            next_gen = ad.rows(out, n + 1, 2 * n + 1)
            delta = ad.add(r_gen,
                           ad.sub(ad.smul(gamma, ad.colsum(ad.mul(theta, next_gen))),
                                  ad.colsum(ad.mul(theta, phi_gen))))    # (B,)
            if not np.all(np.isfinite(delta.value)):
                raise FloatingPointError(f"meta loss: non-finite TD error at inner step {i}")
            theta = ad.add(theta, ad.smul(zeta, ad.colscale(phi_gen, delta)))

        # target from stored quantities only: r + gamma * theta_p . phi'
        target = ad.add(r_eval,
                        ad.smul(gamma, ad.colsum(ad.mul(theta_p, next_eval))))
        prediction = ad.colsum(ad.mul(theta, phi_eval))
        loss = ad.mean(ad.square(ad.sub(target, prediction)))
    return loss, target, leaves


def meta_loss(params: GeneratorParams, sample: MetaSample, k: int, zeta: float,
              noise: np.ndarray, gamma: float = GAMMA) -> float:
    """Meta-loss for a single stored sample. noise has shape (k, noise_dim)."""
    loss, _, _ = meta_loss_graph(params, [sample], k, zeta, noise[:, :, None], gamma)
    return float(loss.value)


def meta_loss_grads(params: GeneratorParams, batch: list[MetaSample], k: int,
                    zeta: float, noise: np.ndarray, gamma: float = GAMMA):
    """Mean meta-loss over a batch and its gradient w.r.t. the generator."""
    loss, _, leaves = meta_loss_graph(params, batch, k, zeta, noise, gamma)
    ad.backward(loss)
    grads = {name: ad.gradient(node) for name, node in leaves.items()}
    return float(loss.value), grads


def adam_init_for(params: GeneratorParams, lr: float = 1e-3) -> AdamState:
    return ad.adam_init(params.as_dict(), lr=lr)


def meta_update(params: GeneratorParams, batch: list[MetaSample], adam: AdamState,
                k: int, zeta: float, rng: np.random.Generator,
                gamma: float = GAMMA):
    """One Adam step on the batch-mean meta-loss, with fresh noise per sample per step.

    Returns (new params, new adam state, loss value).
    """
    noise = rng.standard_normal((k, params.noise_dim, len(batch)))
    loss, grads = meta_loss_grads(params, batch, k, zeta, noise, gamma)
    if not np.isfinite(loss):
        raise FloatingPointError(f"meta update: non-finite loss {loss}")
    new_values, new_state = ad.adam_step(params.as_dict(), grads, adam)
    return GeneratorParams.from_dict(new_values), new_state, loss


def dump_params(params: GeneratorParams, path) -> None:
    """Checkpoint the generator weights (w1 row-major, b1, w2 row-major, b2)."""
    np.savez(path, w1=params.w1, b1=params.b1, w2=params.w2, b2=params.b2)


def load_params(path) -> GeneratorParams:
    with np.load(path) as data:
        return GeneratorParams(w1=data["w1"], b1=data["b1"],
                               w2=data["w2"], b2=data["b2"])
