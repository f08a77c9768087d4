"""The tape in one sitting: build, differentiate, verify, optimize.

Everything downstream (the meta-learned transition model) rests on this
module, so it earns a narrated tour.
"""

import numpy as np

from synthdyna import autodiff as ad

# a scalar chain: d/dx tanh(x^2) at x = 0.7
x = ad.leaf(0.7)
y = ad.tanh(ad.square(x))
ad.backward(y)
print(f"tanh(x^2) at 0.7: value {float(y.value):.6f}, grad {float(ad.gradient(x)):.6f}")
print(f"  hand check: 2x(1-tanh^2(x^2)) = {2*0.7*(1-np.tanh(0.49)**2):.6f}")

# a two-layer network loss, checked against central finite differences
rng = np.random.default_rng(0)
w1, b1 = rng.normal(size=(8, 5)), rng.normal(size=8)
w2, b2 = rng.normal(size=(3, 8)), rng.normal(size=3)
target = rng.normal(size=3)

def loss_fn(values):
    leaves = {k: ad.leaf(v) for k, v in values.items()}
    h = ad.tanh(ad.affine(leaves["w1"], ad.constant(rng_x), leaves["b1"]))
    out = ad.affine(leaves["w2"], h, leaves["b2"])
    loss = ad.mean(ad.square(ad.sub(out, ad.constant(target))))
    ad.backward(loss)
    return float(loss.value), {k: ad.gradient(n) for k, n in leaves.items()}

rng_x = rng.normal(size=5)
err = ad.grad_check(loss_fn, {"w1": w1, "b1": b1, "w2": w2, "b2": b2}, h=1e-6)
print(f"two-layer net: worst relative gradient error vs finite differences {err:.2e}")

# stop_gradient: the target branch of a TD-style loss contributes nothing
w = ad.leaf(np.ones(3))
pred = ad.dot(w, ad.constant([1.0, 2.0, 3.0]))
tgt = ad.stop_gradient(ad.smul(0.9, pred))
ad.backward(ad.square(ad.sub(tgt, pred)))
print(f"semi-gradient loss: d/dw flows only through the prediction: {ad.gradient(w)}")

# Adam drives a quadratic to its minimum
params = {"p": np.array([4.0, -3.0])}
state = ad.adam_init(params, lr=0.05)
for step in range(400):
    grads = {"p": 2.0 * params["p"]}
    params, state = ad.adam_step(params, grads, state)
print(f"Adam on |p|^2 after 400 steps: {params['p']} (t={state.t})")
