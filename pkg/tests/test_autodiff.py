import numpy as np
import pytest

from synthdyna import autodiff as ad


def loss_and_grad(build, x0):
    """Wrap an expression builder as a grad_check-compatible callable."""
    def fn(params):
        x = ad.leaf(params["x"])
        loss = build(x)
        ad.backward(loss)
        return float(loss.value), {"x": ad.gradient(x)}
    return fn, {"x": np.asarray(x0, dtype=np.float64)}


def test_tanh_at_origin():
    x = ad.leaf(0.0)
    y = ad.tanh(x)
    assert y.value == 0.0
    ad.backward(y)
    assert ad.gradient(x) == 1.0


def test_dot_hand_arithmetic():
    out = ad.dot(ad.constant([1.0, 2.0]), ad.constant([3.0, 4.0]))
    assert out.value == 11.0


def test_affine_identity():
    x = np.array([0.3, -1.2, 2.0])
    out = ad.affine(ad.constant(np.eye(3)), ad.leaf(x), ad.constant(np.zeros(3)))
    np.testing.assert_array_equal(out.value, x)


def test_shape_mismatch_rejected_at_build():
    with pytest.raises(ad.GraphError, match="add"):
        ad.add(ad.leaf(np.zeros(3)), ad.leaf(np.zeros(4)))
    with pytest.raises(ad.GraphError, match="matmul"):
        ad.matmul(ad.leaf(np.zeros((2, 3))), ad.leaf(np.zeros(4)))
    with pytest.raises(ad.GraphError, match="dot"):
        ad.dot(ad.leaf(np.zeros((2, 2))), ad.leaf(np.zeros(4)))


def test_backward_power_rule():
    x = ad.leaf(3.0)
    ad.backward(ad.square(x))
    assert ad.gradient(x) == 6.0


def test_backward_requires_scalar_loss():
    x = ad.leaf(np.zeros(3))
    with pytest.raises(ad.GraphError, match="scalar"):
        ad.backward(ad.square(x))


def test_two_layer_network_matches_finite_differences():
    rng = np.random.default_rng(0)
    w1c, b1c = rng.normal(size=(4, 6)), rng.normal(size=4)
    w2c, b2c = rng.normal(size=(2, 4)), rng.normal(size=2)
    target = rng.normal(size=2)

    def fn(params):
        x = ad.leaf(params["x"])
        h = ad.tanh(ad.affine(ad.constant(w1c), x, ad.constant(b1c)))
        out = ad.affine(ad.constant(w2c), h, ad.constant(b2c))
        loss = ad.mean(ad.square(ad.sub(out, ad.constant(target))))
        ad.backward(loss)
        return float(loss.value), {"x": ad.gradient(x)}

    err = ad.grad_check(fn, {"x": rng.normal(size=6)}, h=1e-6)
    assert err < 1e-6


def test_every_primitive_matches_finite_differences():
    worst = ad.check_primitives(np.random.default_rng(7), trials=5)
    assert worst < 1e-6


def test_backward_linear_in_upstream_adjoint():
    rng = np.random.default_rng(1)
    x0 = rng.normal(size=5)
    w = rng.normal(size=(3, 5))

    def grads(scale):
        x = ad.leaf(x0)
        loss = ad.total(ad.square(ad.matmul(ad.constant(w), x)))
        ad.backward(ad.smul(scale, loss))
        return ad.gradient(x)

    np.testing.assert_array_equal(grads(2.0), 2.0 * grads(1.0))


def test_stop_gradient_blocks_adjoints_but_passes_values():
    x = ad.leaf(np.array([1.0, -2.0]))
    held = ad.stop_gradient(x)
    np.testing.assert_array_equal(held.value, x.value)
    loss = ad.total(ad.square(held))
    ad.backward(loss)
    assert loss.value == 5.0
    np.testing.assert_array_equal(ad.gradient(x), np.zeros(2))


def test_detached_branch_contributes_no_gradient():
    # pred - sg(target): only the prediction path reaches the leaves
    rng = np.random.default_rng(2)
    w = ad.leaf(rng.normal(size=3))
    t = ad.leaf(rng.normal(size=3))
    pred = ad.dot(w, ad.constant([1.0, 2.0, 3.0]))
    target = ad.stop_gradient(ad.dot(t, ad.constant([1.0, 1.0, 1.0])))
    ad.backward(ad.square(ad.sub(pred, target)))
    assert np.any(ad.gradient(w) != 0.0)
    np.testing.assert_array_equal(ad.gradient(t), np.zeros(3))


def test_unreachable_nodes_have_zero_adjoint():
    x = ad.leaf(np.ones(3))
    unused = ad.leaf(np.ones(4))
    ad.backward(ad.total(ad.square(x)))
    np.testing.assert_array_equal(ad.gradient(unused), np.zeros(4))


def test_grad_check_quadratic_is_nearly_exact():
    fn, params = loss_and_grad(lambda x: ad.total(ad.square(x)), [0.5, -1.5, 2.0])
    assert ad.grad_check(fn, params, h=1e-6) < 1e-8


# ---------------------------------------------------------------------------
# Adam


def test_adam_zero_gradient_is_identity():
    params = {"w": np.array([1.0, -2.0]), "b": np.array(0.5)}
    state = ad.adam_init(params)
    zeros = {k: np.zeros_like(v) for k, v in params.items()}
    for expected_t in range(1, 6):
        params, state = ad.adam_step(params, zeros, state)
        assert state.t == expected_t
    np.testing.assert_array_equal(params["w"], [1.0, -2.0])
    np.testing.assert_array_equal(params["b"], 0.5)


def test_adam_first_step_closed_form():
    g = 0.5
    params = {"x": np.array(1.0)}
    state = ad.adam_init(params, lr=1e-3)
    new, state = ad.adam_step(params, {"x": np.array(g)}, state)
    expected = 1.0 - 1e-3 * g / (abs(g) + 1e-8)  # bias correction cancels at t=1
    assert new["x"] == pytest.approx(expected, rel=1e-15)
    assert new["x"] == pytest.approx(1.0 - 1e-3, rel=1e-6)


def test_adam_two_steps_match_hand_unrolled_recurrence():
    g = np.array([0.3, -1.7])
    lr, b1, b2, eps = 1e-3, 0.9, 0.999, 1e-8
    params = {"x": np.array([0.1, 0.2])}
    state = ad.adam_init(params, lr=lr)
    for _ in range(2):
        params, state = ad.adam_step(params, {"x": g}, state)

    x, m, v = np.array([0.1, 0.2]), np.zeros(2), np.zeros(2)
    for t in (1, 2):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        x = x - lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps)
    np.testing.assert_allclose(params["x"], x, rtol=1e-12)


def test_adam_rejects_non_finite_gradient_with_name():
    params = {"w": np.zeros(2), "b": np.zeros(1)}
    state = ad.adam_init(params)
    bad = {"w": np.zeros(2), "b": np.array([np.nan])}
    with pytest.raises(ad.NonFiniteError, match="'b'"):
        ad.adam_step(params, bad, state)


def test_adam_rejects_shape_mismatch():
    params = {"w": np.zeros(2)}
    state = ad.adam_init(params)
    with pytest.raises(ad.GraphError):
        ad.adam_step(params, {"w": np.zeros(3)}, state)
