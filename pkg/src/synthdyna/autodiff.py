"""Tape-based reverse-mode differentiation over small dense float64 arrays.

The graph is built implicitly: every operation creates a Node holding its
forward value and the local backward rules into its parents. backward() walks
the tape from a scalar loss and accumulates adjoints. Also provides an Adam
optimizer over named parameter dicts and a central-difference gradient checker.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class GraphError(ValueError):
    """Shape or structure problem raised while building or running a graph."""


class NonFiniteError(FloatingPointError):
    """A gradient or intermediate value stopped being finite."""


def _as_value(x) -> np.ndarray:
    a = np.asarray(x, dtype=np.float64)
    if a.ndim > 2:
        raise GraphError(f"only scalars, vectors and matrices are supported, got shape {a.shape}")
    return a


class Node:
    """One tape entry: forward value plus backward links into its parents."""

    __slots__ = ("value", "op", "_links", "grad")

    def __init__(self, value, op="leaf", links=()):
        self.value = _as_value(value)
        self.op = op
        self._links = links  # tuple of (parent Node, vjp: adjoint -> parent adjoint)
        self.grad = None

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Node({self.op}, shape={self.value.shape})"

    # operator sugar; Node op float dispatches to scalar-multiply / shifts
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __neg__(self):
        return smul(-1.0, self)

    def __mul__(self, other):
        if isinstance(other, Node):
            return mul(self, other)
        return smul(float(other), self)

    __rmul__ = __mul__


def leaf(value) -> Node:
    """A differentiable input (parameters)."""
    return Node(value, op="leaf")


def constant(value) -> Node:
    """A non-differentiable input. Participates in forward values only."""
    return Node(value, op="constant")


def _want(node, name) -> Node:
    if not isinstance(node, Node):
        raise GraphError(f"{name} expects Node operands, got {type(node).__name__}")
    return node


def _same_shape(a: Node, b: Node, name: str):
    if a.value.shape != b.value.shape:
        raise GraphError(f"{name}: operand shapes {a.value.shape} and {b.value.shape} differ")


def add(a: Node, b: Node) -> Node:
    _want(a, "add"), _want(b, "add")
    _same_shape(a, b, "add")
    return Node(a.value + b.value, "add", ((a, lambda g: g), (b, lambda g: g)))


def sub(a: Node, b: Node) -> Node:
    _want(a, "sub"), _want(b, "sub")
    _same_shape(a, b, "sub")
    return Node(a.value - b.value, "sub", ((a, lambda g: g), (b, lambda g: -g)))


def smul(c: float, a: Node) -> Node:
    """Scalar-times-array. c is a plain python scalar, not a Node."""
    _want(a, "smul")
    c = float(c)
    return Node(c * a.value, "smul", ((a, lambda g: c * g),))


def mul(a: Node, b: Node) -> Node:
    """Elementwise product of same-shape arrays."""
    _want(a, "mul"), _want(b, "mul")
    _same_shape(a, b, "mul")
    av, bv = a.value, b.value
    return Node(av * bv, "mul", ((a, lambda g: g * bv), (b, lambda g: g * av)))


def matmul(w: Node, x: Node) -> Node:
    """Matrix times vector, or matrix times matrix (columns as a batch)."""
    _want(w, "matmul"), _want(x, "matmul")
    wv, xv = w.value, x.value
    if wv.ndim != 2 or xv.ndim not in (1, 2) or wv.shape[1] != xv.shape[0]:
        raise GraphError(f"matmul: incompatible shapes {wv.shape} @ {xv.shape}")
    if xv.ndim == 1:
        links = ((w, lambda g: np.outer(g, xv)), (x, lambda g: wv.T @ g))
    else:
        links = ((w, lambda g: g @ xv.T), (x, lambda g: wv.T @ g))
    return Node(wv @ xv, "matmul", links)


def dot(a: Node, b: Node) -> Node:
    _want(a, "dot"), _want(b, "dot")
    av, bv = a.value, b.value
    if av.ndim != 1 or bv.ndim != 1 or av.shape != bv.shape:
        raise GraphError(f"dot: expected equal-length vectors, got {av.shape} and {bv.shape}")
    return Node(av @ bv, "dot", ((a, lambda g: g * bv), (b, lambda g: g * av)))


def affine(w: Node, x: Node, b: Node) -> Node:
    """w @ x + b. For matrix x the bias is added to every column."""
    _want(w, "affine"), _want(x, "affine"), _want(b, "affine")
    wv, xv, bv = w.value, x.value, b.value
    if wv.ndim != 2 or bv.ndim != 1 or wv.shape[0] != bv.shape[0]:
        raise GraphError(f"affine: W {wv.shape} and b {bv.shape} disagree")
    if xv.ndim not in (1, 2) or wv.shape[1] != xv.shape[0]:
        raise GraphError(f"affine: W {wv.shape} cannot act on x {xv.shape}")
    if xv.ndim == 1:
        out = wv @ xv + bv
        links = (
            (w, lambda g: np.outer(g, xv)),
            (x, lambda g: wv.T @ g),
            (b, lambda g: g),
        )
    else:
        out = wv @ xv + bv[:, None]
        links = (
            (w, lambda g: g @ xv.T),
            (x, lambda g: wv.T @ g),
            (b, lambda g: g.sum(axis=1)),
        )
    return Node(out, "affine", links)


def tanh(a: Node) -> Node:
    _want(a, "tanh")
    y = np.tanh(a.value)
    return Node(y, "tanh", ((a, lambda g: g * (1.0 - y * y)),))


def square(a: Node) -> Node:
    _want(a, "square")
    av = a.value
    return Node(av * av, "square", ((a, lambda g: g * (2.0 * av)),))


def total(a: Node) -> Node:
    """Sum of all entries, as a scalar node."""
    _want(a, "total")
    shape = a.value.shape
    return Node(a.value.sum(), "total", ((a, lambda g: np.broadcast_to(g, shape)),))


def mean(a: Node) -> Node:
    _want(a, "mean")
    n = a.value.size
    shape = a.value.shape
    return Node(a.value.mean(), "mean", ((a, lambda g: np.broadcast_to(g / n, shape)),))


def colsum(a: Node) -> Node:
    """Column sums of a matrix: (n, B) -> (B,)."""
    _want(a, "colsum")
    av = a.value
    if av.ndim != 2:
        raise GraphError(f"colsum: expected a matrix, got shape {av.shape}")
    return Node(av.sum(axis=0), "colsum", ((a, lambda g: np.broadcast_to(g, av.shape)),))


def colscale(a: Node, s: Node) -> Node:
    """Scale each column of a matrix by the matching entry of a vector."""
    _want(a, "colscale"), _want(s, "colscale")
    av, sv = a.value, s.value
    if av.ndim != 2 or sv.ndim != 1 or av.shape[1] != sv.shape[0]:
        raise GraphError(f"colscale: matrix {av.shape} and scales {sv.shape} disagree")
    return Node(
        av * sv[None, :],
        "colscale",
        ((a, lambda g: g * sv[None, :]), (s, lambda g: (g * av).sum(axis=0))),
    )


def rows(a: Node, r0: int, r1: int) -> Node:
    """Contiguous row block of a matrix."""
    _want(a, "rows")
    av = a.value
    if av.ndim != 2 or not (0 <= r0 < r1 <= av.shape[0]):
        raise GraphError(f"rows: block [{r0}:{r1}] invalid for shape {av.shape}")

    def back(g):
        out = np.zeros_like(av)
        out[r0:r1] = g
        return out

    return Node(av[r0:r1], "rows", ((a, back),))


def row(a: Node, i: int) -> Node:
    """Single row of a matrix, as a vector."""
    _want(a, "row")
    av = a.value
    if av.ndim != 2 or not (0 <= i < av.shape[0]):
        raise GraphError(f"row: index {i} invalid for shape {av.shape}")

    def back(g):
        out = np.zeros_like(av)
        out[i] = g
        return out

    return Node(av[i], "row", ((a, back),))


def stop_gradient(a: Node) -> Node:
    """Pass the value forward, block all adjoints. No parent links are kept."""
    _want(a, "stop_gradient")
    return Node(a.value, "stop_gradient", ())


def _topo_from(loss: Node):
    order, visited, stack = [], set(), [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in visited:
            continue
        visited.add(id(node))
        stack.append((node, True))
        for parent, _ in node._links:
            if id(parent) not in visited:
                stack.append((parent, False))
    return order


def backward(loss: Node) -> None:
    """Populate .grad on every node reachable from the scalar loss."""
    if not isinstance(loss, Node):
        raise GraphError("backward expects a Node")
    if loss.value.shape != ():
        raise GraphError(f"backward: loss must be scalar, got shape {loss.value.shape}")
    order = _topo_from(loss)
    for node in order:
        node.grad = None
    loss.grad = np.asarray(1.0)
    for node in reversed(order):
        if node.grad is None:
            continue
        g = node.grad
        for parent, vjp in node._links:
            contrib = vjp(g)
            parent.grad = contrib if parent.grad is None else parent.grad + contrib


def gradient(node: Node) -> np.ndarray:
    """Adjoint of a node after backward(); zero for nodes the loss never reached."""
    if node.grad is None:
        return np.zeros_like(node.value)
    return np.asarray(node.grad, dtype=np.float64)


# ---------------------------------------------------------------------------
# Adam over named parameter dicts


@dataclass(frozen=True)
class AdamState:
    m: dict
    v: dict
    t: int
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def adam_init(params: dict, lr: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> AdamState:
    zeros = {k: np.zeros_like(v) for k, v in params.items()}
    return AdamState(m=zeros, v={k: z.copy() for k, z in zeros.items()},
                     t=0, lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(params: dict, grads: dict, state: AdamState):
    """One bias-corrected Adam update. Returns (new params, new state)."""
    if set(params) != set(grads):
        raise GraphError(f"adam_step: params {sorted(params)} vs grads {sorted(grads)}")
    for name, g in grads.items():
        if g.shape != params[name].shape:
            raise GraphError(f"adam_step: grad shape {g.shape} does not match '{name}' {params[name].shape}")
        if not np.all(np.isfinite(g)):
            raise NonFiniteError(f"adam_step: non-finite gradient for parameter '{name}'")
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    new_p, new_m, new_v = {}, {}, {}
    with np.errstate(over="ignore"):  # huge-but-finite grads may overflow g*g
        for name, p in params.items():
            g = grads[name]
            m = b1 * state.m[name] + (1.0 - b1) * g
            v = b2 * state.v[name] + (1.0 - b2) * g * g
            m_hat = m / (1.0 - b1 ** t)
            v_hat = v / (1.0 - b2 ** t)
            new_p[name] = p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
            new_m[name], new_v[name] = m, v
    return new_p, AdamState(m=new_m, v=new_v, t=t, lr=state.lr,
                            beta1=state.beta1, beta2=state.beta2, eps=state.eps)


# ---------------------------------------------------------------------------
# Finite-difference verification


def grad_check(loss_fn, params: dict, h: float = 1e-6) -> float:
    """Compare analytic gradients against central finite differences.

    loss_fn(params) must deterministically return (loss_value, grads_dict).
    Each coordinate error is measured relative to the largest gradient
    magnitude anywhere, so flat coordinates do not produce 0/0 blowups.
    Returns the worst relative error.
    """
    if h <= 0:
        raise ValueError("grad_check: h must be positive")
    _, analytic = loss_fn(params)
    scale = max(
        (float(np.max(np.abs(g))) for g in analytic.values() if g.size),
        default=0.0,
    )
    worst = 0.0
    for name, base in params.items():
        base = np.asarray(base, dtype=np.float64)
        flat = base.reshape(-1)
        a_flat = np.asarray(analytic[name], dtype=np.float64).reshape(-1)
        for i in range(flat.size):
            bumped = flat.copy()
            bumped[i] = flat[i] + h
            plus = loss_fn({**params, name: bumped.reshape(base.shape)})[0]
            bumped[i] = flat[i] - h
            minus = loss_fn({**params, name: bumped.reshape(base.shape)})[0]
            numeric = (plus - minus) / (2.0 * h)
            denom = max(scale, abs(numeric), 1e-12)
            err = abs(a_flat[i] - numeric) / denom
            if err > worst:
                worst = err
    return worst


def finite_difference(loss_fn, params: dict, h: float = 1e-6) -> dict:
    """Central-difference gradient of a scalar function of named arrays."""
    out = {}
    for name, base in params.items():
        base = np.asarray(base, dtype=np.float64)
        flat = base.reshape(-1)
        g = np.zeros_like(flat)
        for i in range(flat.size):
            bumped = flat.copy()
            bumped[i] = flat[i] + h
            plus = loss_fn({**params, name: bumped.reshape(base.shape)})
            bumped[i] = flat[i] - h
            minus = loss_fn({**params, name: bumped.reshape(base.shape)})
            g[i] = (plus - minus) / (2.0 * h)
        out[name] = g.reshape(base.shape)
    return out


def _relative_gap(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)), 1e-12)
    return float(np.max(np.abs(a - b), initial=0.0)) / scale


def check_primitives(rng: np.random.Generator, trials: int = 20, h: float = 1e-6) -> float:
    """Finite-difference every primitive at random points in [-2, 2].

    Returns the worst relative error seen across all primitives and trials.
    Used by the CLI gradcheck report and the test suite.
    """
    worst = 0.0

    def fd_vs_analytic(build, x0):
        nonlocal worst
        def with_value(params):
            x = leaf(params["x"])
            loss = build(x)
            backward(loss)
            return float(loss.value), {"x": gradient(x)}
        err = grad_check(with_value, {"x": x0}, h=h)
        worst = max(worst, err)

    for _ in range(trials):
        v = rng.uniform(-2.0, 2.0, size=6)
        w = rng.uniform(-2.0, 2.0, size=6)
        m = rng.uniform(-2.0, 2.0, size=(4, 6))
        mm = rng.uniform(-2.0, 2.0, size=(6, 3))
        b4 = rng.uniform(-2.0, 2.0, size=4)
        s3 = rng.uniform(-2.0, 2.0, size=3)
        c = float(rng.uniform(-2.0, 2.0))

        fd_vs_analytic(lambda x: total(square(add(x, constant(w)))), v)
        fd_vs_analytic(lambda x: total(square(sub(x, constant(w)))), v)
        fd_vs_analytic(lambda x: total(square(smul(c, x))), v)
        fd_vs_analytic(lambda x: total(square(mul(x, constant(w)))), v)
        fd_vs_analytic(lambda x: total(square(matmul(constant(m), x))), v)
        fd_vs_analytic(lambda x: square(dot(x, constant(w))), v)
        fd_vs_analytic(lambda x: total(square(affine(constant(m), x, constant(b4)))), v)
        fd_vs_analytic(lambda x: total(square(tanh(x))), v)
        fd_vs_analytic(lambda x: mean(square(x)), v)
        fd_vs_analytic(lambda x: total(square(colsum(matmul(x, constant(mm))))), m)
        fd_vs_analytic(lambda x: total(square(colscale(matmul(x, constant(mm)), constant(s3)))), m)
        fd_vs_analytic(lambda x: total(square(rows(x, 1, 3))), m)
        fd_vs_analytic(lambda x: total(square(row(x, 2))), m)
        # stop_gradient: value passes, adjoint must not
        xn = leaf(v)
        blocked = total(square(stop_gradient(xn)))
        backward(blocked)
        worst = max(worst, float(np.max(np.abs(gradient(xn)))))
    return worst
