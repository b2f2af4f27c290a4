"""Dense-matrix reverse-mode automatic differentiation.

Every value in the graph is a 2-D float64 numpy array wrapped in a
:class:`Node`. Graphs are define-by-run: each training step builds a fresh
acyclic graph, calls :func:`backward` on a scalar loss node, and reads the
accumulated ``grad`` arrays off the parameter leaves. Broadcasting is
restricted to a row vector (1 x n), column vector (m x 1), or scalar (1 x 1)
combined with a full m x n matrix; anything else raises :class:`ShapeError`
instead of silently following numpy's general rules.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, ShapeError

__all__ = [
    "Node", "param", "const", "matmul", "transpose", "add", "sub",
    "hadamard", "scale", "leaky_relu", "exp", "softplus", "square", "max0",
    "sqrt", "sum_all", "mean_all", "frob_sq", "row_sum", "backward",
    "zero_grads", "AdamState", "adam_step",
]

LEAKY_RELU_ALPHA = 0.2


class Node:
    """One vertex of the computation graph: a matrix value plus its gradient."""

    __slots__ = ("value", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, value, parents=(), backward=None, requires_grad=False):
        self.value = value
        self.requires_grad = requires_grad
        self.grad = np.zeros_like(value) if requires_grad else None
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Node(shape={self.value.shape}, requires_grad={self.requires_grad})"

    # Small conveniences; the named module functions are the primary API.
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        if isinstance(other, Node):
            return hadamard(self, other)
        return scale(self, float(other))

    __rmul__ = __mul__

    def __matmul__(self, other):
        return matmul(self, other)

    @property
    def T(self):
        return transpose(self)


def _as_value(x):
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"expected a 2-D matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ContractError("matrix entries must be finite")
    return a


def param(value):
    """Leaf node whose gradient is tracked (a learnable parameter)."""
    return Node(_as_value(value), requires_grad=True)


def const(value):
    """Leaf node treated as a constant: no gradient is stored for it."""
    return Node(_as_value(value))


def _unary(parent, value, grad_fn):
    if not parent.requires_grad:
        return Node(value)

    out = Node(value, (parent,), requires_grad=True)

    def _bw():
        parent.grad += grad_fn(out.grad)

    out._backward = _bw
    return out


def _broadcast_shape(sa, sb):
    if sa == sb:
        return sa
    for big, small in ((sa, sb), (sb, sa)):
        if small[0] in (1, big[0]) and small[1] in (1, big[1]):
            return big
    raise ShapeError(f"shapes {sa} and {sb} are not broadcast-compatible")


def _reduce_to(g, shape):
    # Undo row/column broadcasting by summing over the expanded axes.
    if g.shape == shape:
        return g
    if shape[0] == 1 and g.shape[0] != 1:
        g = g.sum(axis=0, keepdims=True)
    if shape[1] == 1 and g.shape[1] != 1:
        g = g.sum(axis=1, keepdims=True)
    return g


def _binary(a, b, value, grad_a, grad_b):
    need_a = a.requires_grad
    need_b = b.requires_grad
    if not (need_a or need_b):
        return Node(value)

    out = Node(value, (a, b), requires_grad=True)

    def _bw():
        g = out.grad
        if need_a:
            a.grad += _reduce_to(grad_a(g), a.value.shape)
        if need_b:
            b.grad += _reduce_to(grad_b(g), b.value.shape)

    out._backward = _bw
    return out


def matmul(a: Node, b: Node) -> Node:
    """Matrix product; backward is g @ b.T into a and a.T @ g into b."""
    av, bv = a.value, b.value
    if av.shape[1] != bv.shape[0]:
        raise ShapeError(f"matmul inner dimensions differ: {av.shape} @ {bv.shape}")
    return _binary(a, b, av @ bv,
                   lambda g: g @ bv.T,
                   lambda g: av.T @ g)


def transpose(a: Node) -> Node:
    return _unary(a, a.value.T.copy(), lambda g: g.T)


def add(a: Node, b: Node) -> Node:
    _broadcast_shape(a.value.shape, b.value.shape)
    return _binary(a, b, a.value + b.value, lambda g: g, lambda g: g)


def sub(a: Node, b: Node) -> Node:
    _broadcast_shape(a.value.shape, b.value.shape)
    return _binary(a, b, a.value - b.value, lambda g: g, lambda g: -g)


def hadamard(a: Node, b: Node) -> Node:
    _broadcast_shape(a.value.shape, b.value.shape)
    av, bv = a.value, b.value
    return _binary(a, b, av * bv, lambda g: g * bv, lambda g: g * av)


def scale(a: Node, c: float) -> Node:
    c = float(c)
    return _unary(a, a.value * c, lambda g: g * c)


def leaky_relu(a: Node, alpha: float = LEAKY_RELU_ALPHA) -> Node:
    slope = np.where(a.value >= 0.0, 1.0, alpha)
    return _unary(a, a.value * slope, lambda g: g * slope)


def exp(a: Node) -> Node:
    v = np.exp(a.value)
    return _unary(a, v, lambda g: g * v)


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def softplus(a: Node) -> Node:
    v = np.logaddexp(0.0, a.value)
    sig = _sigmoid(a.value)
    return _unary(a, v, lambda g: g * sig)


def square(a: Node) -> Node:
    av = a.value
    return _unary(a, av * av, lambda g: g * (2.0 * av))


def max0(a: Node) -> Node:
    mask = a.value > 0.0
    return _unary(a, a.value * mask, lambda g: g * mask)


def sqrt(a: Node) -> Node:
    if np.any(a.value <= 0.0):
        raise ContractError("sqrt requires strictly positive entries")
    v = np.sqrt(a.value)
    inv = 0.5 / v
    return _unary(a, v, lambda g: g * inv)


def sum_all(a: Node) -> Node:
    v = np.array([[a.value.sum()]])
    return _unary(a, v, lambda g: np.full(a.value.shape, g[0, 0]))


def mean_all(a: Node) -> Node:
    n = a.value.size
    v = np.array([[a.value.sum() / n]])
    return _unary(a, v, lambda g: np.full(a.value.shape, g[0, 0] / n))


def frob_sq(a: Node) -> Node:
    """Sum of squared entries (squared Frobenius norm), as a 1 x 1 node."""
    av = a.value
    v = np.array([[float(np.dot(av.ravel(), av.ravel()))]])
    return _unary(a, v, lambda g: (2.0 * g[0, 0]) * av)


def row_sum(a: Node) -> Node:
    v = a.value.sum(axis=1, keepdims=True)
    return _unary(a, v, lambda g: np.broadcast_to(g, a.value.shape))


def _toposort(root):
    order = []
    seen = {id(root)}
    stack = [(root, iter(root._parents))]
    while stack:
        node, parents = stack[-1]
        advanced = False
        for p in parents:
            if id(p) not in seen:
                seen.add(id(p))
                stack.append((p, iter(p._parents)))
                advanced = True
                break
        if not advanced:
            order.append(node)
            stack.pop()
    return order


def backward(loss: Node):
    """Accumulate d(loss)/d(node) into every tracked node reachable from loss.

    The root must be a 1 x 1 node. Gradients add onto whatever is already in
    ``grad``, so leaves start from zero on a freshly built graph.
    """
    if loss.value.shape != (1, 1):
        raise ContractError(f"backward root must be 1x1, got {loss.value.shape}")
    if not loss.requires_grad:
        return
    order = _toposort(loss)
    loss.grad += 1.0
    for node in reversed(order):
        if node._backward is not None:
            node._backward()


def zero_grads(root: Node):
    """Reset gradients of every tracked node reachable from root."""
    for node in _toposort(root):
        if node.requires_grad:
            node.grad[...] = 0.0


@dataclass
class AdamState:
    """Per-parameter Adam moments and hyperparameters.

    Defaults follow common GAN practice: lr 2e-4, betas (0.5, 0.999).
    """

    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_param(cls, p, lr=2e-4, beta1=0.5, beta2=0.999, eps=1e-8):
        return cls(m=np.zeros_like(p), v=np.zeros_like(p),
                   lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(p: np.ndarray, grad: np.ndarray, state: AdamState) -> np.ndarray:
    """Bias-corrected Adam update, applied to ``p`` in place."""
    if p.shape != grad.shape:
        raise ShapeError(f"param {p.shape} vs grad {grad.shape}")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    state.m *= b1
    state.m += (1.0 - b1) * grad
    state.v *= b2
    state.v += (1.0 - b2) * (grad * grad)
    m_hat = state.m / (1.0 - b1 ** state.step)
    v_hat = state.v / (1.0 - b2 ** state.step)
    p -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return p
