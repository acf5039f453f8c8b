"""Reverse-mode automatic differentiation over numpy float64 arrays.

A :class:`Node` holds a value, a lazily allocated gradient and a closure that
pushes its gradient to its parents.  Every op here is a plain function that
returns a new node; ``loss.backward()`` walks the graph in reverse topological
order.
"""
from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

DTYPE = np.float64


class NonFiniteError(ValueError):
    pass


class Node:
    __slots__ = ("value", "grad", "parents", "_backward", "name")

    def __init__(
        self,
        value,
        parents: Sequence["Node"] = (),
        backward: Optional[Callable[[np.ndarray], None]] = None,
        name: Optional[str] = None,
    ):
        self.value = np.asarray(value, dtype=DTYPE)
        self.grad: Optional[np.ndarray] = None
        self.parents = tuple(parents)
        self._backward = backward
        self.name = name

    @property
    def shape(self) -> tuple:
        return self.value.shape

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Node{label}(shape={self.shape})"

    def accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=DTYPE, copy=True).reshape(self.value.shape)
        else:
            self.grad += g

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        if self.value.size != 1:
            raise ValueError(f"backward() needs a scalar loss, got shape {self.shape}")
        order = _topological_order(self)
        for node in order:
            if node is not self:
                node.grad = None if node._backward is not None else node.grad
        self.accumulate(np.ones_like(self.value))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return getitem(self, index)


class Parameter(Node):
    """A trainable leaf.  Gradients accumulate across backward passes until zeroed."""

    __slots__ = ()

    def __init__(self, value, name: Optional[str] = None):
        super().__init__(np.array(value, dtype=DTYPE, copy=True), name=name)


def constant(value) -> Node:
    return value if isinstance(value, Node) else Node(value)


def _topological_order(root: Node) -> list:
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def _check_finite(*arrays: np.ndarray) -> None:
    for a in arrays:
        if not np.isfinite(a).all():
            raise NonFiniteError("non-finite value entering a differentiable op")


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# elementwise and linear algebra


def add(a, b) -> Node:
    a, b = constant(a), constant(b)
    try:
        value = a.value + b.value
    except ValueError as exc:
        raise ValueError(f"add: shape mismatch {a.shape} vs {b.shape}") from exc

    def backward(g):
        a.accumulate(_unbroadcast(g, a.shape))
        b.accumulate(_unbroadcast(g, b.shape))

    return Node(value, (a, b), backward)


def sub(a, b) -> Node:
    return add(a, mul(constant(b), -1.0))


def mul(a, b) -> Node:
    a, b = constant(a), constant(b)
    try:
        value = a.value * b.value
    except ValueError as exc:
        raise ValueError(f"mul: shape mismatch {a.shape} vs {b.shape}") from exc

    def backward(g):
        a.accumulate(_unbroadcast(g * b.value, a.shape))
        b.accumulate(_unbroadcast(g * a.value, b.shape))

    return Node(value, (a, b), backward)


def matmul(a, b) -> Node:
    """2-d (or 1-d by 2-d) matrix product."""
    a, b = constant(a), constant(b)
    if a.value.ndim not in (1, 2) or b.value.ndim != 2 or a.shape[-1] != b.shape[0]:
        raise ValueError(f"matmul: incompatible shapes {a.shape} @ {b.shape}")
    _check_finite(a.value, b.value)
    value = a.value @ b.value

    def backward(g):
        if a.value.ndim == 1:
            a.accumulate(b.value @ g)
            b.accumulate(np.outer(a.value, g))
        else:
            a.accumulate(g @ b.value.T)
            b.accumulate(a.value.T @ g)

    return Node(value, (a, b), backward)


def tanh(a) -> Node:
    a = constant(a)
    _check_finite(a.value)
    value = np.tanh(a.value)

    def backward(g):
        a.accumulate(g * (1.0 - value * value))

    return Node(value, (a,), backward)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * np.tanh(0.5 * x) + 0.5


def sigmoid(a) -> Node:
    a = constant(a)
    _check_finite(a.value)
    value = _sigmoid(a.value)

    def backward(g):
        a.accumulate(g * value * (1.0 - value))

    return Node(value, (a,), backward)


def relu(a) -> Node:
    a = constant(a)
    _check_finite(a.value)
    value = np.maximum(a.value, 0.0)

    def backward(g):
        a.accumulate(g * (a.value > 0))

    return Node(value, (a,), backward)


def concat(nodes: Sequence, axis: int = -1) -> Node:
    nodes = [constant(n) for n in nodes]
    try:
        value = np.concatenate([n.value for n in nodes], axis=axis)
    except ValueError as exc:
        raise ValueError(f"concat: incompatible shapes {[n.shape for n in nodes]}") from exc
    ax = axis % value.ndim
    bounds = np.cumsum([n.shape[ax] for n in nodes])[:-1]

    def backward(g):
        for n, piece in zip(nodes, np.split(g, bounds, axis=ax)):
            n.accumulate(piece)

    return Node(value, nodes, backward)


def reshape(a, shape) -> Node:
    a = constant(a)
    value = a.value.reshape(shape)

    def backward(g):
        a.accumulate(g.reshape(a.shape))

    return Node(value, (a,), backward)


def getitem(a, index) -> Node:
    """Basic or advanced numpy indexing; repeated indices accumulate."""
    a = constant(a)
    value = a.value[index]

    def backward(g):
        full = np.zeros_like(a.value)
        np.add.at(full, index, g)
        a.accumulate(full)

    return Node(value, (a,), backward)


def lookup(table, index) -> Node:
    """Rows of an embedding table."""
    table = constant(table)
    idx = np.asarray(index, dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise IndexError(f"lookup: index out of range for table of {table.shape[0]} rows")
    return getitem(table, idx)


def sum(a, axis=None) -> Node:  # noqa: A001 - mirrors numpy naming
    a = constant(a)
    value = a.value.sum(axis=axis)

    def backward(g):
        if axis is None:
            a.accumulate(np.broadcast_to(g, a.shape))
        else:
            a.accumulate(np.broadcast_to(np.expand_dims(g, axis), a.shape))

    return Node(value, (a,), backward)


def logsumexp(a, axis=None) -> Node:
    """Overflow-safe log-sum-exp.  ``-inf`` entries are allowed (log-zero)."""
    a = constant(a)
    x = a.value
    m = np.max(x, axis=axis, keepdims=True)
    m_safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        value = np.log(np.sum(np.exp(x - m_safe), axis=axis, keepdims=True)) + m_safe
    out = value if axis is not None else value.reshape(())
    out = np.squeeze(out, axis=axis) if axis is not None else out

    def backward(g):
        ge = np.expand_dims(g, axis) if axis is not None else g
        with np.errstate(invalid="ignore"):
            w = np.exp(x - value)
        w = np.where(np.isfinite(x), w, 0.0)
        a.accumulate(ge * w)

    return Node(out, (a,), backward)


def log_softmax(a, axis: int = -1) -> Node:
    a = constant(a)
    _check_finite(a.value)
    x = a.value
    m = x.max(axis=axis, keepdims=True)
    value = x - (np.log(np.exp(x - m).sum(axis=axis, keepdims=True)) + m)

    def backward(g):
        a.accumulate(g - np.exp(value) * g.sum(axis=axis, keepdims=True))

    return Node(value, (a,), backward)


def dropout(a, rate: float, training: bool, rng: Optional[np.random.Generator]) -> Node:
    """Inverted dropout; the identity when not training."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    a = constant(a)
    if not training or rate == 0.0:
        return a
    keep = (rng.random(a.shape) >= rate) / (1.0 - rate)
    return mul(a, keep)


# ---------------------------------------------------------------------------
# fused recurrent kernel


def lstm_sequence(x, h0, c0, w_in, w_rec, bias) -> Node:
    """Run an LSTM over ``x`` of shape (T, B, D); returns all hidden states (T, B, H).

    Gate layout along the 4H axis is input, forget, candidate, output.  The
    whole recurrence is one graph node with a hand-written backward pass.
    """
    x, h0, c0, w_in, w_rec, bias = (constant(v) for v in (x, h0, c0, w_in, w_rec, bias))
    T, B, D = x.shape
    H = w_rec.shape[0]
    if w_in.shape != (D, 4 * H) or w_rec.shape != (H, 4 * H) or bias.shape != (4 * H,):
        raise ValueError("lstm_sequence: weight shapes do not match input/hidden sizes")
    if h0.shape != (B, H) or c0.shape != (B, H):
        raise ValueError("lstm_sequence: initial state shape mismatch")
    _check_finite(x.value, h0.value, c0.value, w_in.value, w_rec.value)

    xw = (x.value.reshape(T * B, D) @ w_in.value).reshape(T, B, 4 * H) + bias.value
    # sigmoid(z) = (tanh(z / 2) + 1) / 2, so one tanh call covers all four gates
    scale = np.full(4 * H, 0.5)
    scale[2 * H:3 * H] = 1.0
    hs = np.empty((T, B, H))
    cs = np.empty((T, B, H))
    gates = np.empty((T, B, 4 * H))
    h, c = h0.value, c0.value
    for t in range(T):
        a = np.tanh((xw[t] + h @ w_rec.value) * scale)
        a[:, :2 * H] = 0.5 * a[:, :2 * H] + 0.5
        a[:, 3 * H:] = 0.5 * a[:, 3 * H:] + 0.5
        c = a[:, H:2 * H] * c + a[:, :H] * a[:, 2 * H:3 * H]
        h = a[:, 3 * H:] * np.tanh(c)
        gates[t] = a
        hs[t], cs[t] = h, c

    def backward(g):
        i, f = gates[:, :, :H], gates[:, :, H:2 * H]
        cand, o = gates[:, :, 2 * H:3 * H], gates[:, :, 3 * H:]
        c_prev = np.concatenate([c0.value[None], cs[:-1]], axis=0)
        h_prev = np.concatenate([h0.value[None], hs[:-1]], axis=0)
        tc = np.tanh(cs)
        dc_from_h = o * (1.0 - tc * tc)
        # d z / d c for the input, forget and candidate gates, stacked (T, B, 3, H)
        dz_dc = np.stack([cand * i * (1.0 - i), c_prev * f * (1.0 - f), i * (1.0 - cand * cand)], axis=2)
        dz_dh = tc * o * (1.0 - o)
        dxw = np.empty_like(gates)
        w_rec_t = w_rec.value.T
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        for t in range(T - 1, -1, -1):
            dh = g[t] + dh_next
            dc = dh * dc_from_h[t] + dc_next
            dz = dxw[t]
            dz[:, :3 * H] = (dz_dc[t] * dc[:, None, :]).reshape(B, 3 * H)
            dz[:, 3 * H:] = dh * dz_dh[t]
            dh_next = dz @ w_rec_t
            dc_next = dc * f[t]
        flat = dxw.reshape(T * B, 4 * H)
        w_in.accumulate(x.value.reshape(T * B, D).T @ flat)
        bias.accumulate(flat.sum(axis=0))
        x.accumulate((flat @ w_in.value.T).reshape(T, B, D))
        w_rec.accumulate(h_prev.reshape(T * B, H).T @ flat)
        h0.accumulate(dh_next)
        c0.accumulate(dc_next)

    return Node(hs, (x, h0, c0, w_in, w_rec, bias), backward)
