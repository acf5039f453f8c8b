"""Central finite-difference checks for analytic gradients."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .autograd import Node, Parameter


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    analytic = np.asarray(analytic, dtype=float).ravel()
    numeric = np.asarray(numeric, dtype=float).ravel()
    if analytic.size == 0:
        return 0.0
    denom = np.maximum(1e-8, np.abs(analytic) + np.abs(numeric))
    return float(np.max(np.abs(analytic - numeric) / denom))


def numeric_gradient(fn: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Central differences of a scalar function of a flat vector ``x`` (restored afterwards)."""
    grad = np.zeros_like(x)
    for k in range(x.size):
        orig = x[k]
        x[k] = orig + h
        up = fn(x)
        x[k] = orig - h
        down = fn(x)
        x[k] = orig
        if not (np.isfinite(up) and np.isfinite(down)):
            raise ValueError("objective is non-finite near the check point")
        grad[k] = (up - down) / (2.0 * h)
    return grad


def grad_check(f: Callable[[], Node], params: Sequence[Parameter], h: float = 1e-4) -> float:
    """Max relative error between backprop and central differences over every coordinate.

    ``f`` rebuilds the graph from the current parameter values and returns a
    scalar node.
    """
    if h <= 0:
        raise ValueError("step h must be positive")
    for p in params:
        p.grad = None
    loss = f()
    if not np.isfinite(loss.value).all():
        raise ValueError("objective is non-finite at the check point")
    loss.backward()
    analytic = [p.grad.copy() if p.grad is not None else np.zeros_like(p.value) for p in params]

    worst = 0.0
    for p, a in zip(params, analytic):
        flat = p.value.reshape(-1)

        def at(_x, p=p):
            return float(f().value)

        numeric = numeric_gradient(at, flat, h).reshape(p.shape)
        worst = max(worst, relative_error(a, numeric))
    return worst
