"""Adam and plain SGD over lists of :class:`Parameter`."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .autograd import Parameter


@dataclass
class AdamConfig:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class SGDConfig:
    lr: float = 0.1
    clip_norm: Optional[float] = 5.0


@dataclass
class OptimizerState:
    kind: str
    config: object
    timestep: int = 0
    # adam keeps both moments as single flat vectors over the concatenated parameters
    first_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: Dict[str, np.ndarray] = field(default_factory=dict)
    shapes: List[tuple] = field(default_factory=list)


def make_optimizer(kind: str, params: Sequence[Parameter], config=None) -> OptimizerState:
    if kind == "adam":
        state = OptimizerState("adam", config or AdamConfig())
        size = int(sum(p.value.size for p in params))
        state.first_moment["*"] = np.zeros(size)
        state.second_moment["*"] = np.zeros(size)
        state.shapes = [p.value.shape for p in params]
        return state
    if kind == "sgd":
        return OptimizerState("sgd", config or SGDConfig())
    raise ValueError(f"unknown optimizer kind {kind!r}")


def global_norm(grads: Sequence[np.ndarray]) -> float:
    return float(np.sqrt(sum(float(np.vdot(g, g)) for g in grads)))


def step(state: OptimizerState, params: Sequence[Parameter], grads: Optional[List[np.ndarray]] = None) -> None:
    """Update ``params`` in place.  ``grads`` defaults to each parameter's ``.grad``
    (``None`` meaning zero)."""
    if grads is None:
        grads = [p.grad if p.grad is not None else np.zeros_like(p.value) for p in params]
    for p, g in zip(params, grads):
        if g.shape != p.value.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter {p.name} shape {p.value.shape}")

    if state.kind == "sgd":
        cfg: SGDConfig = state.config
        scale = 1.0
        if cfg.clip_norm is not None:
            norm = global_norm(grads)
            if norm > cfg.clip_norm:
                scale = cfg.clip_norm / norm
        for p, g in zip(params, grads):
            p.value -= cfg.lr * scale * g
        state.timestep += 1
        return

    cfg: AdamConfig = state.config
    state.timestep += 1
    t = state.timestep
    correction1 = 1.0 - cfg.beta1 ** t
    correction2 = 1.0 - cfg.beta2 ** t
    if [p.value.shape for p in params] != state.shapes:
        raise ValueError("parameters do not match the optimizer's accumulators")
    g = np.concatenate([x.ravel() for x in grads])
    m, v = state.first_moment["*"], state.second_moment["*"]
    m *= cfg.beta1
    m += (1.0 - cfg.beta1) * g
    v *= cfg.beta2
    g *= g
    v += (1.0 - cfg.beta2) * g
    if t % 64 == 0:
        # moments of long-idle coordinates decay into subnormals, which are very slow
        m[np.abs(m) < 1e-150] = 0.0
        v[v < 1e-150] = 0.0
    update = np.sqrt(v / correction2)
    update += cfg.eps
    np.divide(m, update, out=update)
    update *= cfg.lr / correction1
    offset = 0
    for p in params:
        size = p.value.size
        p.value -= update[offset:offset + size].reshape(p.value.shape)
        offset += size


def zero_grad(params: Sequence[Parameter]) -> None:
    for p in params:
        p.grad = None
