from __future__ import annotations

from typing import Dict, List, Optional, Sequence

import numpy as np

from . import autograd as ag
from .autograd import Node, Parameter
from .init import glorot, zeros


class Module:
    """Parameter container; parameters and submodules are discovered in attribute order."""

    def parameters(self) -> List[Parameter]:
        out: List[Parameter] = []
        for value in vars(self).values():
            if isinstance(value, Parameter):
                out.append(value)
            elif isinstance(value, Module):
                out.extend(value.parameters())
        return out

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {p.name: p.value.copy() for p in self.parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray]) -> None:
        for p in self.parameters():
            if p.name not in state:
                raise KeyError(f"checkpoint lacks parameter {p.name!r}")
            if state[p.name].shape != p.value.shape:
                raise ValueError(f"parameter {p.name!r}: shape {state[p.name].shape} != {p.value.shape}")
            p.value = np.array(state[p.name], dtype=np.float64, copy=True)


class LSTM(Module):
    def __init__(self, rng: np.random.Generator, input_dim: int, hidden_dim: int, name: str):
        self.hidden_dim = hidden_dim
        self.w_in = glorot(rng, (input_dim, 4 * hidden_dim), f"{name}.w_in")
        self.w_rec = glorot(rng, (hidden_dim, 4 * hidden_dim), f"{name}.w_rec")
        self.bias = zeros((4 * hidden_dim,), f"{name}.bias")

    def __call__(self, x: Node, h0: Optional[Node] = None) -> Node:
        T, B, _ = x.shape
        zero = np.zeros((B, self.hidden_dim))
        return ag.lstm_sequence(x, zero if h0 is None else h0, zero, self.w_in, self.w_rec, self.bias)


def reversal_index(lengths: Sequence[int], T: int) -> np.ndarray:
    """(T, B) time index that reverses each sequence within its own length.

    Padding positions map to themselves, so the index is an involution.
    """
    idx = np.tile(np.arange(T)[:, None], (1, len(lengths)))
    for b, n in enumerate(lengths):
        idx[:n, b] = np.arange(n - 1, -1, -1)
    return idx


class BiLSTM(Module):
    def __init__(self, rng: np.random.Generator, input_dim: int, hidden_dim: int, name: str):
        self.fwd = LSTM(rng, input_dim, hidden_dim, f"{name}.fwd")
        self.bwd = LSTM(rng, input_dim, hidden_dim, f"{name}.bwd")

    def __call__(self, x: Node, lengths: Optional[Sequence[int]] = None):
        """Returns (forward states, backward states), both (T, B, H) and aligned
        to input positions; backward states at t summarise positions t..len-1."""
        T, B, _ = x.shape
        lengths = [T] * B if lengths is None else list(lengths)
        rev = reversal_index(lengths, T)
        cols = np.arange(B)[None, :]
        hf = self.fwd(x)
        hb = ag.getitem(self.bwd(ag.getitem(x, (rev, cols))), (rev, cols))
        return hf, hb


class Linear(Module):
    def __init__(self, rng: np.random.Generator, input_dim: int, output_dim: int, name: str):
        self.weight = glorot(rng, (input_dim, output_dim), f"{name}.weight")
        self.bias = zeros((output_dim,), f"{name}.bias")

    def __call__(self, x: Node) -> Node:
        return ag.add(ag.matmul(x, self.weight), self.bias)
