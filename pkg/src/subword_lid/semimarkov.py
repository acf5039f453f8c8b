"""Exact inference over segmentations of one word.

A lattice scores every admissible span ``(i, j)`` (``0 <= i < j <= n``,
``j - i <= L``) under every tag.  Masked entries hold ``-inf``.  A parse is a
tiling of ``[0, n)`` into spans plus one tag per span; its score is the sum
of its entries.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .numerics.autograd import Node, constant

Parse = Tuple[Tuple[Tuple[int, int], ...], Tuple[int, ...]]


def admissible_spans(n: int, max_len: Optional[int] = None) -> List[Tuple[int, int]]:
    """Spans ordered by end then start."""
    L = n if max_len is None else max_len
    if n < 1 or L < 1:
        raise ValueError("need n >= 1 and L >= 1")
    return [(i, j) for j in range(1, n + 1) for i in range(max(0, j - L), j)]


@dataclass
class SegLattice:
    n: int
    max_len: int
    tags: Tuple[str, ...]
    spans: List[Tuple[int, int]]
    scores: np.ndarray  # (len(spans), len(tags)); -inf marks a forbidden entry

    def __post_init__(self):
        self.index = {span: s for s, span in enumerate(self.spans)}
        self._ending = [[] for _ in range(self.n + 1)]
        self._starting = [[] for _ in range(self.n + 1)]
        for s, (i, j) in enumerate(self.spans):
            self._ending[j].append((s, i))
            self._starting[i].append((s, j))
        if self.scores.shape != (len(self.spans), len(self.tags)):
            raise ValueError("score table does not match spans x tags")
        if np.isnan(self.scores).any() or np.isposinf(self.scores).any():
            raise ValueError("lattice scores must be finite or -inf")

    @property
    def n_entries(self) -> int:
        return self.scores.size

    def phi(self, i: int, j: int, tag: int) -> float:
        return float(self.scores[self.index[(i, j)], tag])

    @classmethod
    def from_function(cls, n, tags, fn, max_len=None) -> "SegLattice":
        spans = admissible_spans(n, max_len)
        table = np.array([[fn(i, j, y) for y in range(len(tags))] for i, j in spans], dtype=float)
        return cls(n, n if max_len is None else max_len, tuple(tags), spans, table)


def _lse(x: np.ndarray) -> float:
    m = np.max(x)
    if not np.isfinite(m):
        return float(m)
    return float(m + np.log(np.sum(np.exp(x - m))))


def forward(lattice: SegLattice, scores: Optional[np.ndarray] = None) -> np.ndarray:
    """alpha[j] = log-sum of scores of all parses of the prefix [0, j)."""
    scores = lattice.scores if scores is None else scores
    alpha = np.full(lattice.n + 1, -np.inf)
    alpha[0] = 0.0
    for j in range(1, lattice.n + 1):
        cand = [alpha[i] + scores[s] for s, i in lattice._ending[j]]
        alpha[j] = _lse(np.concatenate(cand))
    return alpha


def backward(lattice: SegLattice, scores: Optional[np.ndarray] = None) -> np.ndarray:
    scores = lattice.scores if scores is None else scores
    beta = np.full(lattice.n + 1, -np.inf)
    beta[lattice.n] = 0.0
    for i in range(lattice.n - 1, -1, -1):
        cand = [beta[j] + scores[s] for s, j in lattice._starting[i]]
        beta[i] = _lse(np.concatenate(cand))
    return beta


def log_partition(lattice: SegLattice) -> float:
    if lattice.n_entries == 0:
        raise ValueError("empty lattice")
    return float(forward(lattice)[lattice.n])


def marginals(lattice: SegLattice, scores: Optional[np.ndarray] = None) -> np.ndarray:
    """Posterior probability of each (span, tag) entry."""
    scores = lattice.scores if scores is None else scores
    alpha, beta = forward(lattice, scores), backward(lattice, scores)
    logz = alpha[lattice.n]
    starts = np.array([i for i, _ in lattice.spans])
    ends = np.array([j for _, j in lattice.spans])
    with np.errstate(invalid="ignore"):
        out = np.exp(alpha[starts][:, None] + scores + beta[ends][:, None] - logz)
    return np.where(np.isfinite(scores), out, 0.0)


def log_partition_node(phi: Node, lattice: SegLattice) -> Node:
    """Differentiable log Z; the gradient with respect to each entry is its marginal."""
    phi = constant(phi)
    alpha = forward(lattice, phi.value)
    value = alpha[lattice.n]

    def back(g):
        phi.accumulate(g * marginals(lattice, phi.value))

    return Node(value, (phi,), back)


def parse_score(lattice: SegLattice, spans: Sequence[Tuple[int, int]], tags: Sequence[int]) -> float:
    total = 0.0
    for (i, j), y in zip(spans, tags):
        if (i, j) not in lattice.index:
            raise ValueError(f"span ({i}, {j}) is longer than the segment-length bound {lattice.max_len}")
        total += lattice.scores[lattice.index[(i, j)], y]
    return float(total)


def _better(a: tuple, b: Optional[tuple]) -> bool:
    """Ranking of (score, n_segments, tags, ends): higher score, then fewer
    segments, then earlier tags, then earlier boundaries."""
    if b is None:
        return True
    if a[0] != b[0]:
        return a[0] > b[0]
    if len(a[2]) != len(b[2]):
        return len(a[2]) < len(b[2])
    return (a[2], a[3]) < (b[2], b[3])


def viterbi(lattice: SegLattice) -> Tuple[Parse, float]:
    """Highest-scoring parse under the deterministic tie-break of :func:`_better`."""
    best: List[Optional[tuple]] = [None] * (lattice.n + 1)
    best[0] = (0.0, 0, (), ())
    for j in range(1, lattice.n + 1):
        for s, i in lattice._ending[j]:
            prev = best[i]
            if prev is None or not np.isfinite(prev[0]):
                continue
            for y in range(len(lattice.tags)):
                phi = lattice.scores[s, y]
                if not np.isfinite(phi):
                    continue
                cand = (prev[0] + phi, prev[1] + 1, prev[2] + (y,), prev[3] + (j,))
                if _better(cand, best[j]):
                    best[j] = cand
    final = best[lattice.n]
    if final is None:
        raise ValueError("lattice admits no parse")
    starts = (0,) + final[3][:-1]
    return (tuple(zip(starts, final[3])), final[2]), float(final[0])


def _compositions(n: int, max_len: int):
    if n == 0:
        yield ()
        return
    for first in range(1, min(n, max_len) + 1):
        for rest in _compositions(n - first, max_len):
            yield (first,) + rest


def count_parses(n: int, n_tags: int, max_len: int) -> int:
    ways = [1] + [0] * n
    for j in range(1, n + 1):
        ways[j] = sum(ways[j - k] * n_tags for k in range(1, min(j, max_len) + 1))
    return ways[n]


def enumerate_all(lattice: SegLattice, limit: int = 200_000) -> List[Tuple[Tuple[Tuple[int, int], ...], Tuple[int, ...], float]]:
    """Every parse with a finite score, as (spans, tag indices, score)."""
    if lattice.n > 12 or count_parses(lattice.n, len(lattice.tags), lattice.max_len) > limit:
        raise ValueError("lattice too large to enumerate")
    out = []
    for comp in _compositions(lattice.n, lattice.max_len):
        ends = tuple(itertools.accumulate(comp))
        spans = tuple(zip((0,) + ends[:-1], ends))
        for tags in itertools.product(range(len(lattice.tags)), repeat=len(comp)):
            score = parse_score(lattice, spans, tags)
            if np.isfinite(score):
                out.append((spans, tags, score))
    return out


def best_of(entries) -> Parse:
    """Argmax of :func:`enumerate_all` output under the Viterbi tie-break."""
    best = None
    for spans, tags, score in entries:
        key = (score, len(tags), tags, tuple(j for _, j in spans))
        if _better(key, best):
            best = key
    starts = (0,) + best[3][:-1]
    return tuple(zip(starts, best[3])), best[2]
