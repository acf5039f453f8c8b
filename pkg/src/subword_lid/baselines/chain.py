"""Linear-chain CRF inference in numpy: forward-backward, Viterbi, brute force."""
from __future__ import annotations

import itertools
from typing import List, Optional, Tuple

import numpy as np
from scipy.special import logsumexp


def _start(K: int, start: Optional[np.ndarray]) -> np.ndarray:
    return np.zeros(K) if start is None else start


def forward(emit: np.ndarray, trans: np.ndarray, start: Optional[np.ndarray] = None) -> np.ndarray:
    """alpha[t, k]: log-sum over label prefixes ending in k at position t."""
    N, K = emit.shape
    alpha = np.empty((N, K))
    alpha[0] = _start(K, start) + emit[0]
    for t in range(1, N):
        alpha[t] = logsumexp(alpha[t - 1][:, None] + trans, axis=0) + emit[t]
    return alpha


def backward(emit: np.ndarray, trans: np.ndarray) -> np.ndarray:
    N, K = emit.shape
    beta = np.zeros((N, K))
    for t in range(N - 2, -1, -1):
        beta[t] = logsumexp(trans + (emit[t + 1] + beta[t + 1])[None, :], axis=1)
    return beta


def log_partition(emit, trans, start=None) -> float:
    return float(logsumexp(forward(emit, trans, start)[-1]))


def marginals(emit, trans, start=None):
    """(log Z, unary marginals (N, K), expected transition counts (K, K))."""
    alpha = forward(emit, trans, start)
    beta = backward(emit, trans)
    logz = float(logsumexp(alpha[-1]))
    with np.errstate(invalid="ignore"):
        unary = np.exp(alpha + beta - logz)
    unary = np.nan_to_num(unary)
    pair = np.zeros_like(trans)
    for t in range(1, emit.shape[0]):
        with np.errstate(invalid="ignore"):
            p = np.exp(alpha[t - 1][:, None] + trans + (emit[t] + beta[t])[None, :] - logz)
        pair += np.nan_to_num(p)
    return logz, unary, pair


def sequence_score(emit, trans, labels, start=None) -> float:
    total = _start(emit.shape[1], start)[labels[0]] + emit[0, labels[0]]
    for t in range(1, len(labels)):
        total = total + trans[labels[t - 1], labels[t]]
        total = total + emit[t, labels[t]]
    return float(total)


def viterbi(emit, trans, start=None) -> Tuple[List[int], float]:
    """Best label sequence; ties go to the lexicographically smallest sequence."""
    N, K = emit.shape
    score = _start(K, start) + emit[0]
    paths = [(k,) for k in range(K)]
    for t in range(1, N):
        new_score = np.empty(K)
        new_paths = []
        for k in range(K):
            best, best_path = -np.inf, None
            for j in range(K):
                s = score[j] + trans[j, k]
                if best_path is None or s > best or (s == best and paths[j] < best_path):
                    best, best_path = s, paths[j]
            new_score[k] = best + emit[t, k]
            new_paths.append(best_path + (k,))
        score, paths = new_score, new_paths
    k_best = None
    for k in range(K):
        if k_best is None or score[k] > score[k_best] or (score[k] == score[k_best] and paths[k] < paths[k_best]):
            k_best = k
    return list(paths[k_best]), float(score[k_best])


def enumerate_all(emit, trans, start=None, limit: int = 100_000):
    N, K = emit.shape
    if K ** N > limit:
        raise ValueError("chain too large to enumerate")
    return [(labels, sequence_score(emit, trans, labels, start))
            for labels in itertools.product(range(K), repeat=N)]


def batch_marginals(emit: np.ndarray, trans: np.ndarray, start: Optional[np.ndarray] = None):
    """:func:`marginals` over a batch of equal-length chains, ``emit`` shaped (B, N, K).
    Returns (log Z (B,), unary (B, N, K), summed expected transition counts (K, K))."""
    B, N, K = emit.shape
    alpha = np.empty((B, N, K))
    beta = np.zeros((B, N, K))
    alpha[:, 0] = _start(K, start)[None, :] + emit[:, 0]
    for t in range(1, N):
        alpha[:, t] = logsumexp(alpha[:, t - 1, :, None] + trans[None], axis=1) + emit[:, t]
    for t in range(N - 2, -1, -1):
        beta[:, t] = logsumexp(trans[None] + (emit[:, t + 1] + beta[:, t + 1])[:, None, :], axis=2)
    logz = logsumexp(alpha[:, -1], axis=1)
    with np.errstate(invalid="ignore"):
        unary = np.nan_to_num(np.exp(alpha + beta - logz[:, None, None]))
        pair = np.zeros_like(trans)
        for t in range(1, N):
            p = np.exp(alpha[:, t - 1, :, None] + trans[None] + (emit[:, t] + beta[:, t])[:, None, :]
                       - logz[:, None, None])
            pair += np.nan_to_num(p).sum(axis=0)
    return logz, unary, pair
