"""Brute-force reference computations, written independently of the library's
dynamic programs, plus random-instance builders shared by the unit and
acceptance tests."""
import itertools
import math

import numpy as np

from subword_lid import segrnn
from subword_lid.corpus import TagSet
from subword_lid.semimarkov import viterbi


def parses(n, n_tags, max_len, phi):
    """Every (spans, tags, score) with a finite score.  Segmentations come from
    boundary bitmasks; ``phi(i, j, y)`` gives one entry."""
    out = []
    for mask in range(2 ** (n - 1)):
        cuts = [k for k in range(1, n) if mask >> (k - 1) & 1]
        spans = tuple(zip([0] + cuts, cuts + [n]))
        if any(j - i > max_len for i, j in spans):
            continue
        for tags in itertools.product(range(n_tags), repeat=len(spans)):
            score = 0.0
            for (i, j), y in zip(spans, tags):
                score += phi(i, j, y)
            if math.isfinite(score):
                out.append((spans, tags, score))
    return out


def log_sum(scores):
    m = max(scores)
    return m + math.log(math.fsum(math.exp(s - m) for s in scores))


def best(entries):
    """Highest score; ties: fewer segments, earlier tags, earlier boundaries."""
    spans, tags, _ = min(entries, key=lambda e: (-e[2], len(e[1]), e[1], tuple(j for _, j in e[0])))
    return spans, tags


def relative_gap(a, b):
    return abs(a - b) / max(1.0, abs(b))


def random_segrnn_case(seed):
    """A random model, word (possibly with an unseen character) and bound L."""
    rng = np.random.default_rng(seed)
    n_tags = int(rng.integers(1, 4))
    n_special = int(rng.integers(0, n_tags))
    tags = [f"T{k}" for k in range(n_tags)]
    tagset = TagSet(tuple(tags[:n_tags - n_special]), tuple(f"S.{t}" for t in tags[n_tags - n_special:]))
    alphabet = "abcdefgh"
    model = segrnn.SegRNNModel(list(alphabet), tagset, segrnn.SegRNNConfig(seed=int(rng.integers(2**31))))
    # spread the scores so that near-ties are rare but not absent
    model.score_out.value *= rng.uniform(1, 20)
    n = int(rng.integers(1, 7))
    word = "".join(rng.choice(list(alphabet + "z"), size=n))
    L = [1, 2, n][int(rng.integers(3))]
    return model, word, L


def segrnn_oracle_gaps(seed):
    """(relative log Z gap, viterbi parse == brute-force argmax) for one random case."""
    model, word, L = random_segrnn_case(seed)
    lattice = segrnn.score_lattice(model, segrnn.encode_word(model, word), max_len=L)
    entries = parses(len(word), len(model.tags), L, lattice.phi)
    gap = relative_gap(segrnn.log_partition(lattice), log_sum([s for _, _, s in entries]))
    parse, _ = viterbi(lattice)
    return gap, parse == best(entries)


def chain_paths(emit, trans, start=None):
    N, K = emit.shape
    start = np.zeros(K) if start is None else start
    out = []
    for labels in itertools.product(range(K), repeat=N):
        score = start[labels[0]] + emit[0, labels[0]]
        for t in range(1, N):
            score = score + trans[labels[t - 1], labels[t]]
            score = score + emit[t, labels[t]]
        if math.isfinite(score):
            out.append((labels, float(score)))
    return out


def random_chain(seed):
    rng = np.random.default_rng(seed)
    N, K = int(rng.integers(1, 5)), int(rng.integers(1, 4))
    return rng.normal(scale=2, size=(N, K)), rng.normal(scale=2, size=(K, K))
