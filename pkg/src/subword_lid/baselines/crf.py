"""Feature-based linear-chain CRFs: a word-level tagger over composed language
tags and a character-level segmenter that labels each character as the
beginning (B) or inside (I) of a segment of some language."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.optimize
import scipy.sparse as sp

from ..corpus import Corpus, Segment, SegmentedToken, TagSet
from ..numerics import checkpoint as ckpt_io
from . import chain

log = logging.getLogger(__name__)


@dataclass
class CRFConfig:
    l2: float = 0.1
    epochs: int = 50
    optimizer: str = "lbfgs"  # or "ascent": full-batch gradient ascent with step halving
    initial_step: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)


class FeatureCRF:
    """Sparse emission features times a (features x labels) weight matrix, plus a
    label transition matrix.  ``trans_mask``/``start_mask`` hold 0 or -inf."""

    def __init__(self, labels: Sequence[str], features: Sequence[str],
                 trans_mask: Optional[np.ndarray] = None, start_mask: Optional[np.ndarray] = None):
        self.labels = list(labels)
        self.label_index = {l: k for k, l in enumerate(self.labels)}
        self.features = list(features)
        self.feature_index = {f: k for k, f in enumerate(self.features)}
        K = len(self.labels)
        self.weights = np.zeros((len(self.features), K))
        self.trans = np.zeros((K, K))
        self.trans_mask = np.zeros((K, K)) if trans_mask is None else trans_mask
        self.start_mask = np.zeros(K) if start_mask is None else start_mask

    @property
    def n_params(self) -> int:
        return self.weights.size + self.trans.size

    def get_flat(self) -> np.ndarray:
        return np.concatenate([self.weights.ravel(), self.trans.ravel()])

    def set_flat(self, theta: np.ndarray) -> None:
        n = self.weights.size
        self.weights = theta[:n].reshape(self.weights.shape).copy()
        self.trans = theta[n:].reshape(self.trans.shape).copy()

    def featurize(self, feats: Sequence[Sequence[str]]) -> sp.csr_matrix:
        """Rows of active feature ids; unknown features are dropped."""
        rows, cols = [], []
        for r, fs in enumerate(feats):
            for f in fs:
                k = self.feature_index.get(f)
                if k is not None:
                    rows.append(r)
                    cols.append(k)
        data = np.ones(len(rows))
        return sp.csr_matrix((data, (rows, cols)), shape=(len(feats), len(self.features)))

    def emissions(self, x: sp.csr_matrix) -> np.ndarray:
        return np.asarray(x @ self.weights)

    def transitions(self) -> np.ndarray:
        return self.trans + self.trans_mask

    def log_likelihood(self, batches: Sequence["ChainBatch"], l2: float):
        """Penalised conditional log-likelihood and its gradient over the flat parameters."""
        trans = self.transitions()
        g_w = np.zeros_like(self.weights)
        g_t = np.zeros_like(self.trans)
        total = 0.0
        K = len(self.labels)
        for batch in batches:
            B, N = batch.labels.shape
            emit = np.asarray(batch.x @ self.weights).reshape(B, N, K)
            logz, unary, pair = chain.batch_marginals(emit, trans, self.start_mask)
            y = batch.labels
            gold = np.take_along_axis(emit, y[:, :, None], axis=2).sum()
            gold += self.start_mask[y[:, 0]].sum() + trans[y[:, :-1], y[:, 1:]].sum()
            total += float(gold - logz.sum())
            observed = np.zeros((B * N, K))
            observed[np.arange(B * N), y.ravel()] = 1.0
            g_w += np.asarray(batch.x.T @ (observed - unary.reshape(B * N, K)))
            np.add.at(g_t, (y[:, :-1].ravel(), y[:, 1:].ravel()), 1.0)
            g_t -= pair
        g_t = np.where(np.isfinite(self.trans_mask), g_t, 0.0)
        theta = self.get_flat()
        total -= 0.5 * l2 * float(theta @ theta)
        grad = np.concatenate([g_w.ravel(), g_t.ravel()]) - l2 * theta
        return total, grad

    def fit(self, data: Sequence[Tuple[sp.csr_matrix, np.ndarray]], config: CRFConfig) -> List[float]:
        """Maximise the penalised log-likelihood of ``(features, label ids)`` sequences."""
        n_seq = len(data)
        data = make_batches(data)
        history: List[float] = []
        if config.optimizer == "lbfgs":
            def negative(theta):
                self.set_flat(theta)
                value, grad = self.log_likelihood(data, config.l2)
                history.append(value)
                return -value, -grad
            res = scipy.optimize.minimize(negative, self.get_flat(), jac=True, method="L-BFGS-B",
                                          options={"maxiter": config.epochs})
            self.set_flat(res.x)
            return history
        if config.optimizer != "ascent":
            raise ValueError(f"unknown optimizer {config.optimizer!r}")
        theta = self.get_flat()
        value, grad = self.log_likelihood(data, config.l2)
        step = config.initial_step / max(1, n_seq)
        history.append(value)
        for _ in range(config.epochs):
            cand = theta + step * grad
            self.set_flat(cand)
            cand_value, cand_grad = self.log_likelihood(data, config.l2)
            if cand_value > value:
                theta, value, grad = cand, cand_value, cand_grad
            else:
                step /= 2.0
            history.append(value)
        self.set_flat(theta)
        return history

    def to_checkpoint(self, kind: str, hyper: dict, extra_vocabs: Optional[dict] = None) -> ckpt_io.Checkpoint:
        vocabs = {"labels": self.labels, "features": self.features}
        vocabs.update(extra_vocabs or {})
        return ckpt_io.Checkpoint(kind, hyper, vocabs, {"weights": self.weights, "trans": self.trans})


@dataclass
class ChainBatch:
    """Equal-length sequences stacked row-wise: ``x`` is (B*N, F), ``labels`` (B, N)."""

    x: sp.csr_matrix
    labels: np.ndarray


def make_batches(data: Sequence[Tuple[sp.csr_matrix, np.ndarray]]) -> List[ChainBatch]:
    by_len: Dict[int, list] = {}
    for x, y in data:
        if x.shape[0] != len(y) or len(y) == 0:
            raise ValueError("feature rows and labels disagree")
        by_len.setdefault(len(y), []).append((x, y))
    return [ChainBatch(sp.vstack([x for x, _ in group], format="csr"), np.stack([y for _, y in group]))
            for _, group in sorted(by_len.items())]


def _masks_from(labels, trans_mask, start_mask, ckpt: ckpt_io.Checkpoint, feature_names):
    crf = FeatureCRF(labels, feature_names, trans_mask, start_mask)
    crf.weights = np.array(ckpt.params["weights"], copy=True)
    crf.trans = np.array(ckpt.params["trans"], copy=True)
    return crf


# ---------------------------------------------------------------------------
# word-level tagger


def _has_punct(word: str) -> bool:
    return any(not ch.isalnum() for ch in word)


def tagger_features(words: Sequence[str], k: int) -> List[str]:
    w = words[k].lower()
    feats = ["bias", f"w={w}"]
    for n in range(1, 5):
        if len(w) >= n:
            feats.append(f"p{n}={w[:n]}")
            feats.append(f"s{n}={w[-n:]}")
    if any(ch.isdigit() for ch in w):
        feats.append("digit")
    if _has_punct(w):
        feats.append("punct")
    padded = f"^{w}$"
    feats.extend(sorted({f"bg={padded[i:i + 2]}" for i in range(len(padded) - 1)}))
    feats.append("w-1=" + (words[k - 1].lower() if k > 0 else "<s>"))
    feats.append("w+1=" + (words[k + 1].lower() if k + 1 < len(words) else "</s>"))
    return feats


class CRFTagger:
    def __init__(self, crf: FeatureCRF, tagset: TagSet, config: CRFConfig, history: Sequence[float] = ()):
        self.crf = crf
        self.history = list(history)  # penalised log-likelihood per optimiser iteration
        self.tagset = tagset
        self.config = config

    @property
    def labels(self) -> List[str]:
        return self.crf.labels

    def sentence_matrix(self, words: Sequence[str]) -> sp.csr_matrix:
        return self.crf.featurize([tagger_features(words, k) for k in range(len(words))])

    def predict(self, words: Sequence[str]) -> List[str]:
        if not words:
            raise ValueError("empty sentence")
        emit = self.crf.emissions(self.sentence_matrix(words))
        labels, _ = chain.viterbi(emit, self.crf.transitions(), self.crf.start_mask)
        return [self.crf.labels[k] for k in labels]


def tagger_labels(corpus: Corpus) -> List[str]:
    seen = {corpus.tagset.compose(tok.tags) for tok in corpus.tokens()}
    return list(corpus.tagset.all_tags) + sorted(seen - set(corpus.tagset.all_tags))


def crf_tagger_train(corpus: Corpus, config: CRFConfig = None) -> CRFTagger:
    config = config or CRFConfig()
    if corpus.n_tokens() == 0:
        raise ValueError("empty training corpus")
    labels = tagger_labels(corpus)
    feats: Dict[str, None] = {}
    raw = []
    for sent in corpus.sentences:
        words = sent.surfaces
        rows = [tagger_features(words, k) for k in range(len(words))]
        for r in rows:
            feats.update(dict.fromkeys(r))
        raw.append((rows, [corpus.tagset.compose(t.tags) for t in sent.tokens]))
    crf = FeatureCRF(labels, list(feats))
    data = [(crf.featurize(rows), np.array([crf.label_index[y] for y in ys])) for rows, ys in raw]
    history = crf.fit(data, config)
    log.info("crf tagger: %d features, final objective %.4f", len(crf.features), history[-1])
    return CRFTagger(crf, corpus.tagset, config, history)


def crf_tagger_predict(model: CRFTagger, words: Sequence[str]) -> List[str]:
    return model.predict(words)


# ---------------------------------------------------------------------------
# character-level segmenter


def segmenter_features(word: str, k: int) -> List[str]:
    padded = "^" * 3 + word + "$" * 3
    p = k + 3
    feats = ["bias", f"c={word[k]}"]
    for n in range(1, 4):
        feats.append(f"l{n}={padded[p - n:p]}")
        feats.append(f"r{n}={padded[p:p + n]}")
    feats.append(f"lr={padded[p - 1:p + 1]}")
    return feats


def segmenter_labels(tagset: TagSet) -> List[str]:
    return [f"B-{y}" for y in tagset.monolingual] + [f"I-{y}" for y in tagset.monolingual]


def segmenter_masks(tagset: TagSet) -> Tuple[np.ndarray, np.ndarray]:
    """I-y may only follow B-y or I-y; a word starts with a B label."""
    M = len(tagset.monolingual)
    trans = np.zeros((2 * M, 2 * M))
    start = np.zeros(2 * M)
    start[M:] = -np.inf
    for y in range(M):
        for prev in range(2 * M):
            if prev % M != y:
                trans[prev, M + y] = -np.inf
    return trans, start


def token_labels(token: SegmentedToken, tagset: TagSet) -> List[str]:
    out = []
    for s in token.segments:
        out.append(f"B-{s.tag}")
        out.extend([f"I-{s.tag}"] * (s.end - s.start - 1))
    return out


class SegmentationError(ValueError):
    pass


class CRFSegmenter:
    def __init__(self, crf: FeatureCRF, tagset: TagSet, config: CRFConfig, history: Sequence[float] = ()):
        self.crf = crf
        self.history = list(history)  # penalised log-likelihood per optimiser iteration
        self.tagset = tagset
        self.config = config
        self._mono = {y: k for k, y in enumerate(tagset.monolingual)}

    def segment(self, surface: str, composed_tag: str) -> SegmentedToken:
        try:
            tags = self.tagset.decompose(composed_tag)
        except ValueError as exc:
            raise SegmentationError(str(exc)) from None
        m, n = len(tags), len(surface)
        if n == 0:
            raise SegmentationError("empty surface")
        if m == 1:
            return SegmentedToken.single(surface, tags[0])
        if m > n:
            raise SegmentationError(f"{m} segments requested for a {n}-character word")
        if any(a == b for a, b in zip(tags, tags[1:])):
            raise SegmentationError(f"repeated adjacent tag in {composed_tag!r}")
        ends = constrained_viterbi(self.emissions(surface), self.crf.transitions(),
                                   [self._mono[t] for t in tags], len(self.tagset.monolingual))
        starts = (0,) + ends[:-1]
        return SegmentedToken(surface, tuple(Segment(i, j, t) for i, j, t in zip(starts, ends, tags)))

    def emissions(self, surface: str) -> np.ndarray:
        return self.crf.emissions(self.crf.featurize([segmenter_features(surface, k) for k in range(len(surface))]))


def constrained_viterbi(emit: np.ndarray, trans: np.ndarray, seq: Sequence[int], M: int) -> Tuple[int, ...]:
    """Best placement of ``len(seq) - 1`` boundaries when the B labels must spell
    out ``seq``.  Label ids: B-y is ``y``, I-y is ``M + y``.  Returns segment end
    offsets; ties go to earlier boundaries."""
    n, m = emit.shape[0], len(seq)
    # best[s][r]: (score, boundaries) for position k inside segment s, r=0 if k starts it
    best: List[List[Optional[tuple]]] = [[None, None] for _ in range(m)]
    best[0][0] = (emit[0, seq[0]], ())
    for k in range(1, n):
        new: List[List[Optional[tuple]]] = [[None, None] for _ in range(m)]
        for s in range(m):
            for r in (0, 1):
                prev = best[s][r]
                if prev is None:
                    continue
                label = seq[s] if r == 0 else M + seq[s]
                # stay inside segment s
                cand = (prev[0] + trans[label, M + seq[s]] + emit[k, M + seq[s]], prev[1])
                if _seg_better(cand, new[s][1]):
                    new[s][1] = cand
                if s + 1 < m and n - k >= m - s - 1:
                    cand = (prev[0] + trans[label, seq[s + 1]] + emit[k, seq[s + 1]], prev[1] + (k,))
                    if _seg_better(cand, new[s + 1][0]):
                        new[s + 1][0] = cand
        best = new
    final = [c for c in best[m - 1] if c is not None]
    winner = final[0]
    for c in final[1:]:
        if _seg_better(c, winner):
            winner = c
    return winner[1] + (n,)


def _seg_better(a, b) -> bool:
    if b is None:
        return True
    if a[0] != b[0]:
        return a[0] > b[0]
    return a[1] < b[1]


def crf_segmenter_train(corpus: Corpus, config: CRFConfig = None) -> CRFSegmenter:
    config = config or CRFConfig()
    tagset = corpus.tagset
    labels = segmenter_labels(tagset)
    trans_mask, start_mask = segmenter_masks(tagset)
    words = [tok for tok in corpus.tokens() if all(t in tagset.monolingual for t in tok.tags)]
    if not words:
        raise ValueError("no monolingual-tagged tokens to train the segmenter on")
    feats: Dict[str, None] = {}
    rows_all = []
    for tok in words:
        rows = [segmenter_features(tok.surface, k) for k in range(len(tok.surface))]
        for r in rows:
            feats.update(dict.fromkeys(r))
        rows_all.append(rows)
    crf = FeatureCRF(labels, list(feats), trans_mask, start_mask)
    data = [(crf.featurize(rows), np.array([crf.label_index[l] for l in token_labels(tok, tagset)]))
            for rows, tok in zip(rows_all, words)]
    history = crf.fit(data, config)
    log.info("crf segmenter: %d features, final objective %.4f", len(crf.features), history[-1])
    return CRFSegmenter(crf, tagset, config, history)


def crf_segmenter_segment(model: CRFSegmenter, surface: str, composed_tag: str) -> SegmentedToken:
    return model.segment(surface, composed_tag)


def _tagset_vocabs(tagset: TagSet) -> dict:
    return {"monolingual": list(tagset.monolingual), "special": list(tagset.special),
            "separator": [tagset.separator]}


def _tagset_from(vocabs: dict) -> TagSet:
    return TagSet(tuple(vocabs["monolingual"]), tuple(vocabs["special"]), vocabs["separator"][0])


def tagger_to_checkpoint(model: CRFTagger) -> ckpt_io.Checkpoint:
    return model.crf.to_checkpoint("crf_tagger", model.config.to_dict(), _tagset_vocabs(model.tagset))


def _check_kind(ckpt: ckpt_io.Checkpoint, kind: str) -> None:
    if ckpt.kind != kind:
        raise ckpt_io.CheckpointError(f"expected a {kind} checkpoint, got {ckpt.kind!r}")


def tagger_from_checkpoint(ckpt: ckpt_io.Checkpoint) -> CRFTagger:
    _check_kind(ckpt, "crf_tagger")
    crf = _masks_from(ckpt.vocabs["labels"], None, None, ckpt, ckpt.vocabs["features"])
    return CRFTagger(crf, _tagset_from(ckpt.vocabs), CRFConfig(**ckpt.hyper))


def segmenter_to_checkpoint(model: CRFSegmenter) -> ckpt_io.Checkpoint:
    return model.crf.to_checkpoint("crf_segmenter", model.config.to_dict(), _tagset_vocabs(model.tagset))


def segmenter_from_checkpoint(ckpt: ckpt_io.Checkpoint) -> CRFSegmenter:
    _check_kind(ckpt, "crf_segmenter")
    tagset = _tagset_from(ckpt.vocabs)
    trans_mask, start_mask = segmenter_masks(tagset)
    crf = _masks_from(ckpt.vocabs["labels"], trans_mask, start_mask, ckpt, ckpt.vocabs["features"])
    return CRFSegmenter(crf, tagset, CRFConfig(**ckpt.hyper))
