"""Recurrent baselines: a BiLSTM that tags every character of a word, and a
hierarchical BiLSTM that tags each word of a sentence with a composed tag."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..corpus import Corpus, Segment, SegmentedToken, TagSet
from ..numerics import autograd as ag
from ..numerics import checkpoint as ckpt_io
from ..numerics.autograd import Node
from ..numerics.init import glorot, make_rng
from ..numerics.layers import BiLSTM, Linear, Module
from ..numerics.optim import SGDConfig, make_optimizer, step, zero_grad

log = logging.getLogger(__name__)

UNK = "<unk>"


@dataclass
class TaggerConfig:
    char_embedding_dim: int = 100  # character tagger input
    hidden_dim: int = 100  # per direction, both taggers
    word_embedding_dim: int = 50  # word tagger: word half of the 100-dim input
    char_hidden_dim: int = 25  # word tagger: per direction, the other half
    epochs: int = 30
    lr: float = 0.1
    clip_norm: Optional[float] = 5.0
    dropout_rate: float = 0.25
    unk_replace_rate: float = 0.25
    seed: int = 1

    def __post_init__(self):
        if min(self.char_embedding_dim, self.hidden_dim, self.word_embedding_dim, self.char_hidden_dim) < 1:
            raise ValueError("all dimensions must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")
        if not 0.0 <= self.unk_replace_rate <= 1.0:
            raise ValueError("unk_replace_rate must lie in [0, 1]")

    def to_dict(self) -> dict:
        return asdict(self)


def _vocab(items) -> Tuple[str, ...]:
    return (UNK,) + tuple(x for x in dict.fromkeys(items) if x != UNK)


def pad_chars(words: Sequence[str], index: Dict[str, int]) -> Tuple[np.ndarray, List[int]]:
    """(T, B) character ids padded with the unknown id, plus lengths."""
    if any(not w for w in words):
        raise ValueError("empty surface")
    lengths = [len(w) for w in words]
    ids = np.zeros((max(lengths), len(words)), dtype=np.intp)
    for b, w in enumerate(words):
        ids[:len(w), b] = [index.get(c, 0) for c in w]
    return ids, lengths


def _valid_positions(lengths: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    t = np.concatenate([np.arange(n) for n in lengths])
    b = np.concatenate([np.full(n, k) for k, n in enumerate(lengths)])
    return t, b


def _sgd_train(name: str, model: Module, batches: list, batch_loss, config: TaggerConfig, progress) -> List[float]:
    params = model.parameters()
    opt = make_optimizer("sgd", params, SGDConfig(config.lr, config.clip_norm))
    rng = make_rng(config.seed + 1)
    history = []
    for epoch in range(config.epochs):
        total = 0.0
        for k in rng.permutation(len(batches)):
            zero_grad(params)
            node = batch_loss(batches[k], rng)
            node.backward()
            step(opt, params)
            total += float(node.value)
        history.append(total / len(batches))
        log.info("%s epoch %d loss %.6f", name, epoch + 1, history[-1])
        if progress is not None:
            progress(epoch, history[-1])
    return history


# ---------------------------------------------------------------------------
# character tagger


class CharTaggerModel(Module):
    def __init__(self, chars: Sequence[str], tagset: TagSet, config: TaggerConfig = None):
        config = config or TaggerConfig()
        self.config = config
        self.tagset = tagset
        self.tags: Tuple[str, ...] = tagset.all_tags
        self.chars = _vocab(chars)
        self.char_index = {c: k for k, c in enumerate(self.chars)}
        rng = make_rng(config.seed)
        self.char_emb = glorot(rng, (len(self.chars), config.char_embedding_dim), "char_emb")
        self.encoder = BiLSTM(rng, config.char_embedding_dim, config.hidden_dim, "encoder")
        self.proj = Linear(rng, 2 * config.hidden_dim, len(self.tags), "proj")

    def char_log_probs(self, words: Sequence[str], training: bool = False,
                       rng: Optional[np.random.Generator] = None) -> Node:
        """(T, B, n_tags) per-character log-probabilities; padded rows are junk."""
        ids, lengths = pad_chars(words, self.char_index)
        T, B = ids.shape
        hf, hb = self.encoder(ag.lookup(self.char_emb, ids), lengths)
        h = ag.dropout(ag.concat([hf, hb], axis=-1), self.config.dropout_rate, training, rng)
        scores = self.proj(ag.reshape(h, (T * B, -1)))
        return ag.reshape(ag.log_softmax(scores, axis=-1), (T, B, -1))


def char_targets(token: SegmentedToken) -> List[str]:
    """Every character inherits the tag of the segment covering it."""
    return token.char_tags()


def char_tagger_loss(model: CharTaggerModel, tokens: Sequence[SegmentedToken], training: bool = False,
                     rng: Optional[np.random.Generator] = None) -> Node:
    """Mean per-character cross-entropy over a batch of words."""
    logp = model.char_log_probs([t.surface for t in tokens], training, rng)
    t_idx, b_idx = _valid_positions([len(t.surface) for t in tokens])
    gold = np.array([model.tags.index(y) for tok in tokens for y in char_targets(tok)])
    picked = ag.getitem(logp, (t_idx, b_idx, gold))
    return ag.mul(ag.sum(picked), -1.0 / len(gold))


def runs_to_token(surface: str, char_tags: Sequence[str]) -> SegmentedToken:
    """Merge maximal runs of equal per-character tags into segments."""
    if not surface:
        raise ValueError("empty surface")
    segs: List[Segment] = []
    start = 0
    for k in range(1, len(surface) + 1):
        if k == len(surface) or char_tags[k] != char_tags[start]:
            segs.append(Segment(start, k, char_tags[start]))
            start = k
    return SegmentedToken(surface, tuple(segs))


def char_tagger_predict_batch(model: CharTaggerModel, surfaces: Sequence[str]) -> List[SegmentedToken]:
    if not surfaces:
        return []
    best = model.char_log_probs(surfaces).value.argmax(axis=-1)
    return [runs_to_token(w, [model.tags[k] for k in best[:len(w), b]]) for b, w in enumerate(surfaces)]


def char_tagger_predict(model: CharTaggerModel, surface: str) -> SegmentedToken:
    return char_tagger_predict_batch(model, [surface])[0]


def char_tagger_train(corpus: Corpus, config: TaggerConfig = None, progress=None) -> Tuple[CharTaggerModel, List[float]]:
    """One SGD step per sentence (its words form the batch); returns the model and per-epoch losses."""
    config = config or TaggerConfig()
    sentences = [list(s.tokens) for s in corpus.sentences if s.tokens]
    if not sentences:
        raise ValueError("empty training corpus")
    model = CharTaggerModel(sorted({c for tok in corpus.tokens() for c in tok.surface}), corpus.tagset, config)
    history = _sgd_train("char tagger", model, sentences,
                         lambda batch, rng: char_tagger_loss(model, batch, True, rng), config, progress)
    return model, history


# ---------------------------------------------------------------------------
# hierarchical word tagger


class WordTaggerModel(Module):
    """Word representation = [word embedding; final states of a character BiLSTM],
    fed through a sentence-level BiLSTM and projected onto composed tags."""

    def __init__(self, words: Sequence[str], chars: Sequence[str], labels: Sequence[str],
                 tagset: TagSet, config: TaggerConfig = None):
        config = config or TaggerConfig()
        self.config = config
        self.tagset = tagset
        self.labels: Tuple[str, ...] = tuple(labels)
        self.words = _vocab(words)
        self.word_index = {w: k for k, w in enumerate(self.words)}
        self.chars = _vocab(chars)
        self.char_index = {c: k for k, c in enumerate(self.chars)}
        rng = make_rng(config.seed)
        self.word_emb = glorot(rng, (len(self.words), config.word_embedding_dim), "word_emb")
        self.char_emb = glorot(rng, (len(self.chars), config.word_embedding_dim), "char_emb")
        self.char_encoder = BiLSTM(rng, config.word_embedding_dim, config.char_hidden_dim, "char_encoder")
        input_dim = config.word_embedding_dim + 2 * config.char_hidden_dim
        self.sentence_encoder = BiLSTM(rng, input_dim, config.hidden_dim, "sentence_encoder")
        self.proj = Linear(rng, 2 * config.hidden_dim, len(self.labels), "proj")

    def word_ids(self, words: Sequence[str], rng: Optional[np.random.Generator] = None,
                 singletons: frozenset = frozenset()) -> np.ndarray:
        ids = np.array([self.word_index.get(w, 0) for w in words], dtype=np.intp)
        if rng is not None and singletons:
            drop = rng.random(len(words)) < self.config.unk_replace_rate
            ids[[k for k, w in enumerate(words) if w in singletons and drop[k]]] = 0
        return ids

    def log_probs(self, words: Sequence[str], training: bool = False,
                  rng: Optional[np.random.Generator] = None, singletons: frozenset = frozenset()) -> Node:
        """(n_words, n_labels) log-probabilities over composed tags."""
        if not words:
            raise ValueError("empty sentence")
        ids, lengths = pad_chars(words, self.char_index)
        B = len(words)
        hf, hb = self.char_encoder(ag.lookup(self.char_emb, ids), lengths)
        last = np.array(lengths) - 1
        char_repr = ag.concat([ag.getitem(hf, (last, np.arange(B))), ag.getitem(hb, 0)], axis=-1)
        word_repr = ag.lookup(self.word_emb, self.word_ids(words, rng if training else None, singletons))
        x = ag.dropout(ag.concat([word_repr, char_repr], axis=-1), self.config.dropout_rate, training, rng)
        sf, sb = self.sentence_encoder(ag.reshape(x, (B, 1, -1)))
        h = ag.dropout(ag.reshape(ag.concat([sf, sb], axis=-1), (B, -1)), self.config.dropout_rate, training, rng)
        return ag.log_softmax(self.proj(h), axis=-1)


def word_label(token: SegmentedToken, tagset: TagSet) -> str:
    return tagset.compose(token.tags)


def word_tagger_loss(model: WordTaggerModel, tokens: Sequence[SegmentedToken], training: bool = False,
                     rng: Optional[np.random.Generator] = None, singletons: frozenset = frozenset()) -> Node:
    logp = model.log_probs([t.surface for t in tokens], training, rng, singletons)
    gold = np.array([model.labels.index(word_label(t, model.tagset)) for t in tokens])
    picked = ag.getitem(logp, (np.arange(len(tokens)), gold))
    return ag.mul(ag.sum(picked), -1.0 / len(tokens))


def word_tagger_distribution(model: WordTaggerModel, words: Sequence[str]) -> np.ndarray:
    return np.exp(model.log_probs(words).value)


def word_tagger_predict(model: WordTaggerModel, words: Sequence[str]) -> List[str]:
    return [model.labels[k] for k in model.log_probs(words).value.argmax(axis=-1)]


def word_tagger_train(corpus: Corpus, config: TaggerConfig = None, progress=None) -> Tuple[WordTaggerModel, List[float]]:
    config = config or TaggerConfig()
    sentences = [list(s.tokens) for s in corpus.sentences if s.tokens]
    if not sentences:
        raise ValueError("empty training corpus")
    counts: Dict[str, int] = {}
    for tok in corpus.tokens():
        counts[tok.surface] = counts.get(tok.surface, 0) + 1
    observed = {word_label(t, corpus.tagset) for t in corpus.tokens()}
    labels = list(corpus.tagset.all_tags) + sorted(observed - set(corpus.tagset.all_tags))
    chars = sorted({c for w in counts for c in w})
    model = WordTaggerModel(sorted(counts), chars, labels, corpus.tagset, config)
    singletons = frozenset(w for w, n in counts.items() if n == 1)
    history = _sgd_train("word tagger", model, sentences,
                         lambda batch, rng: word_tagger_loss(model, batch, True, rng, singletons), config, progress)
    return model, history


# ---------------------------------------------------------------------------
# checkpoints


def _tagset_vocabs(tagset: TagSet) -> dict:
    return {"monolingual": list(tagset.monolingual), "special": list(tagset.special),
            "separator": [tagset.separator]}


def _tagset_from(vocabs: dict) -> TagSet:
    return TagSet(tuple(vocabs["monolingual"]), tuple(vocabs["special"]), vocabs["separator"][0])


def char_tagger_to_checkpoint(model: CharTaggerModel) -> ckpt_io.Checkpoint:
    vocabs = {"chars": list(model.chars[1:]), **_tagset_vocabs(model.tagset)}
    return ckpt_io.Checkpoint("char_tagger", model.config.to_dict(), vocabs, model.state_dict())


def char_tagger_from_checkpoint(ckpt: ckpt_io.Checkpoint) -> CharTaggerModel:
    if ckpt.kind != "char_tagger":
        raise ckpt_io.CheckpointError(f"expected a char_tagger checkpoint, got {ckpt.kind!r}")
    model = CharTaggerModel(ckpt.vocabs["chars"], _tagset_from(ckpt.vocabs), TaggerConfig(**ckpt.hyper))
    model.load_state_dict(ckpt.params)
    return model


def word_tagger_to_checkpoint(model: WordTaggerModel) -> ckpt_io.Checkpoint:
    vocabs = {"words": list(model.words[1:]), "chars": list(model.chars[1:]), "labels": list(model.labels),
              **_tagset_vocabs(model.tagset)}
    return ckpt_io.Checkpoint("word_tagger", model.config.to_dict(), vocabs, model.state_dict())


def word_tagger_from_checkpoint(ckpt: ckpt_io.Checkpoint) -> WordTaggerModel:
    if ckpt.kind != "word_tagger":
        raise ckpt_io.CheckpointError(f"expected a word_tagger checkpoint, got {ckpt.kind!r}")
    v = ckpt.vocabs
    model = WordTaggerModel(v["words"], v["chars"], v["labels"], _tagset_from(v), TaggerConfig(**ckpt.hyper))
    model.load_state_dict(ckpt.params)
    return model
