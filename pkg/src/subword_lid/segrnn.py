"""Segmental RNN for joint segmentation and language tagging of single words.

Every span of a word is represented by a bidirectional LSTM composer run over
the span's character embeddings, with initial states seeded from a word-level
BiLSTM.  A span/tag pair is scored by a one-hidden-layer network over
``[span representation; tag embedding; length embedding]``, and the model
defines ``p(tags, segment lengths | word)`` by normalising over every parse.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import semimarkov
from .corpus import Corpus, Segment, SegmentedToken, TagSet
from .numerics import autograd as ag
from .numerics import checkpoint as ckpt_io
from .numerics.autograd import Node
from .numerics.init import glorot, make_rng, zeros
from .numerics.layers import LSTM, BiLSTM, Linear, Module
from .numerics.optim import AdamConfig, make_optimizer, step, zero_grad
from .semimarkov import SegLattice

log = logging.getLogger(__name__)

UNK = "<unk>"
N_LENGTH_BUCKETS = 9


@dataclass
class SegRNNConfig:
    char_embedding_dim: int = 64
    encoder_hidden_dim: int = 64
    encoder_layers: int = 1
    composer_hidden_dim: int = 16
    segment_embedding_dim: int = 16
    tag_embedding_dim: int = 32
    length_embedding_dim: int = 4
    score_hidden_dim: int = 32
    max_segment_length: Optional[int] = None
    dropout_rate: float = 0.2
    epochs: int = 30
    seed: int = 1
    adam: AdamConfig = field(default_factory=AdamConfig)

    def __post_init__(self):
        if isinstance(self.adam, dict):
            self.adam = AdamConfig(**self.adam)
        dims = (self.char_embedding_dim, self.encoder_hidden_dim, self.composer_hidden_dim,
                self.segment_embedding_dim, self.tag_embedding_dim, self.length_embedding_dim,
                self.score_hidden_dim)
        if min(dims) < 1:
            raise ValueError("all dimensions must be >= 1")
        if self.encoder_layers != 1:
            raise ValueError("only a single encoder layer is supported")
        if self.max_segment_length is not None and self.max_segment_length < 1:
            raise ValueError("max_segment_length must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must lie in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


def length_bucket(length: int) -> int:
    """Lengths 1..8 get their own bucket; 9 and longer share the last."""
    return min(length, N_LENGTH_BUCKETS) - 1


@dataclass
class WordEncoding:
    embeddings: Node  # (n, char_embedding_dim)
    contextual: Node  # (n, 2 * encoder_hidden_dim)

    def __len__(self) -> int:
        return self.contextual.shape[0]


class SegRNNModel(Module):
    def __init__(self, chars: Sequence[str], tagset: TagSet, config: SegRNNConfig = None):
        config = config or SegRNNConfig()
        self.config = config
        self.tagset = tagset
        self.tags: Tuple[str, ...] = tagset.all_tags
        self.chars: Tuple[str, ...] = (UNK,) + tuple(c for c in dict.fromkeys(chars) if c != UNK)
        self.char_index = {c: k for k, c in enumerate(self.chars)}
        self._special = np.array([tagset.is_special(t) for t in self.tags])

        rng = make_rng(config.seed)
        E, H, C = config.char_embedding_dim, config.encoder_hidden_dim, config.composer_hidden_dim
        self.char_emb = glorot(rng, (len(self.chars), E), "char_emb")
        self.encoder = BiLSTM(rng, E, H, "encoder")
        self.seed_fwd = Linear(rng, 2 * H, C, "composer.seed_fwd")
        self.seed_bwd = Linear(rng, 2 * H, C, "composer.seed_bwd")
        self.composer_fwd = LSTM(rng, E, C, "composer.fwd")
        self.composer_bwd = LSTM(rng, E, C, "composer.bwd")
        self.segment_proj = Linear(rng, 2 * C, config.segment_embedding_dim, "segment_proj")
        self.tag_emb = glorot(rng, (len(self.tags), config.tag_embedding_dim), "tag_emb")
        self.length_emb = glorot(rng, (N_LENGTH_BUCKETS, config.length_embedding_dim), "length_emb")
        S = config.score_hidden_dim
        self.score_seg = glorot(rng, (config.segment_embedding_dim, S), "score.w_segment")
        self.score_tag = glorot(rng, (config.tag_embedding_dim, S), "score.w_tag")
        self.score_len = glorot(rng, (config.length_embedding_dim, S), "score.w_length")
        self.score_bias = zeros((S,), "score.bias")
        self.score_out = glorot(rng, (S, 1), "score.out")

    def char_ids(self, surface: str) -> np.ndarray:
        return np.array([self.char_index.get(c, 0) for c in surface], dtype=np.intp)

    def tag_id(self, tag: str) -> int:
        return self.tags.index(tag)

    def max_len(self, n: int) -> int:
        L = self.config.max_segment_length
        return n if L is None else min(L, n)


def encode_word(model: SegRNNModel, surface: str, training: bool = False,
                rng: Optional[np.random.Generator] = None) -> WordEncoding:
    if not surface:
        raise ValueError("cannot encode an empty word")
    n = len(surface)
    emb = ag.lookup(model.char_emb, model.char_ids(surface))
    hf, hb = model.encoder(ag.reshape(emb, (n, 1, -1)))
    ctx = ag.reshape(ag.concat([hf, hb], axis=-1), (n, -1))
    ctx = ag.dropout(ctx, model.config.dropout_rate, training, rng)
    return WordEncoding(emb, ctx)


def score_lattice_node(model: SegRNNModel, enc: WordEncoding, max_len: Optional[int] = None):
    """Differentiable (spans x tags) score table, with special tags masked off
    every span other than the whole word."""
    n = len(enc)
    L = model.max_len(n) if max_len is None else min(max_len, n)
    spans = semimarkov.admissible_spans(n, L)
    starts = np.array([i for i, _ in spans])
    ends = np.array([j for _, j in spans])
    steps = ends - starts - 1

    E = enc.embeddings.shape[1]
    padded = ag.concat([enc.embeddings, np.zeros((1, E))], axis=0)
    k = np.arange(n)[:, None]
    pos = np.arange(n)[None, :]
    fwd_idx = np.where(pos + k < n, pos + k, n)   # step k of the run starting at pos
    bwd_idx = np.where(pos - k >= 0, pos - k, n)  # step k of the run ending at pos
    h0_f = ag.tanh(model.seed_fwd(enc.contextual))
    h0_b = ag.tanh(model.seed_bwd(enc.contextual))
    run_f = model.composer_fwd(ag.getitem(padded, fwd_idx), h0_f)
    run_b = model.composer_bwd(ag.getitem(padded, bwd_idx), h0_b)
    span_f = ag.getitem(run_f, (steps, starts))
    span_b = ag.getitem(run_b, (steps, ends - 1))
    seg = ag.tanh(model.segment_proj(ag.concat([span_f, span_b], axis=-1)))

    buckets = np.array([length_bucket(j - i) for i, j in spans])
    span_part = ag.add(ag.matmul(seg, model.score_seg),
                       ag.matmul(ag.lookup(model.length_emb, buckets), model.score_len))
    tag_part = ag.add(ag.matmul(model.tag_emb, model.score_tag), model.score_bias)
    S, T, Hs = len(spans), len(model.tags), model.config.score_hidden_dim
    hidden = ag.tanh(ag.add(ag.reshape(span_part, (S, 1, Hs)), ag.reshape(tag_part, (1, T, Hs))))
    phi = ag.reshape(ag.matmul(ag.reshape(hidden, (S * T, Hs)), model.score_out), (S, T))

    mask = np.zeros((S, T))
    partial = (starts != 0) | (ends != n)
    mask[np.ix_(partial, model._special)] = -np.inf
    phi = ag.add(phi, mask)
    lattice = SegLattice(n, L, model.tags, spans, phi.value)
    return phi, lattice


def score_lattice(model: SegRNNModel, enc: WordEncoding, max_len: Optional[int] = None) -> SegLattice:
    return score_lattice_node(model, enc, max_len)[1]


def log_partition(lattice: SegLattice) -> float:
    return semimarkov.log_partition(lattice)


def gold_spans(model: SegRNNModel, token: SegmentedToken):
    return [(s.start, s.end) for s in token.segments], [model.tag_id(s.tag) for s in token.segments]


def gold_log_score(lattice: SegLattice, spans, tag_ids) -> float:
    return semimarkov.parse_score(lattice, spans, tag_ids)


def loss(model: SegRNNModel, token: SegmentedToken, training: bool = False,
         rng: Optional[np.random.Generator] = None) -> Node:
    """``-log p(tags, lengths | word)`` as a graph node."""
    enc = encode_word(model, token.surface, training, rng)
    phi, lattice = score_lattice_node(model, enc)
    spans, tag_ids = gold_spans(model, token)
    rows = []
    for span in spans:
        if span not in lattice.index:
            raise ValueError(f"gold segment {span} of {token.surface!r} exceeds the segment-length bound")
        rows.append(lattice.index[span])
    gold = ag.sum(ag.getitem(phi, (np.array(rows), np.array(tag_ids))))
    return ag.sub(semimarkov.log_partition_node(phi, lattice), gold)


def parse_to_token(surface: str, spans, tag_names) -> SegmentedToken:
    """Build a token from a parse, merging adjacent spans that carry the same tag."""
    segs: List[Segment] = []
    for (i, j), tag in zip(spans, tag_names):
        if segs and segs[-1].tag == tag:
            segs[-1] = Segment(segs[-1].start, j, tag)
        else:
            segs.append(Segment(i, j, tag))
    return SegmentedToken(surface, tuple(segs))


def decode(model: SegRNNModel, surface: str) -> SegmentedToken:
    """Viterbi parse of ``surface``; a same-tag split is not representable, so
    such neighbours come back merged."""
    lattice = score_lattice(model, encode_word(model, surface))
    (spans, tag_ids), _ = semimarkov.viterbi(lattice)
    return parse_to_token(surface, spans, [model.tags[y] for y in tag_ids])


def predict_sentence(model: SegRNNModel, surfaces: Sequence[str]) -> List[SegmentedToken]:
    return [decode(model, w) for w in surfaces]


@dataclass
class TrainLog:
    epoch_losses: List[float] = field(default_factory=list)

    def to_text(self) -> str:
        return "".join(f"{e + 1}\t{v:.17g}\n" for e, v in enumerate(self.epoch_losses))


def model_for_corpus(corpus: Corpus, config: SegRNNConfig = None) -> SegRNNModel:
    chars = sorted({c for tok in corpus.tokens() for c in tok.surface})
    return SegRNNModel(chars, corpus.tagset, config)


def train(model: SegRNNModel, corpus: Corpus, config: SegRNNConfig = None, progress=None) -> TrainLog:
    """One token per Adam step, tokens reshuffled every epoch; returns the per-epoch mean loss."""
    config = config or model.config
    tokens = list(corpus.tokens())
    if not tokens:
        raise ValueError("empty training corpus")
    for tok in tokens:
        for tag in tok.tags:
            if tag not in model.tags:
                raise ValueError(f"corpus tag {tag!r} unknown to the model")
    params = model.parameters()
    opt = make_optimizer("adam", params, config.adam)
    rng = make_rng(config.seed + 1)
    history = TrainLog()
    for epoch in range(config.epochs):
        total = 0.0
        for k in rng.permutation(len(tokens)):
            zero_grad(params)
            node = loss(model, tokens[k], training=True, rng=rng)
            node.backward()
            step(opt, params)
            total += float(node.value)
        history.epoch_losses.append(total / len(tokens))
        log.info("segrnn epoch %d loss %.6f", epoch + 1, history.epoch_losses[-1])
        if progress is not None:
            progress(epoch, history.epoch_losses[-1])
    return history


def to_checkpoint(model: SegRNNModel) -> ckpt_io.Checkpoint:
    return ckpt_io.Checkpoint(
        kind="segrnn",
        hyper=model.config.to_dict(),
        vocabs={"chars": list(model.chars[1:]), "monolingual": list(model.tagset.monolingual),
                "special": list(model.tagset.special), "separator": [model.tagset.separator]},
        params=model.state_dict(),
    )


def from_checkpoint(ckpt: ckpt_io.Checkpoint) -> SegRNNModel:
    if ckpt.kind != "segrnn":
        raise ckpt_io.CheckpointError(f"expected a segrnn checkpoint, got {ckpt.kind!r}")
    v = ckpt.vocabs
    tagset = TagSet(tuple(v["monolingual"]), tuple(v["special"]), v["separator"][0])
    model = SegRNNModel(v["chars"], tagset, SegRNNConfig(**ckpt.hyper))
    model.load_state_dict(ckpt.params)
    return model
