"""Uniform train / predict / save interface over the four systems.

A trained system is a set of named parts (one model for ``segrnn`` and
``charbilstm``, tagger plus segmenter for the pipelines).  Its checkpoint is a
single file whose vocab and parameter names carry a ``<part>/`` prefix.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from . import segrnn
from .baselines import crf, neural
from .baselines.pipeline import pipeline_predict
from .corpus import Corpus, SegmentedToken
from .numerics import checkpoint as ckpt_io

SYSTEMS = ("segrnn", "charbilstm", "bilstm_pipeline", "crf_pipeline")

_PART_IO = {
    "segrnn": (segrnn.to_checkpoint, segrnn.from_checkpoint),
    "char_tagger": (neural.char_tagger_to_checkpoint, neural.char_tagger_from_checkpoint),
    "word_tagger": (neural.word_tagger_to_checkpoint, neural.word_tagger_from_checkpoint),
    "crf_tagger": (crf.tagger_to_checkpoint, crf.tagger_from_checkpoint),
    "crf_segmenter": (crf.segmenter_to_checkpoint, crf.segmenter_from_checkpoint),
}

Progress = Optional[Callable[[str, int, float], None]]


@dataclass
class TrainedSystem:
    name: str
    parts: Dict[str, object]
    # (stage, epoch or iteration, value): mean training loss, or the negated
    # penalised log-likelihood for CRF stages
    losses: List[Tuple[str, int, float]] = field(default_factory=list)

    def predict(self, words: Sequence[str], diagnostics: Optional[Dict[str, int]] = None) -> List[SegmentedToken]:
        if self.name == "segrnn":
            return segrnn.predict_sentence(self.parts["segrnn"], words)
        if self.name == "charbilstm":
            return neural.char_tagger_predict_batch(self.parts["char_tagger"], words)
        if self.name == "bilstm_pipeline":
            tagger = self.parts["word_tagger"]
            return pipeline_predict(lambda ws: neural.word_tagger_predict(tagger, ws),
                                    self.parts["crf_segmenter"], words, diagnostics)
        if self.name == "crf_pipeline":
            return pipeline_predict(self.parts["crf_tagger"].predict, self.parts["crf_segmenter"], words, diagnostics)
        raise ValueError(f"unknown system {self.name!r}")

    def predict_corpus(self, corpus: Corpus, diagnostics: Optional[Dict[str, int]] = None):
        return [self.predict(s.surfaces, diagnostics) if s.tokens else [] for s in corpus.sentences]

    def loss_text(self) -> str:
        return "".join(f"{stage}\t{k}\t{v:.17g}\n" for stage, k, v in self.losses)

    def to_checkpoint(self, run: Optional[dict] = None) -> ckpt_io.Checkpoint:
        bundle = ckpt_io.Checkpoint(self.name, {"run": run or {}, "parts": {}})
        for part, model in self.parts.items():
            sub = _PART_IO[part][0](model)
            bundle.hyper["parts"][part] = {"kind": sub.kind, "hyper": sub.hyper}
            bundle.vocabs.update({f"{part}/{k}": v for k, v in sub.vocabs.items()})
            bundle.params.update({f"{part}/{k}": v for k, v in sub.params.items()})
        return bundle


def from_checkpoint(bundle: ckpt_io.Checkpoint) -> TrainedSystem:
    if bundle.kind not in SYSTEMS:
        raise ckpt_io.CheckpointError(f"not a system checkpoint: kind {bundle.kind!r}")
    parts = {}
    for part, info in bundle.hyper.get("parts", {}).items():
        if part not in _PART_IO:
            raise ckpt_io.CheckpointError(f"unknown part {part!r}")
        prefix = part + "/"
        sub = ckpt_io.Checkpoint(
            info["kind"], info["hyper"],
            {k[len(prefix):]: v for k, v in bundle.vocabs.items() if k.startswith(prefix)},
            {k[len(prefix):]: v for k, v in bundle.params.items() if k.startswith(prefix)},
        )
        parts[part] = _PART_IO[part][1](sub)
    return TrainedSystem(bundle.kind, parts)


def _crf_losses(stage: str, history: Sequence[float]) -> List[Tuple[str, int, float]]:
    return [(stage, k + 1, -v) for k, v in enumerate(history)]


def train_system(name: str, corpus: Corpus, seed: int = 1, epochs: Optional[int] = None,
                 progress: Progress = None) -> TrainedSystem:
    """``epochs`` overrides the neural components' epoch count; the CRFs keep
    their fixed iteration budget."""
    if name not in SYSTEMS:
        raise ValueError(f"unknown system {name!r}; choose from {', '.join(SYSTEMS)}")

    def hook(stage):
        return None if progress is None else (lambda e, v: progress(stage, e + 1, v))

    def tagger_config():
        cfg = neural.TaggerConfig(seed=seed)
        return cfg if epochs is None else replace(cfg, epochs=epochs)

    if name == "segrnn":
        cfg = segrnn.SegRNNConfig(seed=seed)
        if epochs is not None:
            cfg = replace(cfg, epochs=epochs)
        model = segrnn.model_for_corpus(corpus, cfg)
        log = segrnn.train(model, corpus, cfg, hook("segrnn"))
        return TrainedSystem(name, {"segrnn": model},
                             [("segrnn", k + 1, v) for k, v in enumerate(log.epoch_losses)])
    if name == "charbilstm":
        model, history = neural.char_tagger_train(corpus, tagger_config(), hook("char_tagger"))
        return TrainedSystem(name, {"char_tagger": model},
                             [("char_tagger", k + 1, v) for k, v in enumerate(history)])

    losses: List[Tuple[str, int, float]] = []
    if name == "bilstm_pipeline":
        tagger, history = neural.word_tagger_train(corpus, tagger_config(), hook("word_tagger"))
        parts = {"word_tagger": tagger}
        losses += [("word_tagger", k + 1, v) for k, v in enumerate(history)]
    else:
        tagger = crf.crf_tagger_train(corpus)
        parts = {"crf_tagger": tagger}
        losses += _crf_losses("crf_tagger", tagger.history)
    segmenter = crf.crf_segmenter_train(corpus)
    parts["crf_segmenter"] = segmenter
    losses += _crf_losses("crf_segmenter", segmenter.history)
    return TrainedSystem(name, parts, losses)
