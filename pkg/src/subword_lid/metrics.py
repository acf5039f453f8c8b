"""Segment-level precision/recall/F1, character accuracy, confusion matrices and
over/under-segmentation rates.

Segments are the unit: an unsegmented word is one segment.  A predicted
segment is correct when a gold segment has the same span (``"boundary"``
mode) or the same span and tag (``"boundary_and_label"`` mode).
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .corpus import Corpus, SegmentedToken

BOUNDARY = "boundary"
LABELED = "boundary_and_label"

Sentences = Sequence[Sequence[SegmentedToken]]


@dataclass(frozen=True)
class MatchCounts:
    n_gold: int = 0
    n_pred: int = 0
    n_correct: int = 0

    def __post_init__(self):
        if self.n_correct > min(self.n_gold, self.n_pred):
            raise ValueError("more correct segments than gold or predicted ones")

    def __add__(self, other: "MatchCounts") -> "MatchCounts":
        return MatchCounts(self.n_gold + other.n_gold, self.n_pred + other.n_pred,
                           self.n_correct + other.n_correct)


def match_segments(gold: SegmentedToken, pred: SegmentedToken, mode: str = LABELED) -> MatchCounts:
    if gold.surface != pred.surface:
        raise ValueError(f"surface mismatch: {gold.surface!r} vs {pred.surface!r}")
    if mode == BOUNDARY:
        gold_keys = {(s.start, s.end) for s in gold.segments}
        correct = sum((s.start, s.end) in gold_keys for s in pred.segments)
    elif mode == LABELED:
        gold_keys = {(s.start, s.end, s.tag) for s in gold.segments}
        correct = sum((s.start, s.end, s.tag) in gold_keys for s in pred.segments)
    else:
        raise ValueError(f"unknown matching mode {mode!r}")
    return MatchCounts(len(gold.segments), len(pred.segments), correct)


def prf(counts: MatchCounts) -> Tuple[float, float, float]:
    p = counts.n_correct / counts.n_pred if counts.n_pred else 0.0
    r = counts.n_correct / counts.n_gold if counts.n_gold else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def _as_token_lists(sentences) -> List[List[SegmentedToken]]:
    if isinstance(sentences, Corpus):
        return [list(s.tokens) for s in sentences.sentences]
    return [list(getattr(s, "tokens", s)) for s in sentences]


def aligned_pairs(gold_sentences, pred_sentences) -> List[Tuple[SegmentedToken, SegmentedToken]]:
    gold, pred = _as_token_lists(gold_sentences), _as_token_lists(pred_sentences)
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold sentences but {len(pred)} predicted")
    pairs = []
    for k, (gs, ps) in enumerate(zip(gold, pred)):
        if len(gs) != len(ps):
            raise ValueError(f"sentence {k}: {len(gs)} gold tokens but {len(ps)} predicted")
        for g, p in zip(gs, ps):
            if g.surface != p.surface:
                raise ValueError(f"sentence {k}: surface mismatch {g.surface!r} vs {p.surface!r}")
            pairs.append((g, p))
    return pairs


def count_matches(pairs, mode: str) -> MatchCounts:
    total = MatchCounts()
    for g, p in pairs:
        total = total + match_segments(g, p, mode)
    return total


def _pair_char_accuracy(pairs) -> Tuple[int, int]:
    correct = total = 0
    for g, p in pairs:
        correct += sum(a == b for a, b in zip(g.char_tags(), p.char_tags()))
        total += len(g.surface)
    return correct, total


def char_accuracy(gold_sentences, pred_sentences) -> float:
    correct, total = _pair_char_accuracy(aligned_pairs(gold_sentences, pred_sentences))
    return correct / total if total else 0.0


def mixed_only(pairs) -> List[Tuple[SegmentedToken, SegmentedToken]]:
    """Keep the positions whose gold token has two or more segments."""
    return [(g, p) for g, p in pairs if g.is_mixed]


def composed_tag(token: SegmentedToken, separator: str = "_") -> str:
    return separator.join(token.tags)


def _round2(x: float) -> Decimal:
    return Decimal(repr(float(x))).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


@dataclass
class ConfusionMatrix:
    """``counts[p, g]``: tokens with gold composed tag ``labels[g]`` predicted as ``labels[p]``."""

    labels: List[str]
    counts: np.ndarray

    def normalized(self) -> np.ndarray:
        totals = self.counts.sum(axis=0, keepdims=True)
        return np.divide(self.counts, totals, out=np.zeros(self.counts.shape), where=totals > 0)

    def gold_totals(self) -> Dict[str, int]:
        return {lab: int(n) for lab, n in zip(self.labels, self.counts.sum(axis=0))}

    def to_csv(self) -> str:
        """Column-normalised grid rounded to two decimals; rounded columns need not sum to 1."""
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["predicted\\gold"] + self.labels)
        norm = self.normalized()
        for p, lab in enumerate(self.labels):
            writer.writerow([lab] + [str(_round2(v)) for v in norm[p]])
        return out.getvalue()


def confusion_matrix(gold_sentences, pred_sentences, separator: str = "_") -> ConfusionMatrix:
    pairs = aligned_pairs(gold_sentences, pred_sentences)
    gold_tags = [composed_tag(g, separator) for g, _ in pairs]
    pred_tags = [composed_tag(p, separator) for _, p in pairs]
    labels = sorted(set(gold_tags) | set(pred_tags))
    index = {lab: k for k, lab in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for g, p in zip(gold_tags, pred_tags):
        counts[index[p], index[g]] += 1
    return ConfusionMatrix(labels, counts)


def _error_rates(pairs) -> Tuple[float, float]:
    if not pairs:
        return 0.0, 0.0
    over = sum(len(p.segments) > len(g.segments) for g, p in pairs)
    under = sum(len(p.segments) < len(g.segments) for g, p in pairs)
    return over / len(pairs), under / len(pairs)


def seg_error_rates(gold_sentences, pred_sentences) -> Tuple[float, float]:
    """(oversegmentation, undersegmentation) as fractions of all tokens."""
    return _error_rates(aligned_pairs(gold_sentences, pred_sentences))


@dataclass
class Scores:
    segmentation: Tuple[float, float, float]
    tagging: Tuple[float, float, float]
    char_accuracy: float
    n_tokens: int

    def row(self) -> List[float]:
        return list(self.segmentation) + list(self.tagging) + [self.char_accuracy]


def _scores(pairs) -> Scores:
    correct, total = _pair_char_accuracy(pairs)
    return Scores(prf(count_matches(pairs, BOUNDARY)), prf(count_matches(pairs, LABELED)),
                  correct / total if total else 0.0, len(pairs))


MIXED_NOTE = ("mixed-only: token positions whose gold annotation has >= 2 segments; "
              "precision counts predicted segments at those positions only")


@dataclass
class EvalReport:
    overall: Scores
    mixed: Scores
    mixed_empty: bool
    confusion: ConfusionMatrix
    overseg_rate: float
    underseg_rate: float
    diagnostics: Dict[str, int] = field(default_factory=dict)
    note: str = MIXED_NOTE


def evaluate(gold_sentences, pred_sentences, diagnostics: Optional[Dict[str, int]] = None,
             separator: str = "_") -> EvalReport:
    pairs = aligned_pairs(gold_sentences, pred_sentences)
    mixed = mixed_only(pairs)
    over, under = _error_rates(pairs)
    return EvalReport(
        overall=_scores(pairs),
        mixed=_scores(mixed),
        mixed_empty=not mixed,
        confusion=confusion_matrix(gold_sentences, pred_sentences, separator),
        overseg_rate=over,
        underseg_rate=under,
        diagnostics=dict(diagnostics or {}),
    )


_HEADER = ("Seg.P", "Seg.R", "Seg.F1", "Tag.P", "Tag.R", "Tag.F1", "CharAcc")


def render_table(reports: Dict[str, EvalReport], mixed: bool = False) -> str:
    """Plain-text results table, one row per system, values in percent."""
    title = "mixed words only" if mixed else "all words"
    width = max([len("system")] + [len(k) for k in reports]) + 2
    head = f"{'system':<{width}}| {'Segmentation':^23}| {'Tagging':^23}| {'Char':>6}"
    sub = f"{'':<{width}}| {'P':>7}{'R':>7}{'F1':>7}  | {'P':>7}{'R':>7}{'F1':>7}  | {'Acc.':>6}"
    lines = [f"# {title}", head, sub, "-" * len(sub)]
    for name, rep in reports.items():
        s = rep.mixed if mixed else rep.overall
        v = [100 * x for x in s.row()]
        lines.append(f"{name:<{width}}| {v[0]:>7.1f}{v[1]:>7.1f}{v[2]:>7.1f}  | "
                     f"{v[3]:>7.1f}{v[4]:>7.1f}{v[5]:>7.1f}  | {v[6]:>6.1f}")
    if mixed:
        lines.append(f"# {MIXED_NOTE}")
    return "\n".join(lines) + "\n"


def report_csv(reports: Dict[str, EvalReport]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["system", "subset", "seg_p", "seg_r", "seg_f1", "tag_p", "tag_r", "tag_f1",
                     "char_acc", "n_tokens", "overseg_rate", "underseg_rate"])
    for name, rep in reports.items():
        for subset, s in (("all", rep.overall), ("mixed", rep.mixed)):
            writer.writerow([name, subset] + ["%.6f" % x for x in s.row()] + [s.n_tokens]
                            + ["%.6f" % rep.overseg_rate, "%.6f" % rep.underseg_rate])
    return out.getvalue()
