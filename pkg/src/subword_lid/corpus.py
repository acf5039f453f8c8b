"""Data model and file format for subword-annotated code-switched text.

One token per line, three tab-separated columns::

    pecansadoxɨ<TAB>pe|cansado|xɨ<TAB>WIX|ES|WIX

A blank line ends a sentence.  Lines starting with ``#`` and holding no tab
are sentence comments; they precede the sentence's first token.  A ``#`` line
with tabs is a token, so hashtags survive.  Character offsets count Unicode scalar
values, which is what Python ``str`` indexing does.
"""
from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

MIXED = "MIXED"
_SPECIAL_NAMES = {"OTHER", "AMBIG", "LANG3", "MIXED", "UNK"}


class CorpusFormatError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)
        self.line = line
        self.column = column


def _check_tag_name(name: str, separator: str) -> None:
    if not name or any(ch.isspace() for ch in name) or "|" in name or separator in name:
        raise ValueError(f"invalid tag name {name!r}")


@dataclass(frozen=True)
class TagSet:
    monolingual: Tuple[str, ...]
    special: Tuple[str, ...] = ()
    separator: str = "_"

    def __post_init__(self):
        object.__setattr__(self, "monolingual", tuple(self.monolingual))
        object.__setattr__(self, "special", tuple(self.special))
        if len(self.separator) != 1:
            raise ValueError("composition separator must be a single character")
        for name in self.monolingual + self.special:
            _check_tag_name(name, self.separator)
        if set(self.monolingual) & set(self.special):
            raise ValueError("monolingual and special tags overlap")
        if len(set(self.all_tags)) != len(self.all_tags):
            raise ValueError("duplicate tag in tag set")

    @property
    def all_tags(self) -> Tuple[str, ...]:
        return self.monolingual + self.special

    def __contains__(self, tag: str) -> bool:
        return tag in self.monolingual or tag in self.special

    def is_special(self, tag: str) -> bool:
        return tag in self.special

    def compose(self, tags: Sequence[str]) -> str:
        return self.separator.join(tags)

    def decompose(self, composed: str) -> Tuple[str, ...]:
        """Inverse of :meth:`compose`; raises on unknown or malformed pieces."""
        parts = tuple(composed.split(self.separator))
        if any(p not in self for p in parts):
            raise ValueError(f"malformed composed tag {composed!r}")
        if len(parts) > 1 and any(self.is_special(p) for p in parts):
            raise ValueError(f"special tag inside composed tag {composed!r}")
        return parts

    @classmethod
    def infer(cls, tags: Iterable[str], separator: str = "_") -> "TagSet":
        """Guess the split of observed tags: NE.*, OTHER, AMBIG, LANG3 are special."""
        mono, special = [], []
        for t in sorted(set(tags)):
            (special if "." in t or t in _SPECIAL_NAMES else mono).append(t)
        return cls(tuple(mono), tuple(special), separator)


DE_TR = TagSet(
    ("DE", "TR"),
    ("LANG3", "AMBIG", "OTHER", "NE.TR", "NE.DE", "NE.AMBIG", "NE.LANG3"),
)
ES_WIX = TagSet(("ES", "WIX", "EN"), ("AMBIG", "OTHER", "NE.ES", "NE.WIX", "NE.EN"))


@dataclass(frozen=True)
class Segment:
    start: int
    end: int
    tag: str


@dataclass(frozen=True)
class SegmentedToken:
    surface: str
    segments: Tuple[Segment, ...]

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.surface:
            raise ValueError("empty surface")
        if any(ch in self.surface for ch in "\t\n\r"):
            raise ValueError(f"surface {self.surface!r} contains a tab or line break")
        if not self.segments:
            raise ValueError(f"token {self.surface!r} has no segments")
        pos = 0
        for seg in self.segments:
            if seg.start != pos or seg.end <= seg.start:
                raise ValueError(f"segments of {self.surface!r} do not tile the surface")
            pos = seg.end
        if pos != len(self.surface):
            raise ValueError(f"segments of {self.surface!r} do not cover the surface")
        for a, b in zip(self.segments, self.segments[1:]):
            if a.tag == b.tag:
                raise ValueError(f"adjacent segments of {self.surface!r} share tag {a.tag}")

    @classmethod
    def from_pieces(cls, pieces: Sequence[str], tags: Sequence[str]) -> "SegmentedToken":
        if len(pieces) != len(tags):
            raise ValueError("piece/tag count mismatch")
        segs, pos = [], 0
        for piece, tag in zip(pieces, tags):
            segs.append(Segment(pos, pos + len(piece), tag))
            pos += len(piece)
        return cls("".join(pieces), tuple(segs))

    @classmethod
    def single(cls, surface: str, tag: str) -> "SegmentedToken":
        return cls(surface, (Segment(0, len(surface), tag),))

    @property
    def pieces(self) -> Tuple[str, ...]:
        return tuple(self.surface[s.start:s.end] for s in self.segments)

    @property
    def tags(self) -> Tuple[str, ...]:
        return tuple(s.tag for s in self.segments)

    @property
    def is_mixed(self) -> bool:
        return len(self.segments) > 1

    def char_tags(self) -> List[str]:
        out: List[str] = []
        for s in self.segments:
            out.extend([s.tag] * (s.end - s.start))
        return out

    def validate(self, tagset: TagSet) -> None:
        for s in self.segments:
            if s.tag not in tagset:
                raise ValueError(f"unknown tag {s.tag!r}")
        if self.is_mixed and any(tagset.is_special(t) for t in self.tags):
            raise ValueError(f"special tag on multi-segment token {self.surface!r}")


@dataclass(frozen=True)
class Sentence:
    tokens: Tuple[SegmentedToken, ...]
    comment: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise ValueError("sentence without tokens")
        if self.comment is not None and "\t" in self.comment:
            # a "#" line with tabs reads back as a token (hashtag surfaces)
            raise ValueError("sentence comments may not contain tabs")

    @property
    def surfaces(self) -> List[str]:
        return [t.surface for t in self.tokens]


@dataclass(frozen=True)
class Corpus:
    sentences: Tuple[Sentence, ...]
    tagset: TagSet
    name: str = field(default="", compare=False)
    meta: Dict[str, object] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))
        for sent in self.sentences:
            for tok in sent.tokens:
                tok.validate(self.tagset)

    def __len__(self) -> int:
        return len(self.sentences)

    def tokens(self) -> Iterable[SegmentedToken]:
        for sent in self.sentences:
            yield from sent.tokens

    def n_tokens(self) -> int:
        return sum(len(s.tokens) for s in self.sentences)

    def subset(self, indices: Sequence[int], name: str = "") -> "Corpus":
        return Corpus(tuple(self.sentences[i] for i in indices), self.tagset, name or self.name)


# ---------------------------------------------------------------------------
# file format


def _parse_token_line(line: str, lineno: int, tagset: TagSet) -> SegmentedToken:
    cols = line.split("\t")
    if len(cols) != 3:
        raise CorpusFormatError(f"expected 3 tab-separated columns, got {len(cols)}", lineno, 1)
    surface, seg_col, tag_col = cols
    seg_colno = len(surface) + 2
    tag_colno = seg_colno + len(seg_col) + 1
    if not surface:
        raise CorpusFormatError("empty surface", lineno, 1)
    tags = tag_col.split("|")
    pieces = seg_col.split("|") if len(tags) > 1 else [seg_col]
    if len(pieces) != len(tags):
        raise CorpusFormatError(f"{len(pieces)} segments but {len(tags)} tags", lineno, tag_colno)
    for tag in tags:
        if tag not in tagset:
            raise CorpusFormatError(f"unknown tag {tag!r}", lineno, tag_colno)
    if len(tags) > 1 and any(tagset.is_special(t) for t in tags):
        raise CorpusFormatError("special tag on a multi-segment token", lineno, tag_colno)
    if "".join(pieces) != surface:
        raise CorpusFormatError(
            f"segments concatenate to {''.join(pieces)!r}, not the surface {surface!r}", lineno, seg_colno
        )
    if any(not p for p in pieces):
        raise CorpusFormatError("empty segment", lineno, seg_colno)
    try:
        return SegmentedToken.from_pieces(pieces, tags)
    except ValueError as exc:
        raise CorpusFormatError(str(exc), lineno, seg_colno) from None


def parse_corpus(text: str, tagset: TagSet, name: str = "") -> Corpus:
    sentences: List[Sentence] = []
    tokens: List[SegmentedToken] = []
    comments: List[str] = []

    def flush():
        nonlocal tokens, comments
        if tokens:
            sentences.append(Sentence(tuple(tokens), "\n".join(comments) if comments else None))
        elif comments:
            raise CorpusFormatError("comment block without a following sentence")
        tokens, comments = [], []

    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw[:-1] if raw.endswith("\r") else raw
        if not line.strip():
            flush()
        elif line.startswith("#") and "\t" not in line:
            if tokens:
                raise CorpusFormatError("comment inside a sentence", lineno, 1)
            body = line[1:]
            comments.append(body[1:] if body.startswith(" ") else body)
        else:
            tokens.append(_parse_token_line(line, lineno, tagset))
    flush()
    return Corpus(tuple(sentences), tagset, name)


def format_token(tok: SegmentedToken) -> str:
    return f"{tok.surface}\t{'|'.join(tok.pieces)}\t{'|'.join(tok.tags)}"


def serialize_corpus(corpus: Corpus) -> str:
    out = io.StringIO()
    for sent in corpus.sentences:
        if sent.comment is not None:
            for line in sent.comment.split("\n"):
                out.write(f"# {line}\n")
        for tok in sent.tokens:
            out.write(format_token(tok) + "\n")
        out.write("\n")
    return out.getvalue()


def read_corpus(path, tagset: Optional[TagSet] = None) -> Corpus:
    """Read a corpus file; with no tag set, one is inferred from the tags present."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if tagset is None:
        tagset = TagSet.infer(_scan_tags(text))
    return parse_corpus(text, tagset, name=str(path))


def _scan_tags(text: str) -> set:
    tags = set()
    for line in text.split("\n"):
        cols = line.rstrip("\r").split("\t")
        if len(cols) == 3 and not line.startswith("#"):
            tags.update(cols[2].split("|"))
    return tags


def write_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_corpus(corpus))


def composed_word_tag(token: SegmentedToken, tagset: TagSet) -> str:
    return tagset.compose(token.tags)


# ---------------------------------------------------------------------------
# statistics


def percent(part: int, whole: int) -> Decimal:
    """``100 * part / whole`` rounded half-up to two decimals (0 when whole is 0)."""
    if whole == 0:
        return Decimal("0.00")
    return (Decimal(part) * 100 / Decimal(whole)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


@dataclass(frozen=True)
class StatsRow:
    tag: str
    count: int
    pct: Decimal
    unique: int
    unique_pct: Decimal


@dataclass
class StatsTable:
    rows: List[StatsRow]
    mixed_rows: List[StatsRow]
    total_tokens: int
    total_unique: int

    def row(self, tag: str) -> StatsRow:
        for r in self.rows + self.mixed_rows:
            if r.tag == tag:
                return r
        raise KeyError(tag)

    def counts(self) -> Dict[str, Tuple[int, int]]:
        """Non-zero rows as ``{key: (count, unique)}``; breakdown keys read ``MIXED:<tags>``."""
        out = {r.tag: (r.count, r.unique) for r in self.rows if r.count}
        out.update({f"{MIXED}:{r.tag}": (r.count, r.unique) for r in self.mixed_rows})
        return out

    def to_text(self) -> str:
        lines = [f"{'Tokens':<14}{'All':>8}{'%':>8}{'Unique':>8}{'Unique %':>10}"]
        lines.append("-" * len(lines[0]))
        for r in self.rows:
            lines.append(f"{r.tag:<14}{r.count:>8}{r.pct:>8}{r.unique:>8}{r.unique_pct:>10}")
        if self.mixed_rows:
            lines.append("-" * len(lines[0]))
            for r in self.mixed_rows:
                lines.append(f"  {r.tag:<12}{r.count:>8}{r.pct:>8}{r.unique:>8}{r.unique_pct:>10}")
        lines.append(f"{'total':<14}{self.total_tokens:>8}{'':>8}{self.total_unique:>8}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["tag", "count", "pct", "unique", "unique_pct"])
        for r in self.rows:
            writer.writerow([r.tag, r.count, r.pct, r.unique, r.unique_pct])
        for r in self.mixed_rows:
            writer.writerow([f"{MIXED}:{r.tag}", r.count, r.pct, r.unique, r.unique_pct])
        return out.getvalue()


def stats_key(token: SegmentedToken) -> str:
    return MIXED if token.is_mixed else token.segments[0].tag


def compute_stats(corpus: Corpus) -> StatsTable:
    counts: Counter = Counter()
    types: Dict[str, set] = {}
    mixed_counts: Counter = Counter()
    mixed_types: Dict[str, set] = {}
    for tok in corpus.tokens():
        key = stats_key(tok)
        counts[key] += 1
        types.setdefault(key, set()).add(tok.surface)
        if tok.is_mixed:
            seq = " ".join(tok.tags)
            mixed_counts[seq] += 1
            mixed_types.setdefault(seq, set()).add(tok.surface)

    total = sum(counts.values())
    total_unique = sum(len(v) for v in types.values())
    order = list(corpus.tagset.all_tags) + [MIXED]
    order += sorted(k for k in counts if k not in order)
    rows = [
        StatsRow(k, counts[k], percent(counts[k], total), len(types.get(k, ())),
                 percent(len(types.get(k, ())), total_unique))
        for k in order
    ]
    n_mixed, u_mixed = counts[MIXED], len(types.get(MIXED, ()))
    seqs = sorted(mixed_counts, key=lambda s: (-mixed_counts[s], s))
    mixed_rows = [
        StatsRow(s, mixed_counts[s], percent(mixed_counts[s], n_mixed), len(mixed_types[s]),
                 percent(len(mixed_types[s]), u_mixed))
        for s in seqs
    ]
    return StatsTable(rows, mixed_rows, total, total_unique)


# ---------------------------------------------------------------------------
# splitting


def split_corpus(corpus: Corpus, n_train: int, seed: int) -> Tuple[Corpus, Corpus]:
    """Seeded sentence-level train/test split; each side keeps corpus order."""
    n = len(corpus)
    if not 0 < n_train < n:
        raise ValueError(f"n_train must lie in (0, {n}), got {n_train}")
    perm = np.random.Generator(np.random.PCG64(seed)).permutation(n)
    train, test = sorted(perm[:n_train].tolist()), sorted(perm[n_train:].tolist())
    return corpus.subset(train, f"{corpus.name}:train"), corpus.subset(test, f"{corpus.name}:test")


def kfold(corpus: Corpus, k: int, seed: int) -> List[Tuple[Corpus, Corpus]]:
    n = len(corpus)
    if not 2 <= k <= n:
        raise ValueError(f"k must lie in [2, {n}], got {k}")
    perm = np.random.Generator(np.random.PCG64(seed)).permutation(n)
    folds = []
    for f, dev in enumerate(np.array_split(perm, k)):
        dev_set = set(dev.tolist())
        train = [i for i in range(n) if i not in dev_set]
        folds.append((corpus.subset(train, f"{corpus.name}:fold{f}:train"),
                      corpus.subset(sorted(dev_set), f"{corpus.name}:fold{f}:dev")))
    return folds
