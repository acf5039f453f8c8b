"""Oracle-labelled synthetic code-switched corpora.

Two artificial languages with disjoint alphabets each get a root lexicon, an
affix lexicon and a short list of names.  A token is mixed with probability
``mixed_token_rate``: a root from one language carrying an affix (or, for
``three_part_rate`` of mixed tokens, a prefix and a suffix) from the other.
The gold segmentation is known by construction.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import asdict, dataclass
from typing import Dict, List, Tuple

import numpy as np

from .corpus import MIXED, Corpus, Segment, SegmentedToken, Sentence, TagSet


@dataclass(frozen=True)
class SynthConfig:
    tag_a: str = "LA"
    tag_b: str = "LB"
    alphabet_a: str = "aeioubdgklmnprst"
    alphabet_b: str = "ɨäöüxwzhjyqcfvñ"
    roots_a: int = 300
    roots_b: int = 300
    affixes_a: int = 20
    affixes_b: int = 20
    names_a: int = 30
    names_b: int = 30
    root_length: Tuple[int, int] = (3, 7)
    affix_length: Tuple[int, int] = (1, 3)
    own_affix_rate: float = 0.4
    mixed_token_rate: float = 0.10
    three_part_rate: float = 0.1
    name_rate: float = 0.04
    other_rate: float = 0.12
    matrix_language_weight: float = 0.75
    sentence_length: Tuple[int, int] = (3, 12)
    n_sentences: int = 1200
    seed: int = 42

    def __post_init__(self):
        if set(self.alphabet_a) & set(self.alphabet_b):
            raise ValueError("alphabets must be disjoint")
        if set(self.alphabet_a.upper()) & set(self.alphabet_b.upper()):
            raise ValueError("upper-cased alphabets must be disjoint")
        for rate in (self.mixed_token_rate, self.three_part_rate, self.name_rate,
                     self.other_rate, self.own_affix_rate, self.matrix_language_weight):
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"rate {rate} outside [0, 1]")
        if self.name_rate + self.other_rate > 1.0:
            raise ValueError("name_rate + other_rate exceeds 1")
        lo, hi = self.sentence_length
        if not 1 <= lo <= hi:
            raise ValueError("sentence_length must satisfy 1 <= min <= max")
        if self.n_sentences < 0:
            raise ValueError("n_sentences must be non-negative")

    def tagset(self) -> TagSet:
        return TagSet((self.tag_a, self.tag_b), ("OTHER", f"NE.{self.tag_a}", f"NE.{self.tag_b}"))

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


PUNCTUATION = (".", ",", "!", "?", ":", ";", "...", "!!", "(", ")", "@username", ":)")


def _lexicon(rng: np.random.Generator, alphabet: str, size: int, length: Tuple[int, int]) -> List[str]:
    chars = list(alphabet)
    words: List[str] = []
    seen = set()
    attempts = 0
    while len(words) < size:
        n = int(rng.integers(length[0], length[1] + 1))
        w = "".join(rng.choice(chars, size=n))
        attempts += 1
        if w not in seen or attempts > 50 * size:
            seen.add(w)
            words.append(w)
    return words


def synth_generate(config: SynthConfig = SynthConfig()) -> Corpus:
    """Sample a corpus; ``corpus.meta['gold_stats']`` records per-row token and type counts
    tallied during generation."""
    rng = np.random.Generator(np.random.PCG64(config.seed))
    langs = (config.tag_a, config.tag_b)
    alphabets = (config.alphabet_a, config.alphabet_b)
    roots = (_lexicon(rng, config.alphabet_a, config.roots_a, config.root_length),
             _lexicon(rng, config.alphabet_b, config.roots_b, config.root_length))
    affixes = (_lexicon(rng, config.alphabet_a, config.affixes_a, config.affix_length),
               _lexicon(rng, config.alphabet_b, config.affixes_b, config.affix_length))
    names = tuple([w.capitalize() for w in _lexicon(rng, alphabets[k], n, config.root_length)]
                  for k, n in ((0, config.names_a), (1, config.names_b)))

    counts: Counter = Counter()
    types: Dict[str, set] = {}

    def tally(key: str, surface: str) -> None:
        counts[key] += 1
        types.setdefault(key, set()).add(surface)

    def pick(items):
        return items[int(rng.integers(len(items)))]

    sentences = []
    for _ in range(config.n_sentences):
        matrix = int(rng.integers(2))
        n_tokens = int(rng.integers(config.sentence_length[0], config.sentence_length[1] + 1))
        tokens = []
        for _ in range(n_tokens):
            lang = matrix if rng.random() < config.matrix_language_weight else 1 - matrix
            if rng.random() < config.mixed_token_rate:
                other = 1 - lang
                root = pick(roots[lang])
                if rng.random() < config.three_part_rate:
                    pieces = [pick(affixes[other]), root, pick(affixes[other])]
                    tags = [langs[other], langs[lang], langs[other]]
                else:
                    pieces = [root, pick(affixes[other])]
                    tags = [langs[lang], langs[other]]
                tok = SegmentedToken.from_pieces(pieces, tags)
                tally(MIXED, tok.surface)
                tally("%s:%s" % (MIXED, " ".join(tags)), tok.surface)
            else:
                u = rng.random()
                if u < config.other_rate:
                    surface = pick(PUNCTUATION) if rng.random() < 0.8 else str(int(rng.integers(1, 2000)))
                    tag = "OTHER"
                elif u < config.other_rate + config.name_rate:
                    surface, tag = pick(names[lang]), f"NE.{langs[lang]}"
                else:
                    surface = pick(roots[lang])
                    if rng.random() < config.own_affix_rate:
                        surface += pick(affixes[lang])
                    tag = langs[lang]
                tok = SegmentedToken(surface, (Segment(0, len(surface), tag),))
                tally(tag, surface)
            tokens.append(tok)
        sentences.append(Sentence(tuple(tokens)))

    gold = {key: {"count": counts[key], "unique": len(types[key])} for key in sorted(counts)}
    return Corpus(tuple(sentences), config.tagset(), name=f"synth-seed{config.seed}",
                  meta={"config": config.to_dict(), "gold_stats": gold})
