import math
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subword_lid.corpus import compute_stats, parse_corpus, serialize_corpus
from subword_lid.synth import SynthConfig, synth_generate

SMALL = SynthConfig(n_sentences=60)


def test_deterministic_under_seed():
    assert synth_generate(SMALL) == synth_generate(SMALL)
    assert synth_generate(SMALL) != synth_generate(replace(SMALL, seed=43))


def test_no_mixing_means_single_segments():
    corpus = synth_generate(replace(SMALL, mixed_token_rate=0.0))
    assert not any(tok.is_mixed for tok in corpus.tokens())


def test_mixed_count_within_binomial_three_sigma():
    # about 10000 tokens at rate 0.10: mean 1000, sd 30
    corpus = synth_generate(SynthConfig(n_sentences=1340, seed=7))
    n = corpus.n_tokens()
    mixed = sum(tok.is_mixed for tok in corpus.tokens())
    assert 9500 <= n <= 10500
    assert abs(mixed - 0.1 * n) <= 3 * math.sqrt(n * 0.1 * 0.9)
    assert 850 <= mixed <= 1150


def test_mixed_tokens_switch_at_morpheme_boundary():
    cfg = SynthConfig(n_sentences=200)
    corpus = synth_generate(cfg)
    alpha = {cfg.tag_a: set(cfg.alphabet_a), cfg.tag_b: set(cfg.alphabet_b)}
    for tok in corpus.tokens():
        if tok.is_mixed:
            for piece, tag in zip(tok.pieces, tok.tags):
                assert set(piece) <= alpha[tag]


@settings(max_examples=25)
@given(st.integers(0, 2**63 - 1), st.floats(0, 1), st.integers(0, 40))
def test_gold_stats_match_computed_stats(seed, rate, n):
    corpus = synth_generate(SynthConfig(seed=seed, mixed_token_rate=rate, n_sentences=n))
    gold = {k: (v["count"], v["unique"]) for k, v in corpus.meta["gold_stats"].items()}
    assert gold == compute_stats(corpus).counts()
    assert parse_corpus(serialize_corpus(corpus), corpus.tagset) == corpus


@pytest.mark.parametrize("kwargs", [
    {"alphabet_b": "xa"}, {"mixed_token_rate": 1.5}, {"sentence_length": (0, 3)},
    {"name_rate": 0.6, "other_rate": 0.6}, {"n_sentences": -1},
])
def test_invalid_configs(kwargs):
    with pytest.raises(ValueError):
        SynthConfig(**kwargs)
