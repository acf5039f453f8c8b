import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from subword_lid.baselines import crf, neural
from subword_lid.baselines.pipeline import FALLBACK, pipeline_predict
from subword_lid.corpus import DE_TR, ES_WIX, SegmentedToken, parse_corpus
from subword_lid.numerics import checkpoint as ckpt_io
from subword_lid.numerics.gradcheck import grad_check

TINY = neural.TaggerConfig(char_embedding_dim=3, hidden_dim=2, word_embedding_dim=3, char_hidden_dim=2,
                           epochs=40, dropout_rate=0.0, seed=4)

CORPUS = parse_corpus("""\
danke\tdanke\tDE
Schatzym\tSchatzy|m\tDE|TR

Yerim\tYerim\tTR
Hausum\tHaus|um\tDE|TR
!\t!\tOTHER
""", DE_TR)


def test_char_targets():
    tok = SegmentedToken.from_pieces(["Schatzy", "m"], ["DE", "TR"])
    assert "".join(t[0] for t in neural.char_targets(tok)) == "DDDDDDDT"


class TestRunMerging:
    def test_uniform_tags_give_one_segment(self):
        assert neural.runs_to_token("hola", ["ES"] * 4) == SegmentedToken.single("hola", "ES")

    def test_alternating_runs(self):
        tok = neural.runs_to_token("abcd", ["ES", "ES", "WIX", "ES"])
        assert tok.pieces == ("ab", "c", "d") and tok.tags == ("ES", "WIX", "ES")

    @given(st.lists(st.sampled_from(["ES", "WIX", "OTHER"]), min_size=1, max_size=12))
    def test_neighbours_differ_and_chars_survive(self, tags):
        tok = neural.runs_to_token("x" * len(tags), tags)
        assert tok.char_tags() == tags
        assert all(a != b for a, b in zip(tok.tags, tok.tags[1:]))


class TestGradients:
    def test_char_tagger(self):
        model = neural.CharTaggerModel("Schatzym", DE_TR, TINY)
        toks = list(CORPUS.sentences[0].tokens)
        assert grad_check(lambda: neural.char_tagger_loss(model, toks), model.parameters()) < 1e-4

    def test_word_tagger(self):
        model = neural.WordTaggerModel(["danke"], "Schatzymdanke", ["DE", "TR", "OTHER", "DE_TR"], DE_TR, TINY)
        toks = list(CORPUS.sentences[0].tokens)
        assert grad_check(lambda: neural.word_tagger_loss(model, toks), model.parameters()) < 1e-4


@pytest.fixture(scope="module")
def char_model():
    return neural.char_tagger_train(CORPUS, TINY)


@pytest.fixture(scope="module")
def word_model():
    return neural.word_tagger_train(CORPUS, TINY)


class TestCharTagger:
    def test_loss_decreases(self, char_model):
        history = char_model[1]
        assert len(history) == TINY.epochs and history[-1] < history[0]

    @given(st.text(st.sampled_from(list("Schatzymdk!q")), min_size=1, max_size=9))
    @settings(max_examples=40)
    def test_predictions_tile_the_surface(self, char_model, word):
        tok = neural.char_tagger_predict(char_model[0], word)
        assert "".join(tok.pieces) == word
        assert all(a != b for a, b in zip(tok.tags, tok.tags[1:]))

    def test_batch_equals_single(self, char_model):
        words = ["Schatzym", "da", "q!"]
        assert neural.char_tagger_predict_batch(char_model[0], words) == [
            neural.char_tagger_predict(char_model[0], w) for w in words]
        assert neural.char_tagger_predict_batch(char_model[0], []) == []

    def test_checkpoint_round_trip(self, char_model):
        model = char_model[0]
        text = ckpt_io.dumps(neural.char_tagger_to_checkpoint(model))
        back = neural.char_tagger_from_checkpoint(ckpt_io.loads(text))
        assert ckpt_io.dumps(neural.char_tagger_to_checkpoint(back)) == text
        with pytest.raises(ckpt_io.CheckpointError):
            neural.word_tagger_from_checkpoint(ckpt_io.loads(text))


class TestWordTagger:
    def test_labels(self, word_model):
        model = word_model[0]
        assert neural.word_label(CORPUS.sentences[0].tokens[1], DE_TR) == "DE_TR"
        assert neural.word_label(CORPUS.sentences[0].tokens[0], DE_TR) == "DE"
        assert "DE_TR" in model.labels and set(DE_TR.all_tags) <= set(model.labels)

    def test_unknown_word_distribution(self, word_model):
        dist = neural.word_tagger_distribution(word_model[0], ["zzzz", "danke"])
        assert np.allclose(dist.sum(axis=1), 1.0, atol=1e-9)

    def test_singletons_are_replaced_at_the_configured_rate(self, word_model):
        model = word_model[0]
        rng = np.random.default_rng(0)
        words = ["danke"] * 4000
        ids = model.word_ids(words, rng, frozenset(["danke"]))
        assert abs((ids == 0).mean() - TINY.unk_replace_rate) < 0.03
        assert (model.word_ids(words, rng) != 0).all()

    def test_empty_sentence(self, word_model):
        with pytest.raises(ValueError):
            neural.word_tagger_predict(word_model[0], [])

    def test_checkpoint_round_trip(self, word_model):
        model = word_model[0]
        back = neural.word_tagger_from_checkpoint(ckpt_io.loads(ckpt_io.dumps(neural.word_tagger_to_checkpoint(model))))
        words = ["Hausum", "zz", "!"]
        assert np.array_equal(neural.word_tagger_distribution(back, words), neural.word_tagger_distribution(model, words))


def test_config_validation():
    with pytest.raises(ValueError):
        neural.TaggerConfig(hidden_dim=0)
    with pytest.raises(ValueError):
        neural.TaggerConfig(dropout_rate=1.0)


@pytest.fixture(scope="module")
def segmenter():
    corpus = parse_corpus("muxa\tmu|xa\tWIX|ES\nhola\thola\tES\n", ES_WIX)
    return crf.crf_segmenter_train(corpus)


class TestPipeline:
    def test_monolingual_tag_skips_segmenter(self):
        class Boom:
            tagset = ES_WIX

            def segment(self, *_):
                raise AssertionError("segmenter called")

        out = pipeline_predict(lambda ws: ["ES", "OTHER"], Boom(), ["hola", "!"])
        assert out == [SegmentedToken.single("hola", "ES"), SegmentedToken.single("!", "OTHER")]

    def test_composite_tag_is_split(self, segmenter):
        (tok,) = pipeline_predict(lambda ws: ["WIX_ES"], segmenter, ["muxa"])
        assert tok.tags == ("WIX", "ES") and "".join(tok.pieces) == "muxa"

    def test_unrealisable_tag_falls_back(self, segmenter):
        diag = {}
        out = pipeline_predict(lambda ws: ["WIX_ES_WIX", "WIX_ES"], segmenter, ["ab", "c"], diag)
        assert out == [SegmentedToken.single("ab", "WIX"), SegmentedToken.single("c", "WIX")]
        assert diag[FALLBACK] == 2

    def test_length_mismatch(self, segmenter):
        with pytest.raises(ValueError):
            pipeline_predict(lambda ws: [], segmenter, ["a"])
