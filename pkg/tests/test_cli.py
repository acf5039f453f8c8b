import csv
import json

import pytest

from subword_lid.cli import main
from subword_lid.corpus import read_corpus


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("synth")
    (root / "small.cfg").write_text("# tiny corpus for fast runs\nn_sentences = 60\nn_train=48\n")
    assert main(["synth", "--config", str(root / "small.cfg"), "--out", str(root / "data"), "--seed", "5"]) == 0
    return root / "data"


def csv_rows(path):
    lines = [line for line in path.read_text().splitlines() if not line.startswith("#")]
    return list(csv.DictReader(lines))


class TestSynthAndStats:
    def test_files_and_split(self, synth_dir):
        train, test = read_corpus(synth_dir / "train.txt"), read_corpus(synth_dir / "test.txt")
        assert (len(train), len(test)) == (48, 12)
        assert len(read_corpus(synth_dir / "corpus.txt")) == 60

    def test_stats_match_generator_gold_stats(self, synth_dir, tmp_path):
        assert main(["stats", "--train", str(synth_dir / "corpus.txt"), "--out", str(tmp_path)]) == 0
        gold = json.loads((synth_dir / "gold_stats.json").read_text())["rows"]
        computed = {r["tag"]: (int(r["count"]), int(r["unique"])) for r in csv_rows(tmp_path / "stats.csv")
                    if int(r["count"])}
        assert computed == {k: (v["count"], v["unique"]) for k, v in gold.items()}

    def test_outputs_carry_header(self, synth_dir):
        first = (synth_dir / "train.txt").read_text().splitlines()[:2]
        assert first[0].startswith("# subword-lid synthetic corpus format=1 version=")
        assert json.loads(first[1][len("# config "):])["seed"] == 5

    def test_default_seed_is_42(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("n_sentences=6\n")
        assert main(["synth", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        header = (tmp_path / "o" / "corpus.txt").read_text().splitlines()[1]
        assert json.loads(header[len("# config "):])["seed"] == 42


@pytest.fixture(scope="module")
def trained(synth_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("model")
    assert main(["train", "--system", "crf_pipeline", "--train", str(synth_dir / "train.txt"),
                 "--out", str(out)]) == 0
    return out


class TestEval:
    def test_oracle_is_perfect(self, synth_dir, tmp_path):
        assert main(["eval", "--system", "oracle", "--test", str(synth_dir / "test.txt"), "--out", str(tmp_path)]) == 0
        rows = csv_rows(tmp_path / "report.csv")
        overall = next(r for r in rows if r["subset"] == "all")
        for key in ("seg_p", "seg_r", "seg_f1", "tag_p", "tag_r", "tag_f1", "char_acc"):
            assert float(overall[key]) == 1.0
        assert float(overall["overseg_rate"]) == float(overall["underseg_rate"]) == 0.0
        assert "Segmentation" in (tmp_path / "report.txt").read_text()
        assert (tmp_path / "confusion.csv").exists()

    def test_train_then_eval(self, synth_dir, trained, tmp_path):
        assert main(["eval", "--model", str(trained), "--test", str(synth_dir / "test.txt"), "--out", str(tmp_path)]) == 0
        overall = next(r for r in csv_rows(tmp_path / "report.csv") if r["subset"] == "all")
        assert overall["system"] == "crf_pipeline" and float(overall["char_acc"]) > 0.5
        pred = read_corpus(tmp_path / "predictions.txt")
        gold = read_corpus(synth_dir / "test.txt")
        assert [s.surfaces for s in pred.sentences] == [s.surfaces for s in gold.sentences]

    def test_predict(self, trained, tmp_path):
        (tmp_path / "in.txt").write_text("kadu ɨxö , bako\n\nmer !\n")
        assert main(["predict", "--model", str(trained / "model.ckpt"), "--test", str(tmp_path / "in.txt"),
                     "--out", str(tmp_path / "o")]) == 0
        pred = read_corpus(tmp_path / "o" / "predictions.txt")
        assert [s.surfaces for s in pred.sentences] == [["kadu", "ɨxö", ",", "bako"], ["mer", "!"]]

    def test_predict_empty_input(self, trained, tmp_path):
        (tmp_path / "in.txt").write_text("")
        assert main(["predict", "--model", str(trained), "--test", str(tmp_path / "in.txt"),
                     "--out", str(tmp_path / "o")]) == 0
        assert (tmp_path / "o" / "predictions.txt").read_text() == ""


class TestErrors:
    def test_missing_corpus_leaves_no_output(self, tmp_path):
        out = tmp_path / "never"
        assert main(["train", "--train", str(tmp_path / "missing.txt"), "--out", str(out)]) == 2
        assert not out.exists()

    def test_unknown_config_key(self, tmp_path):
        (tmp_path / "c.cfg").write_text("learning_rate=3\n")
        assert main(["train", "--config", str(tmp_path / "c.cfg"), "--train", "x", "--out", str(tmp_path)]) == 2

    @pytest.mark.parametrize("argv", [
        ["train", "--system", "hmm", "--train", "x", "--out", "y"],
        ["eval", "--test", "x"],
        ["train", "--epochs", "0", "--train", "x", "--out", "y"],
        ["cv", "--k", "1", "--train", "x", "--out", "y"],
        ["frobnicate"],
    ])
    def test_usage_errors(self, argv, tmp_path, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(argv) == 2

    def test_malformed_corpus(self, tmp_path):
        (tmp_path / "bad.txt").write_text("ab\ta|c\tDE|TR\n")
        assert main(["stats", "--train", str(tmp_path / "bad.txt")]) == 2

    def test_not_a_checkpoint(self, tmp_path):
        (tmp_path / "m.ckpt").write_text("hello\n")
        (tmp_path / "in.txt").write_text("a b\n")
        assert main(["predict", "--model", str(tmp_path / "m.ckpt"), "--test", str(tmp_path / "in.txt"),
                     "--out", str(tmp_path / "o")]) == 2


def test_flags_override_config_file(synth_dir, tmp_path):
    (tmp_path / "c.cfg").write_text("system = segrnn\nepochs = 7\n")
    out = tmp_path / "o"
    assert main(["train", "--config", str(tmp_path / "c.cfg"), "--system", "crf_pipeline",
                 "--train", str(synth_dir / "train.txt"), "--out", str(out)]) == 0
    header = (out / "loss.log").read_text().splitlines()[1]
    assert json.loads(header[len("# config "):])["system"] == "crf_pipeline"


def test_train_is_deterministic(synth_dir, tmp_path):
    argv = ["train", "--system", "segrnn", "--epochs", "1", "--train", str(synth_dir / "train.txt"),
            "--out", str(tmp_path)]
    assert main(argv) == 0
    first = [(tmp_path / f).read_bytes() for f in ("loss.log", "model.ckpt")]
    assert main(argv) == 0
    assert [(tmp_path / f).read_bytes() for f in ("loss.log", "model.ckpt")] == first


def test_cross_validation(synth_dir, tmp_path):
    assert main(["cv", "--system", "crf_pipeline", "--k", "3", "--train", str(synth_dir / "train.txt"),
                 "--out", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.glob("fold*_report.txt")) == [f"fold{i}_report.txt" for i in (1, 2, 3)]
    body = [line for line in (tmp_path / "cv_summary.tsv").read_text().splitlines() if not line.startswith("#")]
    assert body[0] == "subset\tmetric\tmean\tstdev" and len(body) == 15


def test_gold_stats_carry_header(synth_dir):
    gold = json.loads((synth_dir / "gold_stats.json").read_text())
    assert gold["header"].startswith("subword-lid gold stats format=1")
    assert gold["config"]["seed"] == gold["synth_config"]["seed"] == 5


DE_TR_TRAIN = """\
Yerim\tYerim\tTR
seni\tseni\tTR
,\t,\tOTHER
danke\tdanke\tDE
Schatzym\tSchatzy|m\tDE|TR

Hausum\tHaus|um\tDE|TR
çok\tçok\tTR
schön\tschön\tDE
!\t!\tOTHER
"""


def test_predict_splits_mixed_word(tmp_path):
    (tmp_path / "train.txt").write_text(DE_TR_TRAIN, encoding="utf-8")
    (tmp_path / "in.txt").write_text("Yerim seni , danke Schatzym\n", encoding="utf-8")
    assert main(["train", "--system", "segrnn", "--epochs", "40", "--train", str(tmp_path / "train.txt"),
                 "--out", str(tmp_path / "m")]) == 0
    assert main(["predict", "--model", str(tmp_path / "m"), "--test", str(tmp_path / "in.txt"),
                 "--out", str(tmp_path / "p")]) == 0
    (sent,) = read_corpus(tmp_path / "p" / "predictions.txt").sentences
    schatzym = sent.tokens[-1]
    assert schatzym.pieces == ("Schatzy", "m") and schatzym.tags == ("DE", "TR")
