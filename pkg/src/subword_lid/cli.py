"""Command-line entry point: ``subword-lid {train,eval,predict,stats,synth,cv}``.

Settings come from flags and an optional ``--config`` file of ``key=value``
lines (``#`` starts a comment); flags win.  Exit status is 0 on success, 1 on
a runtime failure and 2 on a usage, configuration or input error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import statistics
import sys
from dataclasses import dataclass, fields
from typing import Dict, List, Optional

from . import __version__, metrics
from .corpus import (DE_TR, ES_WIX, Corpus, CorpusFormatError, Sentence, SegmentedToken, TagSet,
                     compute_stats, kfold, read_corpus, serialize_corpus, split_corpus)
from .numerics import checkpoint as ckpt_io
from .synth import SynthConfig, synth_generate
from .systems import SYSTEMS, TrainedSystem, from_checkpoint, train_system

log = logging.getLogger("subword_lid")

OUTPUT_FORMAT = 1
COMMANDS = ("train", "eval", "predict", "stats", "synth", "cv")
TAGSETS = {"DE_TR": DE_TR, "ES_WIX": ES_WIX}
MODEL_FILE = "model.ckpt"


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    system: str = "segrnn"
    train: Optional[str] = None
    test: Optional[str] = None
    model: Optional[str] = None
    out: Optional[str] = None
    seed: Optional[int] = None  # synth defaults to 42, everything else to 1
    epochs: Optional[int] = None
    k: int = 5
    tagset: str = "infer"  # DE_TR, ES_WIX or infer (from the tags in the file)
    n_sentences: int = 1200  # synth only
    n_train: Optional[int] = None  # synth only; default 5/6 of n_sentences

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def header(self, what: str) -> List[str]:
        return [f"subword-lid {what} format={OUTPUT_FORMAT} version={__version__}",
                "config " + json.dumps(self.to_dict(), sort_keys=True)]


_KEYS = {f.name: f for f in fields(RunConfig) if f.name != "command"}


def _coerce(key: str, raw: str):
    if raw.lower() in ("", "none"):
        return None
    if key in ("seed", "epochs", "k", "n_sentences", "n_train"):
        try:
            return int(raw)
        except ValueError:
            raise UsageError(f"{key} must be an integer, got {raw!r}") from None
    return raw


def read_config_file(path: str) -> Dict[str, object]:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    values = {}
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def resolve(args: argparse.Namespace) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    for key in _KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    cfg = RunConfig(args.command, **values)
    if cfg.seed is None:
        cfg.seed = SynthConfig().seed if cfg.command == "synth" else 1
    allowed = SYSTEMS + (("oracle",) if cfg.command == "eval" else ())
    if cfg.system not in allowed:
        raise UsageError(f"unknown system {cfg.system!r}; choose from {', '.join(allowed)}")
    if cfg.tagset != "infer" and cfg.tagset not in TAGSETS:
        raise UsageError(f"unknown tagset {cfg.tagset!r}; choose from infer, {', '.join(TAGSETS)}")
    if cfg.epochs is not None and cfg.epochs < 1:
        raise UsageError("epochs must be >= 1")
    if cfg.k < 2:
        raise UsageError("k must be >= 2")
    return cfg


def _require(cfg: RunConfig, *keys: str) -> None:
    for key in keys:
        if getattr(cfg, key) is None:
            raise UsageError(f"{cfg.command} needs --{key}")


def _read(path: str, tagset: Optional[TagSet]) -> Corpus:
    try:
        return read_corpus(path, tagset)
    except OSError as exc:
        raise UsageError(f"cannot read corpus: {exc}") from None
    except (CorpusFormatError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def _tagset(cfg: RunConfig) -> Optional[TagSet]:
    return None if cfg.tagset == "infer" else TAGSETS[cfg.tagset]


def _load_system(path: str) -> TrainedSystem:
    if os.path.isdir(path):
        path = os.path.join(path, MODEL_FILE)
    try:
        return from_checkpoint(ckpt_io.load(path))
    except OSError as exc:
        raise UsageError(f"cannot read model: {exc}") from None
    except (ckpt_io.CheckpointError, KeyError, ValueError) as exc:
        raise UsageError(f"{path}: not a usable checkpoint ({exc})") from None


def _write(cfg: RunConfig, name: str, text: str) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    path = os.path.join(cfg.out, name)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _commented(cfg: RunConfig, what: str, body: str) -> str:
    return "".join(f"# {line}\n" for line in cfg.header(what)) + body


def _with_header(cfg: RunConfig, what: str, sentences: List[List[SegmentedToken]], tagset: TagSet) -> str:
    """Corpus-format text; the run header rides on the first sentence's comment."""
    if not sentences:
        return ""
    sents = [Sentence(tuple(toks)) for toks in sentences]
    sents[0] = Sentence(sents[0].tokens, "\n".join(cfg.header(what)))
    return serialize_corpus(Corpus(tuple(sents), tagset))


# ---------------------------------------------------------------------------
# commands


def cmd_train(cfg: RunConfig) -> int:
    _require(cfg, "train", "out")
    corpus = _read(cfg.train, _tagset(cfg))
    if corpus.n_tokens() == 0:
        raise UsageError(f"{cfg.train}: no tokens")
    system = train_system(cfg.system, corpus, cfg.seed, cfg.epochs,
                          lambda stage, k, v: log.info("%s %d: %.6f", stage, k, v))
    _write(cfg, MODEL_FILE, ckpt_io.dumps(system.to_checkpoint(cfg.to_dict())))
    _write(cfg, "loss.log", _commented(cfg, "loss log", system.loss_text()))
    return 0


def _evaluate(system: Optional[TrainedSystem], test: Corpus):
    diagnostics: Dict[str, int] = {}
    if system is None:
        pred = [list(s.tokens) for s in test.sentences]
    else:
        pred = system.predict_corpus(test, diagnostics)
    return pred, metrics.evaluate(test, pred, diagnostics, test.tagset.separator)


def _report_text(cfg: RunConfig, name: str, report: metrics.EvalReport) -> str:
    body = [metrics.render_table({name: report}), metrics.render_table({name: report}, mixed=True)]
    if report.mixed_empty:
        body.append("# no gold-mixed tokens: mixed-only scores are reported as 0\n")
    body.append(f"oversegmentation rate\t{report.overseg_rate:.6f}\n"
                f"undersegmentation rate\t{report.underseg_rate:.6f}\n")
    for key, n in sorted(report.diagnostics.items()):
        body.append(f"diagnostic {key}\t{n}\n")
    return _commented(cfg, "report", "\n".join(body))


def cmd_eval(cfg: RunConfig) -> int:
    _require(cfg, "test", "out")
    if cfg.system == "oracle":
        system = None
        tagset = _tagset(cfg)
    else:
        _require(cfg, "model")
        system = _load_system(cfg.model)
        cfg.system = system.name
        tagset = next(iter(system.parts.values())).tagset
    test = _read(cfg.test, tagset)
    pred, report = _evaluate(system, test)
    _write(cfg, "report.txt", _report_text(cfg, cfg.system, report))
    _write(cfg, "report.csv", _commented(cfg, "report", metrics.report_csv({cfg.system: report})))
    _write(cfg, "confusion.csv", _commented(cfg, "confusion", report.confusion.to_csv()))
    _write(cfg, "predictions.txt", _with_header(cfg, "predictions", pred, test.tagset))
    sys.stdout.write(metrics.render_table({cfg.system: report}))
    sys.stdout.write(metrics.render_table({cfg.system: report}, mixed=True))
    return 0


def cmd_predict(cfg: RunConfig) -> int:
    _require(cfg, "model", "test", "out")
    system = _load_system(cfg.model)
    cfg.system = system.name
    try:
        with open(cfg.test, encoding="utf-8") as fh:
            sentences = [line.split() for line in fh.read().splitlines()]
    except OSError as exc:
        raise UsageError(f"cannot read input: {exc}") from None
    diagnostics: Dict[str, int] = {}
    pred = [system.predict(words, diagnostics) for words in sentences if words]
    tagset = next(iter(system.parts.values())).tagset
    _write(cfg, "predictions.txt", _with_header(cfg, "predictions", pred, tagset))
    return 0


def cmd_stats(cfg: RunConfig) -> int:
    path = cfg.train or cfg.test
    if path is None:
        raise UsageError("stats needs --train or --test")
    table = compute_stats(_read(path, _tagset(cfg)))
    sys.stdout.write(table.to_text())
    if cfg.out is not None:
        _write(cfg, "stats.txt", _commented(cfg, "stats", table.to_text()))
        _write(cfg, "stats.csv", _commented(cfg, "stats", table.to_csv()))
    return 0


def cmd_synth(cfg: RunConfig) -> int:
    _require(cfg, "out")
    n_train = cfg.n_train if cfg.n_train is not None else round(cfg.n_sentences * 5 / 6)
    try:
        synth_cfg = dataclasses.replace(SynthConfig(), seed=cfg.seed, n_sentences=cfg.n_sentences)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not 0 < n_train < cfg.n_sentences:
        raise UsageError(f"n_train must lie strictly between 0 and n_sentences ({cfg.n_sentences})")
    corpus = synth_generate(synth_cfg)
    train, test = split_corpus(corpus, n_train, cfg.seed)
    for name, part in (("corpus.txt", corpus), ("train.txt", train), ("test.txt", test)):
        _write(cfg, name, _with_header(cfg, "synthetic corpus", [list(s.tokens) for s in part.sentences],
                                       corpus.tagset))
    header, config_line = cfg.header("gold stats")
    gold = {"header": header, "config": json.loads(config_line[len("config "):]),
            "synth_config": synth_cfg.to_dict(), "rows": corpus.meta["gold_stats"]}
    _write(cfg, "gold_stats.json", json.dumps(gold, sort_keys=True, ensure_ascii=False) + "\n")
    sys.stdout.write(compute_stats(corpus).to_text())
    return 0


_METRIC_NAMES = ("seg_p", "seg_r", "seg_f1", "tag_p", "tag_r", "tag_f1", "char_acc")


def cmd_cv(cfg: RunConfig) -> int:
    _require(cfg, "train", "out")
    corpus = _read(cfg.train, _tagset(cfg))
    if len(corpus) < cfg.k:
        raise UsageError(f"{len(corpus)} sentences cannot be split into {cfg.k} folds")
    rows: Dict[str, List[List[float]]] = {"all": [], "mixed": []}
    for fold, (train, test) in enumerate(kfold(corpus, cfg.k, cfg.seed), start=1):
        log.info("fold %d/%d: %d train, %d test sentences", fold, cfg.k, len(train), len(test))
        system = train_system(cfg.system, train, cfg.seed, cfg.epochs)
        _, report = _evaluate(system, test)
        _write(cfg, f"fold{fold}_report.txt", _report_text(cfg, f"{cfg.system} fold {fold}", report))
        rows["all"].append(report.overall.row())
        rows["mixed"].append(report.mixed.row())
    lines = ["subset\tmetric\tmean\tstdev"]
    for subset, values in rows.items():
        for m, name in enumerate(_METRIC_NAMES):
            col = [v[m] for v in values]
            lines.append(f"{subset}\t{name}\t{statistics.fmean(col):.6f}\t{statistics.stdev(col):.6f}")
    text = "\n".join(lines) + "\n"
    _write(cfg, "cv_summary.tsv", _commented(cfg, "cv summary", text))
    sys.stdout.write(text)
    return 0


_DISPATCH = {"train": cmd_train, "eval": cmd_eval, "predict": cmd_predict,
             "stats": cmd_stats, "synth": cmd_synth, "cv": cmd_cv}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subword-lid", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value settings file")
        p.add_argument("--system", help=f"one of {', '.join(SYSTEMS)} (eval also accepts oracle)")
        p.add_argument("--train", help="training corpus")
        p.add_argument("--test", help="test corpus; for predict, whitespace-tokenised text")
        p.add_argument("--model", help="checkpoint file or training output directory")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--epochs", type=int)
        p.add_argument("--k", type=int, help="number of cross-validation folds")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve(args)
        log.info("resolved config: %s", json.dumps(cfg.to_dict(), sort_keys=True))
        return _DISPATCH[cfg.command](cfg)
    except UsageError as exc:
        print(f"subword-lid {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        log.debug("failure", exc_info=True)
        print(f"subword-lid {args.command}: failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
