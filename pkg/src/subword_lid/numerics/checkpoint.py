"""Versioned plain-text checkpoint format.

Layout, one record per line::

    #checkpoint format=1 kind=<model kind>
    #hyper <json object of hyperparameters>
    vocab <name> <json list>
    param <name> <d1>x<d2>... <v1> <v2> ...

Floats are written with 17 significant digits, which round-trips every
IEEE-754 double exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class Checkpoint:
    kind: str
    hyper: Dict[str, object] = field(default_factory=dict)
    vocabs: Dict[str, List] = field(default_factory=dict)
    params: Dict[str, np.ndarray] = field(default_factory=dict)


def _fmt_shape(shape: tuple) -> str:
    return "x".join(str(d) for d in shape) if shape else "scalar"


def _parse_shape(text: str) -> tuple:
    return () if text == "scalar" else tuple(int(d) for d in text.split("x"))


def dumps(ckpt: Checkpoint) -> str:
    lines = [
        f"#checkpoint format={FORMAT_VERSION} kind={ckpt.kind}",
        "#hyper " + json.dumps(ckpt.hyper, sort_keys=True, ensure_ascii=False),
    ]
    for name, items in ckpt.vocabs.items():
        lines.append(f"vocab {name} " + json.dumps(list(items), ensure_ascii=False))
    for name, arr in ckpt.params.items():
        arr = np.asarray(arr, dtype=np.float64)
        values = " ".join("%.17g" % v for v in arr.ravel())
        lines.append(f"param {name} {_fmt_shape(arr.shape)} {values}".rstrip())
    return "\n".join(lines) + "\n"


def loads(text: str) -> Checkpoint:
    lines = text.splitlines()
    if len(lines) < 2 or not lines[0].startswith("#checkpoint "):
        raise CheckpointError("missing checkpoint header")
    header = dict(kv.split("=", 1) for kv in lines[0].split()[1:])
    if int(header.get("format", -1)) != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format {header.get('format')!r}")
    if not lines[1].startswith("#hyper "):
        raise CheckpointError("missing hyperparameter line")
    ckpt = Checkpoint(kind=header["kind"], hyper=json.loads(lines[1][len("#hyper "):]))
    for lineno, line in enumerate(lines[2:], start=3):
        if not line:
            continue
        kind, rest = line.split(" ", 1)
        if kind == "vocab":
            name, payload = rest.split(" ", 1)
            ckpt.vocabs[name] = json.loads(payload)
        elif kind == "param":
            parts = rest.split(" ")
            name, shape = parts[0], _parse_shape(parts[1])
            values = np.array([float(v) for v in parts[2:]], dtype=np.float64)
            if values.size != int(np.prod(shape, dtype=np.int64)):
                raise CheckpointError(f"line {lineno}: {name} has {values.size} values for shape {shape}")
            ckpt.params[name] = values.reshape(shape)
        else:
            raise CheckpointError(f"line {lineno}: unknown record {kind!r}")
    return ckpt


def save(ckpt: Checkpoint, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps(ckpt))


def load(path) -> Checkpoint:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())
