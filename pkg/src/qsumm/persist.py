"""Versioned JSON documents for trained models.

Every document carries ``format``, ``version`` and ``kind`` (``linear``,
``neural`` or ``policy``) plus the tf.idf model the weights were trained
against. Arrays are stored as decimal lists; Python's float repr makes the
round trip exact.
"""

from __future__ import annotations

import json
from dataclasses import asdict

import numpy as np

from .errors import FormatError
from .features import EmbeddingTable, TfidfModel
from .models import LinearHyper, LinearModel, NeuralModel, NeuralParams
from .policy import PolicyModel, PolicyParams

FORMAT = "qsumm-model"
VERSION = 1


def _arr(a) -> list:
    return np.asarray(a, dtype=float).tolist()


def model_document(model, tfidf: TfidfModel | None = None, config: dict | None = None) -> dict:
    doc = {"format": FORMAT, "version": VERSION}
    if isinstance(model, LinearModel):
        doc.update(kind="linear", task=model.task, hyper=asdict(model.hyper), weights=_arr(model.weights), bias=float(model.bias))
    elif isinstance(model, NeuralModel):
        p = model.params
        doc.update(kind="neural", task=p.task, encoder=p.encoder, d=p.d, h=p.h, W1=_arr(p.W1), b1=_arr(p.b1), w2=_arr(p.w2), b2=float(p.b2))
    elif isinstance(model, PolicyModel):
        p = model.params
        doc.update(kind="policy", feature_mode=p.feature_mode, h=len(p.b1), W1=_arr(p.W1), b1=_arr(p.b1), w2=_arr(p.w2), b2=float(p.b2))
        tfidf = tfidf or model.tfidf
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    doc["tfidf"] = tfidf.to_json() if tfidf is not None else None
    doc["config"] = dict(sorted((config or {}).items()))
    return doc


def save_model(path, model, tfidf: TfidfModel | None = None, config: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_document(model, tfidf, config), fh)
        fh.write("\n")


def model_from_document(doc: dict, table: EmbeddingTable | None = None):
    """Returns ``(model, tfidf)``. Neural models need the embedding table they were trained with."""
    if doc.get("format") != FORMAT or doc.get("version") != VERSION:
        raise FormatError(f"not a version-{VERSION} {FORMAT} document")
    tfidf = TfidfModel.from_json(doc["tfidf"]) if doc.get("tfidf") else None
    kind = doc.get("kind")
    try:
        if kind == "linear":
            model = LinearModel(doc["task"], np.array(doc["weights"]), float(doc["bias"]), LinearHyper(**doc["hyper"]))
        elif kind == "neural":
            if table is None:
                raise FormatError("neural models need word embeddings to be loaded")
            params = NeuralParams(doc["task"], np.array(doc["W1"]).reshape(doc["h"], 2 * doc["d"] + 1), np.array(doc["b1"]), np.array(doc["w2"]), float(doc["b2"]), doc["encoder"])
            if params.d != table.dim:
                raise FormatError(f"model expects {params.d}-dim embeddings, table has {table.dim}")
            model = NeuralModel(params, table)
        elif kind == "policy":
            W1 = np.array(doc["W1"]).reshape(doc["h"], -1)
            params = PolicyParams(W1, np.array(doc["b1"]), np.array(doc["w2"]), float(doc["b2"]), doc["feature_mode"])
            model = PolicyModel(params, tfidf, table)
        else:
            raise FormatError(f"unknown model kind {kind!r}")
    except KeyError as exc:
        raise FormatError(f"model document missing field {exc.args[0]!r}") from None
    return model, tfidf


def load_model(path, table: EmbeddingTable | None = None):
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid model JSON: {exc.msg}", line=exc.lineno) from None
    return model_from_document(doc, table)
