"""tf.idf model, word embeddings and the per-sentence feature vector of the linear models."""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import Sample, tokenize
from .errors import ArgumentError, FormatError

logger = logging.getLogger(__name__)

N_DENSE = 20
TFIDF_FORMAT_VERSION = 1


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray  # int64, strictly increasing
    values: np.ndarray  # float64, no zeros

    @classmethod
    def empty(cls) -> "SparseVector":
        return cls(np.zeros(0, dtype=np.int64), np.zeros(0))

    def __len__(self):
        return len(self.indices)

    def as_dict(self) -> dict[int, float]:
        return dict(zip(self.indices.tolist(), self.values.tolist()))

    def to_dense(self, size: int) -> np.ndarray:
        out = np.zeros(size)
        out[self.indices] = self.values
        return out

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: dict[str, int]
    idf: np.ndarray
    n_docs: int

    def __len__(self):
        return len(self.vocabulary)

    def to_json(self) -> dict:
        terms = sorted(self.vocabulary, key=self.vocabulary.__getitem__)
        return {
            "format": "qsumm-tfidf",
            "version": TFIDF_FORMAT_VERSION,
            "n_docs": self.n_docs,
            "terms": terms,
            "idf": [float(self.idf[self.vocabulary[t]]) for t in terms],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "TfidfModel":
        if doc.get("format") != "qsumm-tfidf" or doc.get("version") != TFIDF_FORMAT_VERSION:
            raise FormatError("not a version-1 qsumm tf.idf document")
        terms = doc["terms"]
        return cls({t: i for i, t in enumerate(terms)}, np.asarray(doc["idf"], dtype=float), int(doc["n_docs"]))

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def fit_tfidf(documents: Sequence[Sequence[str]]) -> TfidfModel:
    """Fit idf = ln(n_docs / df) over token-list documents.

    Vocabulary columns are assigned in first-appearance order.
    """
    if not documents:
        raise ArgumentError("fit_tfidf needs at least one document")
    df: Counter = Counter()
    vocab: dict[str, int] = {}
    for doc in documents:
        for tok in dict.fromkeys(doc):
            if tok not in vocab:
                vocab[tok] = len(vocab)
            df[tok] += 1
    n = len(documents)
    idf = np.array([math.log(n / df[t]) for t in vocab], dtype=float)
    return TfidfModel(vocab, idf, n)


def vectorize(model: TfidfModel, tokens: Sequence[str]) -> SparseVector:
    counts: dict[int, int] = {}
    for tok in tokens:
        col = model.vocabulary.get(tok)
        if col is not None:
            counts[col] = counts.get(col, 0) + 1
    if not counts:
        return SparseVector.empty()
    idx = np.array(sorted(counts), dtype=np.int64)
    vals = np.array([counts[i] for i in idx.tolist()], dtype=float) * model.idf[idx]
    keep = vals != 0
    return SparseVector(idx[keep], vals[keep])


def cosine(u, v) -> float:
    """Cosine similarity of two sparse or dense vectors; 0 when either is zero."""
    if isinstance(u, SparseVector) and isinstance(v, SparseVector):
        nu, nv = u.norm(), v.norm()
        if nu == 0 or nv == 0:
            return 0.0
        _, iu, iv = np.intersect1d(u.indices, v.indices, assume_unique=True, return_indices=True)
        dot = float(np.dot(u.values[iu], v.values[iv]))
        return dot / (nu * nv)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0 or nv == 0:
        return 0.0
    return float(np.dot(u, v)) / (nu * nv)


@dataclass(frozen=True)
class EmbeddingTable:
    dim: int
    vectors: dict[str, np.ndarray] = field(repr=False)

    def __post_init__(self):
        if self.dim <= 0:
            raise ArgumentError("embedding dimension must be positive")

    def __contains__(self, token):
        return token in self.vectors

    def __getitem__(self, token):
        return self.vectors[token]


def load_embeddings(path) -> EmbeddingTable:
    """Read a word2vec-style text file (optional ``count dim`` header line)."""
    vectors: dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
                dim = int(parts[1])
                continue
            token, values = parts[0], parts[1:]
            if dim is None:
                dim = len(values)
            if len(values) != dim:
                raise FormatError(f"expected {dim} values, found {len(values)}", line=lineno)
            try:
                vec = np.array([float(v) for v in values])
            except ValueError:
                raise FormatError("non-numeric vector component", line=lineno) from None
            if token in vectors:
                logger.warning("duplicate embedding for %r at line %d; keeping the last", token, lineno)
            vectors[token] = vec
    if not vectors or not dim:
        raise FormatError(f"no vectors found in {path}")
    return EmbeddingTable(dim, vectors)


def sum_embedding(table: EmbeddingTable, tokens: Sequence[str]) -> np.ndarray:
    out = np.zeros(table.dim)
    for tok in tokens:
        vec = table.vectors.get(tok)
        if vec is not None:
            out += vec
    return out


def mean_embedding(table: EmbeddingTable, tokens: Sequence[str]) -> np.ndarray:
    vecs = [table.vectors[t] for t in tokens if t in table.vectors]
    if not vecs:
        return np.zeros(table.dim)
    return np.sum(vecs, axis=0) / len(vecs)


def _median(values: np.ndarray) -> float:
    return float(np.median(values))


def _unweighted_block(sims: np.ndarray) -> list[float]:
    desc = np.sort(sims)[::-1]
    asc = desc[::-1]
    return [
        float(np.mean(sims)),
        _median(sims),
        float(desc[0]),
        float(asc[0]),
        float(np.mean(desc[:2])),
        float(np.mean(desc[:3])),
        float(np.mean(asc[:2])),
        float(np.mean(asc[:3])),
    ]


def _weighted_median(sims: np.ndarray, weights: np.ndarray) -> float:
    order = np.argsort(sims, kind="stable")
    s, w = sims[order], weights[order]
    half = w.sum() / 2
    cum = np.cumsum(w)
    i = int(np.searchsorted(cum, half))
    if i < len(s) - 1 and math.isclose(cum[i], half, rel_tol=1e-12, abs_tol=0.0):
        return float((s[i] + s[i + 1]) / 2)
    return float(s[i])


def _weighted_top(sims, weights, k) -> float:
    return float(np.dot(sims[:k], weights[:k]) / weights[:k].sum())


def _weighted_block(sims: np.ndarray, weights: np.ndarray) -> list[float]:
    keep = weights > 0
    if not keep.any():
        return [0.0] * 8
    sims, weights = sims[keep], weights[keep]
    order = np.argsort(-sims, kind="stable")
    ds, dw = sims[order], weights[order]
    as_, aw = ds[::-1], dw[::-1]
    return [
        float(np.dot(sims, weights) / weights.sum()),
        _weighted_median(sims, weights),
        float(ds[0]),
        float(as_[0]),
        _weighted_top(ds, dw, 2),
        _weighted_top(ds, dw, 3),
        _weighted_top(as_, aw, 2),
        _weighted_top(as_, aw, 3),
    ]


def _token_weights(tfidf: TfidfModel, tokens: Sequence[str]) -> dict[str, float]:
    counts = Counter(tokens)
    return {
        t: c * float(tfidf.idf[tfidf.vocabulary[t]]) if t in tfidf.vocabulary else 0.0
        for t, c in counts.items()
    }


def pairwise_stats(q_tokens, s_tokens, table: EmbeddingTable, tfidf: TfidfModel) -> list[float]:
    """Summary statistics of word-to-word embedding cosines between question and sentence.

    Pairs range over distinct in-vocabulary token types. The first eight
    values are unweighted (mean, median, max, min, mean of top 2 / top 3,
    mean of bottom 2 / bottom 3); the last eight repeat them with each pair
    weighted by the product of the two tokens' tf.idf weights in their own
    texts, ignoring zero-weight pairs.
    """
    q_types = [t for t in dict.fromkeys(q_tokens) if t in table]
    s_types = [t for t in dict.fromkeys(s_tokens) if t in table]
    if not q_types or not s_types:
        return [0.0] * 16
    qw = _token_weights(tfidf, q_tokens)
    sw = _token_weights(tfidf, s_tokens)
    sims, weights = [], []
    for q in q_types:
        for s in s_types:
            sims.append(cosine(table[q], table[s]))
            weights.append(qw[q] * sw[s])
    sims_a = np.array(sims)
    return _unweighted_block(sims_a) + _weighted_block(sims_a, np.array(weights))


@dataclass(frozen=True)
class FeatureVector:
    tfidf: SparseVector
    dense: np.ndarray

    def to_dense(self, vocab_size: int) -> np.ndarray:
        return np.concatenate([self.tfidf.to_dense(vocab_size), self.dense])


@dataclass(frozen=True)
class FeatureContext:
    """Fitted state needed to featurise sentences: tf.idf, embeddings, stopwords."""

    tfidf: TfidfModel
    table: EmbeddingTable | None = None
    stopwords: frozenset = frozenset()

    def filter(self, tokens):
        return _filtered(tokens, self.stopwords)


def fit_context(samples: Sequence[Sample], table=None, stopwords=frozenset()) -> FeatureContext:
    """Fit tf.idf on every sentence of ``samples`` (one sentence = one document)."""
    stop = frozenset(stopwords)
    docs = [[t for t in s.tokens if t not in stop] for sample in samples for s in sample.sentences]
    if not docs:
        docs = [[]]
    return FeatureContext(fit_tfidf(docs), table, stop)


def _filtered(tokens, stop):
    return [t for t in tokens if t not in stop] if stop else list(tokens)


def _dense_features(sample, i, q_tok, q_vec, snippet_vecs, tfidf, table, stop):
    s_tok = _filtered(sample.sentences[i].tokens, stop)
    s_vec = vectorize(tfidf, s_tok)
    dense = [
        cosine(q_vec, s_vec),
        max((cosine(s_vec, v) for v in snippet_vecs), default=0.0),
        cosine(sum_embedding(table, q_tok), sum_embedding(table, s_tok)),
    ]
    dense += pairwise_stats(q_tok, s_tok, table, tfidf)
    dense.append(i / max(1, len(sample.sentences) - 1))
    return FeatureVector(s_vec, np.array(dense))


def build_features(sample: Sample, sentence_index: int, tfidf: TfidfModel, table: EmbeddingTable, stopwords=frozenset()) -> FeatureVector:
    n = len(sample.sentences)
    if not 0 <= sentence_index < n:
        raise ArgumentError(f"sentence index {sentence_index} out of range for sample {sample.id} ({n} sentences)")
    stop = frozenset(stopwords)
    q_tok = _filtered(sample.question_tokens, stop)
    snippet_vecs = [vectorize(tfidf, _filtered(tokenize(t), stop)) for t in sample.snippets]
    return _dense_features(sample, sentence_index, q_tok, vectorize(tfidf, q_tok), snippet_vecs, tfidf, table, stop)


def sample_features(sample: Sample, ctx: FeatureContext) -> list[FeatureVector]:
    """Feature vectors for every sentence of ``sample``."""
    if ctx.table is None:
        raise ArgumentError("an embedding table is required to build sentence features")
    stop = ctx.stopwords
    q_tok = _filtered(sample.question_tokens, stop)
    q_vec = vectorize(ctx.tfidf, q_tok)
    snippet_vecs = [vectorize(ctx.tfidf, _filtered(tokenize(t), stop)) for t in sample.snippets]
    return [
        _dense_features(sample, i, q_tok, q_vec, snippet_vecs, ctx.tfidf, ctx.table, stop)
        for i in range(len(sample.sentences))
    ]
