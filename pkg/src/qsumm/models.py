"""Sentence scorers: linear max-margin models and the small neural classifier/regressor."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Sample
from .errors import ArgumentError, TrainingError
from .features import N_DENSE, EmbeddingTable, FeatureContext, FeatureVector, sample_features, sum_embedding
from .labelling import TopM, sentence_targets

logger = logging.getLogger(__name__)

CLASSIFY = "classify"
REGRESS = "regress"


# ---------------------------------------------------------------------------
# Linear models (SVC / SVR analogue)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearHyper:
    c: float = 1.0
    epochs: int = 20
    lr: float = 0.01
    seed: int = 0
    epsilon: float = 0.1
    batch_size: int = 16


@dataclass
class LinearModel:
    task: str
    weights: np.ndarray
    bias: float
    hyper: LinearHyper = field(default_factory=LinearHyper)

    @property
    def kind(self):
        return self.task

    @property
    def vocab_size(self):
        return len(self.weights) - N_DENSE

    def decision_values(self, sample: Sample, ctx: FeatureContext) -> list[float]:
        return [predict_linear(self, x) for x in sample_features(sample, ctx)]

    def predicted_labels(self, values):
        return [v > 0 for v in values]


def design_matrix(X: Sequence[FeatureVector], vocab_size: int) -> sp.csr_matrix:
    """Stack feature vectors into a CSR matrix with ``vocab_size + 20`` columns."""
    rows, cols, vals = [], [], []
    dense_cols = np.arange(vocab_size, vocab_size + N_DENSE)
    for r, x in enumerate(X):
        if len(x.tfidf) and x.tfidf.indices[-1] >= vocab_size:
            raise ArgumentError("feature vector has a tf.idf column outside the vocabulary")
        rows.append(np.full(len(x.tfidf) + N_DENSE, r))
        cols.append(np.concatenate([x.tfidf.indices, dense_cols]))
        vals.append(np.concatenate([x.tfidf.values, x.dense]))
    if not rows:
        return sp.csr_matrix((0, vocab_size + N_DENSE))
    return sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(len(X), vocab_size + N_DENSE),
    )


def train_linear(X: Sequence[FeatureVector], y, task: str, hyper: LinearHyper = LinearHyper(), vocab_size: int | None = None) -> LinearModel:
    """Fit a linear SVM (hinge) or SVR (epsilon-insensitive) by mini-batch subgradient descent.

    Objective: lam/2 * |w|^2 + mean loss, with lam = 1 / (c * N). The bias is
    not regularised. Mini-batch order comes from ``hyper.seed``.
    """
    if task not in (CLASSIFY, REGRESS):
        raise ArgumentError(f"unknown task {task!r}")
    if len(X) != len(y):
        raise ArgumentError(f"{len(X)} feature vectors but {len(y)} targets")
    if not X:
        raise ArgumentError("no training data")
    if hyper.c <= 0 or hyper.lr <= 0 or hyper.batch_size < 1:
        raise ArgumentError(f"invalid hyper-parameters {hyper}")
    if vocab_size is None:
        vocab_size = max((int(x.tfidf.indices[-1]) + 1 for x in X if len(x.tfidf)), default=0)

    A = design_matrix(X, vocab_size)
    y = np.asarray(y, dtype=float)
    if task == CLASSIFY:
        y = np.where(y > 0.5, 1.0, -1.0)
    n = len(y)
    lam = 1.0 / (hyper.c * n)
    w = np.zeros(A.shape[1])
    b = 0.0
    rng = np.random.default_rng(hyper.seed)
    for _ in range(hyper.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, hyper.batch_size):
            idx = perm[start : start + hyper.batch_size]
            Xb, yb = A[idx], y[idx]
            f = Xb @ w + b
            if task == CLASSIFY:
                coef = np.where(yb * f < 1, -yb, 0.0)
            else:
                r = f - yb
                coef = np.where(np.abs(r) > hyper.epsilon, np.sign(r), 0.0)
            grad_w = lam * w + (Xb.T @ coef) / len(idx)
            w = w - hyper.lr * grad_w
            b = b - hyper.lr * float(coef.mean())
    return LinearModel(task, w, b, hyper)


def predict_linear(model: LinearModel, x: FeatureVector) -> float:
    """Raw decision value w.x + b."""
    V = model.vocab_size
    idx = x.tfidf.indices
    inside = idx < V
    value = float(np.dot(model.weights[idx[inside]], x.tfidf.values[inside]))
    value += float(np.dot(model.weights[V:], x.dense))
    return value + model.bias


def linear_training_set(samples: Sequence[Sample], ctx: FeatureContext, labelling):
    X, y = [], []
    for s in samples:
        if not s.sentences:
            continue
        X.extend(sample_features(s, ctx))
        y.extend(sentence_targets(s, labelling))
    return X, y


def fit_linear(samples: Sequence[Sample], ctx: FeatureContext, task: str, labelling=None, hyper: LinearHyper = LinearHyper()) -> LinearModel:
    """Featurise and label ``samples`` and train a linear model on them."""
    if labelling is None:
        labelling = TopM(5) if task == CLASSIFY else "su4f1"
    X, y = linear_training_set(samples, ctx, labelling)
    return train_linear(X, y, task, hyper, vocab_size=len(ctx.tfidf))


def expand_grid(param_grid) -> list[dict]:
    """Accept a list of dicts, or a dict of lists expanded in key order."""
    if isinstance(param_grid, dict):
        keys = list(param_grid)
        return [dict(zip(keys, combo)) for combo in itertools.product(*(param_grid[k] for k in keys))]
    return [dict(p) for p in param_grid]


DEFAULT_GRID = {"c": [0.01, 0.1, 1, 10], "epsilon": [0.01, 0.1]}


def grid_search(samples, task, param_grid, k, seed, table: EmbeddingTable, labelling=None, base: LinearHyper = LinearHyper(), lengths=None):
    """Pick the grid point with the best k-fold mean summary ROUGE-SU4 F1.

    Returns ``(best_hyper, scores)`` where ``scores`` lists the CV mean for
    every grid point in grid order. Ties go to the earliest point.
    """
    from .evaluation import cv_fold_means

    points = expand_grid(param_grid)
    if not points:
        raise ArgumentError("empty parameter grid")
    if k < 2:
        raise ArgumentError(f"k must be >= 2, got {k}")
    scores = []
    best, best_score = None, -np.inf
    for point in points:
        hyper = replace(base, **point)

        def fit(train, ctx, hyper=hyper):
            return fit_linear(train, ctx, task, labelling, hyper)

        score = float(np.mean(cv_fold_means(samples, fit, k, seed, table, lengths=lengths)))
        scores.append(score)
        if score > best_score:
            best, best_score = hyper, score
    return best, scores


# ---------------------------------------------------------------------------
# Neural classifier / regressor
# ---------------------------------------------------------------------------

NNC = "nnc"
NNR = "nnr"


@dataclass
class NeuralParams:
    task: str
    W1: np.ndarray  # h x (2d + 1)
    b1: np.ndarray  # h
    w2: np.ndarray  # h
    b2: float
    encoder: str = "sum_pool"

    def __post_init__(self):
        if self.task not in (NNC, NNR):
            raise ArgumentError(f"unknown neural task {self.task!r}")
        if self.encoder != "sum_pool":
            raise ArgumentError(f"unsupported encoder {self.encoder!r}")
        h, cols = self.W1.shape
        if cols % 2 != 1 or self.b1.shape != (h,) or self.w2.shape != (h,):
            raise ArgumentError("inconsistent neural parameter shapes")

    @property
    def d(self):
        return (self.W1.shape[1] - 1) // 2

    @property
    def h(self):
        return self.W1.shape[0]

    def copy(self) -> "NeuralParams":
        return NeuralParams(self.task, self.W1.copy(), self.b1.copy(), self.w2.copy(), float(self.b2), self.encoder)


def init_neural(task: str, d: int, h: int = 50, seed: int = 0) -> NeuralParams:
    """Glorot-uniform weights, zero biases."""
    rng = np.random.default_rng(seed)
    a1 = np.sqrt(6.0 / (2 * d + 1 + h))
    a2 = np.sqrt(6.0 / (h + 1))
    return NeuralParams(
        task,
        rng.uniform(-a1, a1, size=(h, 2 * d + 1)),
        np.zeros(h),
        rng.uniform(-a2, a2, size=h),
        0.0,
    )


def nn_input(table: EmbeddingTable, q_tokens, s_tokens, position: float) -> np.ndarray:
    """[sentence embedding ; sentence * question ; position]."""
    e_s = sum_embedding(table, s_tokens)
    e_q = sum_embedding(table, q_tokens)
    return np.concatenate([e_s, e_s * e_q, [position]])


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _raw(params: NeuralParams, X: np.ndarray):
    pre = X @ params.W1.T + params.b1
    hidden = np.maximum(pre, 0.0)
    return hidden @ params.w2 + params.b2, pre, hidden


def nn_predict(params: NeuralParams, X: np.ndarray) -> np.ndarray:
    raw, _, _ = _raw(params, np.atleast_2d(X))
    return _sigmoid(raw) if params.task == NNC else raw


def nn_forward(params: NeuralParams, table: EmbeddingTable, q_tokens, s_tokens, position: float) -> float:
    if not 0.0 <= position <= 1.0:
        raise ArgumentError(f"position must lie in [0, 1], got {position}")
    return float(nn_predict(params, nn_input(table, q_tokens, s_tokens, position))[0])


def nn_loss_and_grads(params: NeuralParams, X: np.ndarray, y: np.ndarray):
    """Mean loss (BCE for NNC, MSE for NNR) and its gradients by backpropagation."""
    raw, pre, hidden = _raw(params, X)
    m = len(y)
    if params.task == NNC:
        # BCE from logits: log(1 + e^z) - y z
        loss = float(np.mean(np.logaddexp(0.0, raw) - y * raw))
        d_raw = (_sigmoid(raw) - y) / m
    else:
        r = raw - y
        loss = float(np.mean(r * r))
        d_raw = 2.0 * r / m
    g_w2 = hidden.T @ d_raw
    g_b2 = float(d_raw.sum())
    d_pre = np.outer(d_raw, params.w2) * (pre > 0)
    g_W1 = d_pre.T @ X
    g_b1 = d_pre.sum(axis=0)
    return loss, {"W1": g_W1, "b1": g_b1, "w2": g_w2, "b2": g_b2}


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    epochs: int = 20
    lr: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ArgumentError("batch_size must be >= 1")
        if self.lr <= 0:
            raise ArgumentError("lr must be > 0")


def nn_train(dataset, params: NeuralParams, config: TrainConfig = TrainConfig(), task: str | None = None, table: EmbeddingTable | None = None):
    """Mini-batch SGD on (q_tokens, s_tokens, position, target) tuples.

    ``dataset`` may also be a pre-built ``(X, y)`` pair of arrays, in which
    case ``table`` is not needed. Returns ``(params, epoch_losses)``.
    """
    if task is not None and task != params.task:
        raise ArgumentError(f"task {task!r} does not match parameters ({params.task!r})")
    if isinstance(dataset, tuple) and len(dataset) == 2 and isinstance(dataset[0], np.ndarray):
        X, y = dataset
    else:
        if not dataset:
            raise ArgumentError("empty training dataset")
        if table is None:
            raise ArgumentError("an embedding table is needed to encode the dataset")
        X = np.array([nn_input(table, q, s, p) for q, s, p, _ in dataset]).reshape(len(dataset), -1)
        y = np.array([t for *_, t in dataset], dtype=float)
    if len(y) == 0:
        raise ArgumentError("empty training dataset")
    if X.shape[1] != params.W1.shape[1]:
        raise ArgumentError(f"input width {X.shape[1]} does not match parameters ({params.W1.shape[1]})")

    p = params.copy()
    rng = np.random.default_rng(config.seed)
    losses = []
    n = len(y)
    for epoch in range(config.epochs):
        perm = rng.permutation(n)
        total = 0.0
        for batch, start in enumerate(range(0, n, config.batch_size)):
            idx = perm[start : start + config.batch_size]
            loss, g = nn_loss_and_grads(p, X[idx], y[idx])
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at epoch {epoch}, batch {batch}")
            p.W1 -= config.lr * g["W1"]
            p.b1 -= config.lr * g["b1"]
            p.w2 -= config.lr * g["w2"]
            p.b2 -= config.lr * g["b2"]
            total += loss * len(idx)
        losses.append(total / n)
        logger.debug("epoch %d loss %.6f", epoch, losses[-1])
    return p, losses


@dataclass
class NeuralModel:
    """Trained neural parameters bundled with the embeddings they read."""

    params: NeuralParams
    table: EmbeddingTable

    @property
    def kind(self):
        return CLASSIFY if self.params.task == NNC else REGRESS

    def inputs(self, sample: Sample) -> np.ndarray:
        n = len(sample.sentences)
        q = sample.question_tokens
        return np.array(
            [nn_input(self.table, q, s.tokens, s.index / max(1, n - 1)) for s in sample.sentences]
        ).reshape(n, 2 * self.table.dim + 1)

    def decision_values(self, sample: Sample, ctx=None) -> list[float]:
        if not sample.sentences:
            return []
        return nn_predict(self.params, self.inputs(sample)).tolist()

    def predicted_labels(self, values):
        return [v > 0.5 for v in values]


def fit_neural(samples: Sequence[Sample], table: EmbeddingTable, task: str, labelling=None, config: TrainConfig = TrainConfig(), hidden: int = 50) -> NeuralModel:
    if labelling is None:
        labelling = TopM(5) if task == NNC else "su4f1"
    init = init_neural(task, table.dim, hidden, config.seed)
    shell = NeuralModel(init, table)
    Xs, ys = [], []
    for s in samples:
        if not s.sentences:
            continue
        Xs.append(shell.inputs(s))
        ys.extend(sentence_targets(s, labelling))
    if not Xs:
        raise ArgumentError("no training sentences")
    params, _ = nn_train((np.vstack(Xs), np.array(ys, dtype=float)), init, config)
    return NeuralModel(params, table)
