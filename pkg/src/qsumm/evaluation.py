"""Cross-validation harness and ROUGE-vs-human correlation analysis."""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .corpus import Sample, make_folds
from .errors import ArgumentError, FormatError, UndefinedCorrelationError
from .features import fit_context
from .rouge import rouge_su
from .summarise import OracleRegressor, SummaryLengthPolicy, n_for_type, summarise, summarise_cosine, summarise_firstn, summary_tokens

# ---------------------------------------------------------------------------
# Cross-validation
# ---------------------------------------------------------------------------


class FirstN:
    kind = "firstn"


class CosineBaseline:
    kind = "cosine"


def summarise_with(model, sample: Sample, n: int, ctx):
    if model.kind == "firstn":
        return summarise_firstn(sample, n)
    if model.kind == "cosine":
        return summarise_cosine(sample, ctx.tfidf, n)
    return summarise(model, sample, n, ctx)


def summary_score(sample: Sample, summary) -> float:
    return rouge_su(summary_tokens(sample, summary), sample.reference_tokens, 4).f1


def _fold_mean(fold, samples, folds, fit, table, lengths, stopwords):
    train, val = folds.split(fold, samples)
    ctx = fit_context(train, table, stopwords)
    model = fit(train, ctx)
    scores = [summary_score(s, summarise_with(model, s, n_for_type(lengths, s.question_type), ctx)) for s in val]
    return float(np.mean(scores))


def cv_fold_means(samples: Sequence[Sample], fit: Callable, k: int, seed: int, table=None, lengths: SummaryLengthPolicy | None = None, stopwords=frozenset(), jobs: int = 1) -> list[float]:
    """Mean summary ROUGE-SU4 F1 on each validation fold.

    ``fit(train_samples, feature_context)`` returns a summariser. tf.idf is
    refit on every training split.
    """
    missing = [s.id for s in samples if not s.references]
    if missing:
        raise ArgumentError(f"samples without references: {', '.join(missing)}")
    lengths = lengths or SummaryLengthPolicy()
    folds = make_folds([s.id for s in samples], k, seed)

    def run(i):
        return _fold_mean(i, samples, folds, fit, table, lengths, stopwords)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, range(k)))
    return [run(i) for i in range(k)]


@dataclass
class CrossValReport:
    method: str
    labelling: str
    k: int
    seed: int
    fold_scores: list
    mean: float
    stdev: float
    config: dict = field(default_factory=dict)
    stdev_kind: str = "population"

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"


METHODS = ("firstn", "cosine", "oracle", "svc", "svr", "nnc", "nnr", "rl")


def make_fitter(method: str, labelling=None, table=None, config: dict | None = None):
    """Training function for ``method`` with hyper-parameters from ``config``."""
    from .models import CLASSIFY, NNC, NNR, REGRESS, LinearHyper, TrainConfig, fit_linear, fit_neural
    from .policy import PolicyModel, RLConfig, reinforce_train

    cfg = config or {}
    seed = cfg.get("seed", 0)
    if method == "firstn":
        return lambda train, ctx: FirstN()
    if method == "cosine":
        return lambda train, ctx: CosineBaseline()
    if method == "oracle":
        return lambda train, ctx: OracleRegressor()
    if method in ("svc", "svr"):
        hyper = LinearHyper(
            c=cfg.get("c", 1.0),
            epochs=cfg.get("linear_epochs", 20),
            lr=cfg.get("linear_lr", 0.01),
            seed=seed,
            epsilon=cfg.get("epsilon", 0.1),
        )
        task = CLASSIFY if method == "svc" else REGRESS
        return lambda train, ctx: fit_linear(train, ctx, task, labelling, hyper)
    if method in ("nnc", "nnr"):
        if table is None:
            raise ArgumentError(f"method {method} needs word embeddings")
        tc = TrainConfig(
            batch_size=cfg.get("batch_size", 32),
            epochs=cfg.get("epochs", 20),
            lr=cfg.get("lr", 0.01),
            seed=seed,
        )
        task = NNC if method == "nnc" else NNR
        hidden = cfg.get("hidden_width", 50)
        return lambda train, ctx: fit_neural(train, table, task, labelling, tc, hidden)
    if method == "rl":
        rc = RLConfig(
            episodes=cfg.get("rl_episodes", 2000),
            lr=cfg.get("rl_lr", RLConfig.lr),
            reward_scheme=cfg.get("reward", "su4f1"),
            baseline_decay=cfg.get("baseline_decay", 0.9),
            seed=seed,
            h=cfg.get("hidden_width", 50),
            feature_mode=cfg.get("rl_features", "tfidf"),
        )
        return lambda train, ctx: PolicyModel(reinforce_train(train, ctx.tfidf, rc, table), ctx.tfidf, table)
    raise ArgumentError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")


def default_labelling(method: str):
    from .labelling import TopM

    if method in ("svc", "nnc"):
        return TopM(5)
    if method in ("svr", "nnr", "oracle"):
        return "su4f1"
    return None


def crossval(corpus: Sequence[Sample], method: str, labelling=None, k: int = 10, seed: int = 0, table=None, config: dict | None = None, lengths=None, stopwords=frozenset(), jobs: int = 1) -> CrossValReport:
    from .labelling import labelling_name

    if labelling is None:
        labelling = default_labelling(method)
    if method in ("svr", "nnr") and labelling != "su4f1":
        raise ArgumentError(f"{method} trains on su4f1 scores, not {labelling_name(labelling)}")
    if method in ("svc", "nnc", "svr", "nnr") and table is None:
        raise ArgumentError(f"method {method} needs word embeddings")
    cfg = dict(config or {})
    cfg.setdefault("seed", seed)
    fit = make_fitter(method, labelling, table, cfg)
    folds = cv_fold_means(corpus, fit, k, seed, table, lengths, stopwords, jobs)
    mean = float(np.mean(folds))
    stdev = float(np.sqrt(np.mean([(f - mean) ** 2 for f in folds])))
    return CrossValReport(
        method=method,
        labelling=labelling_name(labelling) if labelling is not None else "",
        k=k,
        seed=seed,
        fold_scores=folds,
        mean=mean,
        stdev=stdev,
        config=dict(sorted(cfg.items())),
    )


# ---------------------------------------------------------------------------
# Correlations
# ---------------------------------------------------------------------------


def _pair_check(xs, ys):
    if len(xs) != len(ys):
        raise ArgumentError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(xs) < 2:
        raise ArgumentError("at least two observations are required")


def pearson(xs, ys) -> float:
    _pair_check(xs, ys)
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("correlation undefined for a constant variable")
    r = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def average_ranks(values) -> np.ndarray:
    """1-based ranks; tied values share the mean of their positions."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(len(v))
    i = 0
    while i < len(v):
        j = i
        while j + 1 < len(v) and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def spearman(xs, ys) -> float:
    _pair_check(xs, ys)
    return pearson(average_ranks(xs), average_ranks(ys))


def concordance(xs, ys) -> tuple[int, int]:
    """(concordant, discordant) pair counts; tied pairs count as neither."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    sx = np.sign(x[:, None] - x[None, :])
    sy = np.sign(y[:, None] - y[None, :])
    prod = np.triu(sx * sy, k=1)
    return int((prod > 0).sum()), int((prod < 0).sum())


def kendall(xs, ys) -> float:
    """Kendall tau-a."""
    _pair_check(xs, ys)
    n = len(xs)
    c, d = concordance(xs, ys)
    return (c - d) / (n * (n - 1) / 2)


def revised_kendall(series) -> float:
    """Kendall tau restricted to pairs inside the same group.

    ``series`` is an iterable of ``(group_id, x, y)`` rows.
    """
    groups: dict = {}
    for g, x, y in series:
        groups.setdefault(g, ([], []))
        groups[g][0].append(x)
        groups[g][1].append(y)
    num = 0
    den = 0
    for xs, ys in groups.values():
        n = len(xs)
        if n < 2:
            continue
        c, d = concordance(xs, ys)
        num += c - d
        den += n * (n - 1) // 2
    if den == 0:
        raise ArgumentError("no within-group pairs")
    return num / den


RUN_COLUMNS = ("set_id", "run_id", "r2_p", "r2_r", "r2_f1", "su4_p", "su4_r", "su4_f1", "human_avg")
METRIC_ROWS = (
    ("ROUGE-2 precision", "r2_p"),
    ("ROUGE-2 recall", "r2_r"),
    ("ROUGE-2 F1", "r2_f1"),
    ("ROUGE-SU4 precision", "su4_p"),
    ("ROUGE-SU4 recall", "su4_r"),
    ("ROUGE-SU4 F1", "su4_f1"),
)
CORRELATIONS = ("pearson", "spearman", "kendall", "revised_kendall")


def read_runs_csv(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != list(RUN_COLUMNS):
        raise FormatError(f"expected header {','.join(RUN_COLUMNS)}", line=1)
    rows = []
    for lineno, raw in enumerate(reader, 2):
        try:
            row = {"set_id": raw["set_id"], "run_id": raw["run_id"]}
            for col in RUN_COLUMNS[2:]:
                row[col] = float(raw[col])
        except (TypeError, ValueError):
            raise FormatError("non-numeric or missing value", line=lineno) from None
        rows.append(row)
    return rows


def correlation_report(rows: Sequence[dict]) -> dict:
    """Six ROUGE columns x four correlations against ``human_avg``.

    Cells that are undefined (constant column, no within-set pairs) are ``None``.
    """
    if len(rows) < 2:
        raise ArgumentError("at least two rows are required")
    human = [r["human_avg"] for r in rows]
    report = {}
    for label, col in METRIC_ROWS:
        xs = [r[col] for r in rows]
        cells = {}
        for name, fn in (
            ("pearson", lambda: pearson(xs, human)),
            ("spearman", lambda: spearman(xs, human)),
            ("kendall", lambda: kendall(xs, human)),
            ("revised_kendall", lambda: revised_kendall((r["set_id"], r[col], r["human_avg"]) for r in rows)),
        ):
            try:
                cells[name] = fn()
            except (UndefinedCorrelationError, ArgumentError):
                cells[name] = None
        report[label] = cells
    return report


def report_csv(report: dict) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["metric", *CORRELATIONS])
    for label, cells in report.items():
        w.writerow([label, *("undefined" if cells[c] is None else repr(cells[c]) for c in CORRELATIONS)])
    return out.getvalue()


# ---------------------------------------------------------------------------
# Scatterplots
# ---------------------------------------------------------------------------

_W, _H, _M = 480, 360, 60


def _scale(lo, hi, a, b):
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    return lambda v: a + (v - lo) * (b - a) / (hi - lo)


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def scatter_svg_text(points, x_label: str, y_label: str) -> str:
    pts = [(float(x), float(y)) for x, y in points]
    if not pts:
        raise ArgumentError("at least one point is required")
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    sx = _scale(x0, x1, _M, _W - _M / 2)
    sy = _scale(y0, y1, _H - _M, _M / 2)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line class="axis" x1="{_M}" y1="{_H - _M}" x2="{_W - _M / 2:g}" y2="{_H - _M}" stroke="black"/>',
        f'<line class="axis" x1="{_M}" y1="{_H - _M}" x2="{_M}" y2="{_M / 2:g}" stroke="black"/>',
        f'<text x="{_M - 4}" y="{_H - _M + 16}" font-size="10" text-anchor="start">{x0:.4g}</text>',
        f'<text x="{_W - _M / 2:g}" y="{_H - _M + 16}" font-size="10" text-anchor="end">{x1:.4g}</text>',
        f'<text x="{_M - 6}" y="{_H - _M:g}" font-size="10" text-anchor="end">{y0:.4g}</text>',
        f'<text x="{_M - 6}" y="{_M / 2 + 4:g}" font-size="10" text-anchor="end">{y1:.4g}</text>',
        f'<text x="{(_W + _M / 2) / 2:g}" y="{_H - 15}" font-size="12" text-anchor="middle">{_esc(x_label)}</text>',
        f'<text x="15" y="{_H / 2:g}" font-size="12" text-anchor="middle" transform="rotate(-90 15 {_H / 2:g})">{_esc(y_label)}</text>',
    ]
    for x, y in pts:
        lines.append(f'<circle class="marker" cx="{sx(x):.4f}" cy="{sy(y):.4f}" r="3" fill="black" fill-opacity="0.6"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def scatter_svg(points, x_label: str, y_label: str, out_path) -> None:
    text = scatter_svg_text(points, x_label, y_label)
    with open(out_path, "w", encoding="utf-8") as fh:
        fh.write(text)
