"""Command-line entry point: ``qsumm <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass

import yaml

from . import __version__
from .corpus import dumps_jsonl, ingest_bioasq, read_corpus, tokenize
from .errors import ArgumentError, ConfigError, QsummError
from .evaluation import (
    METRIC_ROWS,
    correlation_report,
    crossval,
    read_runs_csv,
    report_csv,
    scatter_svg,
)
from .features import FeatureContext, fit_context, load_embeddings
from .labelling import SU4F1, apply_policy, labelling_name, parse_labelling, score_sentences
from .rouge import rouge_l, rouge_n, rouge_su
from .summarise import SummaryLengthPolicy, n_for_type, summarise, summarise_cosine, summarise_firstn

logger = logging.getLogger("qsumm")

# key -> (type, default)
CONFIG_KEYS = {
    "seed": (int, 0),
    "hidden_width": (int, 50),
    "epochs": (int, 20),
    "lr": (float, 0.01),
    "batch_size": (int, 32),
    "c": (float, 1.0),
    "epsilon": (float, 0.1),
    "linear_epochs": (int, 20),
    "linear_lr": (float, 0.01),
    "rl_episodes": (int, 2000),
    "rl_lr": (float, 0.003),
    "baseline_decay": (float, 0.9),
    "reward": (str, "su4f1"),
    "rl_features": (str, "tfidf"),
    "k": (int, 10),
    "summary_n": (int, 6),
    "factoid_n": (int, 2),
    "yesno_n": (int, 2),
    "list_n": (int, 3),
}


def _coerce(key, value):
    typ = CONFIG_KEYS[key][0]
    if typ is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if typ is int and isinstance(value, bool):
        raise ConfigError(f"config key '{key}' expects int, got {value!r}", key)
    if not isinstance(value, typ):
        raise ConfigError(f"config key '{key}' expects {typ.__name__}, got {value!r}", key)
    return value


def validate_config(raw: dict | None) -> dict:
    cfg = {k: default for k, (_, default) in CONFIG_KEYS.items()}
    for key, value in (raw or {}).items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key '{key}'", key)
        cfg[key] = _coerce(key, value)
    if cfg["reward"] not in ("su4f1", "mean2l"):
        raise ConfigError("config key 'reward' must be su4f1 or mean2l", "reward")
    if cfg["rl_features"] not in ("tfidf", "embedding"):
        raise ConfigError("config key 'rl_features' must be tfidf or embedding", "rl_features")
    return cfg


def load_config(path) -> dict:
    """Read a flat ``key: value`` file; unknown keys and wrong types are rejected."""
    if path is None:
        return validate_config({})
    with open(path, encoding="utf-8") as fh:
        try:
            raw = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"unparseable config: {exc}") from None
    if raw is not None and not isinstance(raw, dict):
        raise ConfigError("config must be a flat key: value mapping")
    if raw and any(isinstance(v, (dict, list)) for v in raw.values()):
        raise ConfigError("config must be flat (no nested values)")
    return validate_config(raw)


def _lengths(cfg) -> SummaryLengthPolicy:
    return SummaryLengthPolicy({t: cfg[f"{t}_n"] for t in ("summary", "factoid", "yesno", "list")})


@dataclass(frozen=True)
class RunPreset:
    name: str
    method: str
    labelling: str | None
    reward_scheme: str | None = None
    feature_mode: str | None = None
    batch_size: int | None = None


def resolve_preset(name: str, batch: int) -> RunPreset:
    """Configurations of the five submitted runs, per test batch (1-5)."""
    name = name.upper()
    if batch not in range(1, 6):
        raise ArgumentError(f"batch must be 1-5, got {batch}")
    nn_batch = 4096 if batch <= 3 else 1024
    if name == "MQ1":
        return RunPreset("MQ1", "firstn", None)
    if name == "MQ2":
        return RunPreset("MQ2", "svc", "topm:5")
    if name == "MQ3":
        return RunPreset("MQ3", "nnr", SU4F1, batch_size=nn_batch)
    if name == "MQ4":
        return RunPreset("MQ4", "nnc", "topm:5", batch_size=nn_batch)
    if name == "MQ5":
        features = "emb200" if batch == 2 else "tfidf"
        reward = "su4f1" if batch == 5 else "mean2l"
        return RunPreset("MQ5", "rl", None, reward_scheme=reward, feature_mode=features)
    raise ArgumentError(f"unknown preset {name!r}; expected MQ1-MQ5")


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _read_text(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _read_stopwords(path):
    if not path:
        return frozenset()
    return frozenset(t for line in _read_text(path).splitlines() for t in tokenize(line))


def _table(path):
    return load_embeddings(path) if path else None


def _config(args):
    cfg = load_config(getattr(args, "config", None))
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    return cfg


def _rl_feature_mode(features, table):
    if features == "tfidf":
        return "tfidf"
    want = int(features[3:])
    if table is None:
        raise ArgumentError(f"--features {features} needs --embeddings")
    if table.dim != want:
        raise ArgumentError(f"--features {features} needs {want}-dimensional embeddings, got {table.dim}")
    return "embedding"


def _train(method, samples, labelling, cfg, table, stopwords=frozenset()):
    """Fit ``method`` on ``samples``; returns (model, feature context)."""
    from .evaluation import make_fitter

    if method in ("svc", "svr", "nnc", "nnr") and table is None:
        raise ArgumentError(f"method {method} needs --embeddings")
    missing = [s.id for s in samples if not s.references]
    if missing:
        raise ArgumentError(f"training samples without references: {', '.join(missing[:5])}")
    ctx = fit_context(samples, table, stopwords)
    model = make_fitter(method, labelling, table, cfg)(samples, ctx)
    return model, ctx


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_ingest(args):
    samples = ingest_bioasq(_read_text(args.input))
    _write_text(args.out, dumps_jsonl(samples))


def cmd_fixture(args):
    from .fixtures import bundled_path

    os.makedirs(args.out_dir, exist_ok=True)
    for name in ("fixture.jsonl", "fixture_embeddings.txt"):
        _write_text(os.path.join(args.out_dir, name), bundled_path(name).read_text(encoding="utf-8"))


def cmd_label(args):
    policy = parse_labelling(args.labeling)
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["sample_id", "sentence_index", "score", "label"])
    for s in read_corpus(args.input):
        if not s.sentences:
            continue
        scores = score_sentences(s)
        labels = apply_policy(scores, policy) if policy != SU4F1 else [None] * len(scores)
        for i, (sc, lab) in enumerate(zip(scores, labels)):
            w.writerow([s.id, i, repr(sc), "" if lab is None else int(lab)])
    _write_text(args.out, out.getvalue())


def cmd_train(args):
    from .persist import save_model

    cfg = _config(args)
    if args.batch_size is not None:
        cfg["batch_size"] = args.batch_size
    table = _table(args.embeddings)
    labelling = parse_labelling(args.labeling) if args.labeling else None
    if args.method == "rl":
        cfg["reward"] = args.reward or cfg["reward"]
        cfg["rl_features"] = _rl_feature_mode(args.features, table)
    samples = read_corpus(args.input)
    model, ctx = _train(args.method, samples, labelling, cfg, table, _read_stopwords(args.stopwords))
    save_model(args.model_out, model, ctx.tfidf, cfg)


def _summaries(method, samples, model, tfidf, table, lengths, stopwords):
    lines = []
    ctx = None
    if method == "cosine":
        tfidf = fit_context(samples, None, stopwords).tfidf
    if tfidf is not None:
        ctx = FeatureContext(tfidf, table, stopwords)
    for s in samples:
        n = n_for_type(lengths, s.question_type)
        if method == "firstn":
            summ = summarise_firstn(s, n)
        elif method == "cosine":
            summ = summarise_cosine(s, ctx.tfidf, n)
        else:
            summ = summarise(model, s, n, ctx)
        lines.append(json.dumps(summ.to_dict(), ensure_ascii=False))
    return "".join(line + "\n" for line in lines)


def cmd_summarise(args):
    from .persist import load_model

    cfg = _config(args)
    table = _table(args.embeddings)
    samples = read_corpus(args.input)
    model = tfidf = None
    if args.method not in ("firstn", "cosine"):
        if not args.model:
            raise ArgumentError(f"method {args.method} needs --model")
        model, tfidf = load_model(args.model, table)
        expected = {"svc": "classify", "svr": "regress", "nnc": "classify", "nnr": "regress", "rl": "classify"}[args.method]
        if model.kind != expected:
            raise ArgumentError(f"model file holds a {model.kind} model, not {args.method}")
        if args.method in ("svc", "svr") and table is None:
            raise ArgumentError(f"method {args.method} needs --embeddings")
    text = _summaries(args.method, samples, model, tfidf, table, _lengths(cfg), _read_stopwords(args.stopwords))
    _write_text(args.out, text)


def cmd_rouge(args):
    cand = tokenize(_read_text(args.cand))
    refs = [tokenize(line) for line in _read_text(args.refs).splitlines() if line.strip()]
    if not refs:
        raise ArgumentError("reference file contains no references")
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["metric", "precision", "recall", "f1"])
    for name, score in (
        ("rouge-2", rouge_n(cand, refs, 2)),
        ("rouge-l", rouge_l(cand, refs)),
        ("rouge-su4", rouge_su(cand, refs, 4)),
    ):
        w.writerow([name, repr(score.precision), repr(score.recall), repr(score.f1)])
    sys.stdout.write(out.getvalue())


def cmd_crossval(args):
    cfg = _config(args)
    if args.k is not None:
        cfg["k"] = args.k
    table = _table(args.embeddings)
    labelling = parse_labelling(args.labeling) if args.labeling else None
    samples = read_corpus(args.input)
    report = crossval(
        samples,
        args.method,
        labelling,
        k=cfg["k"],
        seed=cfg["seed"],
        table=table,
        config=cfg,
        lengths=_lengths(cfg),
        stopwords=_read_stopwords(args.stopwords),
        jobs=args.jobs,
    )
    _write_text(args.out, report.to_json())


def cmd_grid(args):
    from .models import CLASSIFY, DEFAULT_GRID, REGRESS, LinearHyper, grid_search

    cfg = _config(args)
    table = _table(args.embeddings)
    if table is None:
        raise ArgumentError("grid search needs --embeddings")
    grid = json.loads(args.grid) if args.grid else DEFAULT_GRID
    task = CLASSIFY if args.method == "svc" else REGRESS
    labelling = parse_labelling(args.labeling) if args.labeling else None
    base = LinearHyper(epochs=cfg["linear_epochs"], lr=cfg["linear_lr"], seed=cfg["seed"])
    best, scores = grid_search(read_corpus(args.input), task, grid, args.k, cfg["seed"], table, labelling, base, _lengths(cfg))
    out = {"best": asdict(best), "scores": scores, "grid": grid, "config": dict(sorted(cfg.items()))}
    _write_text(args.out, json.dumps(out, indent=2) + "\n")


def cmd_correlate(args):
    rows = read_runs_csv(_read_text(args.input))
    report = correlation_report(rows)
    _write_text(args.out, report_csv(report))
    if args.plots:
        os.makedirs(args.plots, exist_ok=True)
        for label, col in METRIC_ROWS:
            pts = [(r[col], r["human_avg"]) for r in rows]
            fname = label.lower().replace(" ", "_").replace("-", "") + ".svg"
            scatter_svg(pts, label, "average human score", os.path.join(args.plots, fname))


def cmd_preset(args):
    preset = resolve_preset(args.name, args.batch)
    if not args.train:
        sys.stdout.write(json.dumps(asdict(preset)) + "\n")
        return
    if not args.input:
        raise ArgumentError("--in is required together with --train")
    cfg = _config(args)
    table = _table(args.embeddings)
    if preset.batch_size:
        cfg["batch_size"] = preset.batch_size
    model = tfidf = None
    if preset.method != "firstn":
        labelling = parse_labelling(preset.labelling) if preset.labelling else None
        if preset.method == "rl":
            cfg["reward"] = preset.reward_scheme
            cfg["rl_features"] = _rl_feature_mode(preset.feature_mode, table)
        model, ctx = _train(preset.method, read_corpus(args.train), labelling, cfg, table)
        tfidf = ctx.tfidf
    text = _summaries(preset.method, read_corpus(args.input), model, tfidf, table, _lengths(cfg), frozenset())
    _write_text(args.out, text)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsumm", description="Query-based extractive summarisation for question answering.")
    p.add_argument("--version", action="version", version=f"qsumm {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help):
        sp = sub.add_parser(name, help=help)
        sp.set_defaults(func=func)
        return sp

    sp = add("ingest", cmd_ingest, "convert BioASQ JSON to the JSON-lines corpus format")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--out", default="-")

    sp = add("fixture", cmd_fixture, "write the bundled synthetic corpus and embeddings")
    sp.add_argument("--out-dir", required=True)

    sp = add("label", cmd_label, "per-sentence ROUGE-SU4 scores and labels as CSV")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--labeling", default="topm:5")
    sp.add_argument("--out", default="-")

    sp = add("train", cmd_train, "train a summariser and save it")
    sp.add_argument("--method", required=True, choices=["svc", "svr", "nnc", "nnr", "rl"])
    sp.add_argument("--labeling")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--embeddings")
    sp.add_argument("--model-out", required=True)
    sp.add_argument("--reward", choices=["su4f1", "mean2l"])
    sp.add_argument("--features", choices=["tfidf", "emb100", "emb200"], default="tfidf")
    sp.add_argument("--batch-size", type=int)
    sp.add_argument("--stopwords")
    sp.add_argument("--config")
    sp.add_argument("--seed", type=int)

    sp = add("summarise", cmd_summarise, "summarise a corpus")
    sp.add_argument("--method", required=True, choices=["firstn", "cosine", "svc", "svr", "nnc", "nnr", "rl"])
    sp.add_argument("--model")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--out", default="-")
    sp.add_argument("--embeddings")
    sp.add_argument("--stopwords")
    sp.add_argument("--config")
    sp.add_argument("--seed", type=int)

    sp = add("rouge", cmd_rouge, "score a candidate against references (one per line)")
    sp.add_argument("--cand", required=True)
    sp.add_argument("--refs", required=True)

    sp = add("crossval", cmd_crossval, "k-fold cross-validation of a method")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--method", required=True, choices=["firstn", "cosine", "oracle", "svc", "svr", "nnc", "nnr", "rl"])
    sp.add_argument("--labeling")
    sp.add_argument("--k", type=int)
    sp.add_argument("--embeddings")
    sp.add_argument("--stopwords")
    sp.add_argument("--config")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out", default="-")

    sp = add("grid", cmd_grid, "grid search for the linear models")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--method", required=True, choices=["svc", "svr"])
    sp.add_argument("--labeling")
    sp.add_argument("--grid", help='JSON, e.g. \'{"c": [0.1, 1, 10]}\'')
    sp.add_argument("--k", type=int, default=10)
    sp.add_argument("--embeddings")
    sp.add_argument("--config")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", default="-")

    sp = add("correlate", cmd_correlate, "correlate ROUGE columns with human scores")
    sp.add_argument("--in", dest="input", required=True)
    sp.add_argument("--out", default="-")
    sp.add_argument("--plots")

    sp = add("preset", cmd_preset, "resolve (and optionally run) one of the MQ1-MQ5 runs")
    sp.add_argument("name")
    sp.add_argument("--batch", type=int, required=True)
    sp.add_argument("--train")
    sp.add_argument("--in", dest="input")
    sp.add_argument("--out", default="-")
    sp.add_argument("--embeddings")
    sp.add_argument("--config")
    sp.add_argument("--seed", type=int)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        args.func(args)
    except QsummError as exc:
        print(f"qsumm: error: {exc.kind}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"qsumm: error: io: {exc}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())
