"""Summary generation: baselines, regression top-n, and classification with backoff."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .corpus import QUESTION_TYPES, Sample
from .errors import ArgumentError
from .features import TfidfModel, cosine, vectorize
from .labelling import top_indices

DEFAULT_LENGTHS = {"summary": 6, "factoid": 2, "yesno": 2, "list": 3}


@dataclass(frozen=True)
class SummaryLengthPolicy:
    lengths: dict = field(default_factory=lambda: dict(DEFAULT_LENGTHS))

    def __post_init__(self):
        missing = [t for t in QUESTION_TYPES if t not in self.lengths]
        if missing:
            raise ArgumentError(f"no summary length for question types {missing}")
        bad = {t: n for t, n in self.lengths.items() if not isinstance(n, int) or n < 1}
        if bad:
            raise ArgumentError(f"summary lengths must be integers >= 1: {bad}")


def n_for_type(policy: SummaryLengthPolicy, qtype: str) -> int:
    return policy.lengths[qtype]


@dataclass(frozen=True)
class Summary:
    sample_id: str
    selected: tuple
    text: str

    def to_dict(self) -> dict:
        return {"sample_id": self.sample_id, "indices": list(self.selected), "text": self.text}


def make_summary(sample: Sample, indices) -> Summary:
    chosen = tuple(sorted(set(indices)))
    n = len(sample.sentences)
    if any(not 0 <= i < n for i in chosen):
        raise ArgumentError(f"sentence index out of range for sample {sample.id}")
    return Summary(sample.id, chosen, " ".join(sample.sentences[i].text for i in chosen))


def summary_tokens(sample: Sample, summary: Summary) -> list[str]:
    return [t for i in summary.selected for t in sample.sentences[i].tokens]


def summarise_firstn(sample: Sample, n: int) -> Summary:
    return make_summary(sample, range(min(n, len(sample.sentences))))


def summarise_top(sample: Sample, values: Sequence[float], n: int) -> Summary:
    """The ``n`` highest-valued sentences, ties to the lower index."""
    if len(values) != len(sample.sentences):
        raise ArgumentError("one value per sentence is required")
    return make_summary(sample, top_indices(values, n))


def summarise_cosine(sample: Sample, tfidf: TfidfModel, n: int) -> Summary:
    q = vectorize(tfidf, sample.question_tokens)
    sims = [cosine(q, vectorize(tfidf, s.tokens)) for s in sample.sentences]
    return summarise_top(sample, sims, n)


def _check_kind(model, kind):
    if getattr(model, "kind", None) != kind:
        raise ArgumentError(f"expected a {kind} model, got {getattr(model, 'kind', type(model).__name__)}")


def summarise_regression(model, sample: Sample, n: int, ctx=None) -> Summary:
    _check_kind(model, "regress")
    if not sample.sentences:
        return make_summary(sample, [])
    return summarise_top(sample, model.decision_values(sample, ctx), n)


def select_with_backoff(values: Sequence[float], positives: Sequence[bool], n: int) -> list[int]:
    """All positives, or the top ``n`` by value when there are fewer than ``n``."""
    chosen = [i for i, pos in enumerate(positives) if pos]
    if len(chosen) < n:
        chosen = top_indices(values, n)
    return sorted(chosen)


def summarise_classification(model, sample: Sample, n: int, ctx=None) -> Summary:
    _check_kind(model, "classify")
    if not sample.sentences:
        return make_summary(sample, [])
    values = model.decision_values(sample, ctx)
    return make_summary(sample, select_with_backoff(values, model.predicted_labels(values), n))


def summarise(model, sample: Sample, n: int, ctx=None) -> Summary:
    """Dispatch on the model's kind."""
    if model.kind == "regress":
        return summarise_regression(model, sample, n, ctx)
    return summarise_classification(model, sample, n, ctx)


@dataclass
class OracleRegressor:
    """Predicts each sentence's true ROUGE-SU4 F1 against the references."""

    kind: str = "regress"

    def decision_values(self, sample, ctx=None):
        from .labelling import score_sentences

        return score_sentences(sample)
