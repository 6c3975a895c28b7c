"""Per-sentence ROUGE targets and the labelling policies that binarise them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

from .corpus import Sample
from .errors import ArgumentError
from .rouge import rouge_su


@dataclass(frozen=True)
class Threshold:
    t: float

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise ArgumentError(f"threshold must lie in [0, 1], got {self.t}")

    @property
    def name(self):
        return f"threshold:{self.t:g}"


@dataclass(frozen=True)
class TopM:
    m: int

    def __post_init__(self):
        if isinstance(self.m, bool) or not isinstance(self.m, int) or self.m < 1:
            raise ArgumentError(f"m must be an integer >= 1, got {self.m!r}")

    @property
    def name(self):
        return f"topm:{self.m}"


LabellingPolicy = Union[Threshold, TopM]

# Soft targets: the raw sentence scores are used as-is.
SU4F1 = "su4f1"


def parse_labelling(spec: str):
    """Parse ``threshold:T``, ``topm:M`` or ``su4f1``."""
    spec = spec.strip().lower()
    if spec == SU4F1:
        return SU4F1
    kind, _, value = spec.partition(":")
    try:
        if kind == "threshold":
            return Threshold(float(value))
        if kind == "topm":
            return TopM(int(value))
    except ValueError:
        pass
    raise ArgumentError(f"bad labelling {spec!r}; expected threshold:T, topm:M or su4f1")


def labelling_name(policy) -> str:
    return policy if isinstance(policy, str) else policy.name


def score_sentences(sample: Sample) -> list[float]:
    """ROUGE-SU4 F1 of each sentence against all reference answers."""
    if not sample.references:
        raise ArgumentError(f"sample {sample.id} has no reference answers")
    refs = sample.reference_tokens
    return [rouge_su(list(s.tokens), refs, 4).f1 for s in sample.sentences]


def top_indices(values: Sequence[float], k: int) -> list[int]:
    """Indices of the ``k`` largest values, ties to the lower index, in rank order."""
    order = sorted(range(len(values)), key=lambda i: (-values[i], i))
    return order[:k]


def apply_policy(scores: Sequence[float], policy: LabellingPolicy) -> list[bool]:
    if isinstance(policy, Threshold):
        return [s > policy.t for s in scores]
    if isinstance(policy, TopM):
        chosen = set(top_indices(scores, policy.m))
        return [i in chosen for i in range(len(scores))]
    raise ArgumentError(f"not a labelling policy: {policy!r}")


def sentence_targets(sample: Sample, policy) -> list[float]:
    """Training targets for one sample: 0/1 labels, or raw scores for ``su4f1``."""
    scores = score_sentences(sample)
    if policy == SU4F1:
        return scores
    return [float(b) for b in apply_policy(scores, policy)]
