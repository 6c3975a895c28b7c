"""ROUGE-N, ROUGE-L and ROUGE-SU scorers over token lists, plus reward schemes.

All scorers take a candidate token list and a non-empty list of reference
token lists. Each reference is scored independently and the reference with
the highest F1 wins (first one on ties).
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .errors import ArgumentError


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "RougeScore":
        if precision + recall == 0:
            return cls(precision, recall, 0.0)
        return cls(precision, recall, 2 * precision * recall / (precision + recall))


ZERO = RougeScore(0.0, 0.0, 0.0)


class RewardScheme(enum.Enum):
    SU4_F1 = "su4f1"
    MEAN_2_L_F1 = "mean2l"


def _check_refs(references):
    if not references:
        raise ArgumentError("at least one reference is required")


def _best(scores: list[RougeScore]) -> RougeScore:
    best = scores[0]
    for s in scores[1:]:
        if s.f1 > best.f1:
            best = s
    return best


def _overlap_score(cand: Counter, ref: Counter) -> RougeScore:
    n_cand = sum(cand.values())
    n_ref = sum(ref.values())
    match = sum((cand & ref).values())
    p = match / n_cand if n_cand else 0.0
    r = match / n_ref if n_ref else 0.0
    return RougeScore.from_pr(p, r)


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def skip_bigrams(tokens: Sequence[str], max_gap: int = 4) -> Counter:
    """Skip-bigrams with at most ``max_gap`` intervening tokens, plus unigrams."""
    units = Counter((t,) for t in tokens)
    L = len(tokens)
    for i in range(L):
        for j in range(i + 1, min(L, i + max_gap + 2)):
            units[(tokens[i], tokens[j])] += 1
    return units


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_n(candidate, references, n: int = 2) -> RougeScore:
    if n < 1:
        raise ArgumentError(f"n must be >= 1, got {n}")
    _check_refs(references)
    cand = ngrams(candidate, n)
    return _best([_overlap_score(cand, ngrams(r, n)) for r in references])


def rouge_su(candidate, references, max_gap: int = 4) -> RougeScore:
    if max_gap < 0:
        raise ArgumentError(f"max_gap must be >= 0, got {max_gap}")
    _check_refs(references)
    cand = skip_bigrams(candidate, max_gap)
    return _best([_overlap_score(cand, skip_bigrams(r, max_gap)) for r in references])


def rouge_l(candidate, references) -> RougeScore:
    _check_refs(references)
    scores = []
    for ref in references:
        ell = lcs_length(candidate, ref)
        p = ell / len(candidate) if candidate else 0.0
        r = ell / len(ref) if ref else 0.0
        scores.append(RougeScore.from_pr(p, r))
    return _best(scores)


def reward(candidate, references, scheme: RewardScheme) -> float:
    scheme = RewardScheme(scheme)
    if scheme is RewardScheme.SU4_F1:
        return rouge_su(candidate, references, 4).f1
    return (rouge_n(candidate, references, 2).f1 + rouge_l(candidate, references).f1) / 2
