"""Corpus ingestion: BioASQ-style JSON, sentence splitting, tokenisation and folds."""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from typing import Iterable

from .errors import ArgumentError, CorpusParseError, SchemaError

QUESTION_TYPES = ("summary", "factoid", "yesno", "list")

# Frozen abbreviation list (version 1). Lowercased, trailing period included.
ABBREVIATIONS = frozenset(
    {
        "e.g.",
        "i.e.",
        "fig.",
        "figs.",
        "al.",
        "vs.",
        "cf.",
        "approx.",
        "ca.",
        "resp.",
        "dr.",
        "mr.",
        "mrs.",
        "ms.",
        "prof.",
        "no.",
        "nos.",
        "vol.",
        "eq.",
        "ref.",
        "refs.",
        "sp.",
        "spp.",
        "st.",
    }
)
SPLITTER_VERSION = 1

_TOKEN_RE = re.compile(r"[^\W_]+")
_BOUNDARY_RE = re.compile(r"[.?!]\s+")


def tokenize(text: str) -> list[str]:
    """Lowercased maximal runs of Unicode letters and digits."""
    return _TOKEN_RE.findall(text.lower())


def _is_abbreviation(text: str, end: int) -> bool:
    # ``end`` is the index just past the punctuation mark.
    start = end
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    word = text[start:end].lower()
    if word == "al.":
        # only "et al." counts
        before = text[:start].rstrip().lower()
        return before.endswith("et") and (len(before) == 2 or not before[-3].isalnum())
    return word in ABBREVIATIONS


def split_sentences(text: str) -> list[str]:
    """Rule-based sentence splitter.

    A boundary is a ``.``, ``?`` or ``!`` followed by whitespace and then an
    uppercase letter or the end of the text, unless the word ending at the
    period is a known abbreviation. Spans are returned stripped of the
    separating whitespace.
    """
    spans = []
    start = 0
    for m in _BOUNDARY_RE.finditer(text):
        after = m.end()
        if after < len(text) and not text[after].isupper():
            continue
        punct_end = m.start() + 1
        if text[m.start()] == "." and _is_abbreviation(text, punct_end):
            continue
        span = text[start:punct_end].strip()
        if span:
            spans.append(span)
        start = after
    tail = text[start:].strip()
    if tail:
        spans.append(tail)
    return spans


@dataclass(frozen=True)
class Sentence:
    index: int
    snippet_index: int
    text: str
    tokens: tuple[str, ...]


def _derive_sentences(snippets: Iterable[str]) -> tuple[Sentence, ...]:
    out = []
    for s_idx, snippet in enumerate(snippets):
        for span in split_sentences(snippet):
            out.append(Sentence(len(out), s_idx, span, tuple(tokenize(span))))
    return tuple(out)


@dataclass(frozen=True)
class Sample:
    """One question with its snippets and reference ideal answers.

    ``sentences`` is derived from ``snippets`` and never passed in.
    """

    id: str
    question_text: str
    question_type: str
    snippets: tuple[str, ...]
    references: tuple[str, ...] = ()
    sentences: tuple[Sentence, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.question_type not in QUESTION_TYPES:
            raise SchemaError(
                f"unknown question type {self.question_type!r}", field="type"
            )
        object.__setattr__(self, "snippets", tuple(self.snippets))
        object.__setattr__(self, "references", tuple(self.references))
        object.__setattr__(self, "sentences", _derive_sentences(self.snippets))

    @property
    def question_tokens(self) -> list[str]:
        return tokenize(self.question_text)

    @property
    def reference_tokens(self) -> list[list[str]]:
        return [tokenize(r) for r in self.references]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "question": self.question_text,
            "type": self.question_type,
            "snippets": list(self.snippets),
            "references": list(self.references),
        }


def _byte_offset(text: str, char_pos: int) -> int:
    return len(text[:char_pos].encode("utf-8"))


def ingest_bioasq(json_text: str) -> list[Sample]:
    """Parse a BioASQ-style ``{"questions": [...]}`` document into samples."""
    try:
        doc = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise CorpusParseError(exc.msg, _byte_offset(json_text, exc.pos)) from None
    if not isinstance(doc, dict) or not isinstance(doc.get("questions"), list):
        raise SchemaError("top-level object must contain a 'questions' array", "questions")

    samples = []
    for i, q in enumerate(doc["questions"]):
        if not isinstance(q, dict):
            raise SchemaError(f"question {i} is not an object", "questions")
        for key in ("body", "type"):
            if key not in q:
                raise SchemaError(f"question {i}: missing field '{key}'", key)
        if q["type"] not in QUESTION_TYPES:
            raise SchemaError(f"question {i}: unknown type {q['type']!r}", "type")
        snippets = []
        for j, snip in enumerate(q.get("snippets", [])):
            if not isinstance(snip, dict) or "text" not in snip:
                raise SchemaError(f"question {i}: snippet {j} has no 'text'", "snippets")
            snippets.append(snip["text"])
        ideal = q.get("ideal_answer", [])
        if isinstance(ideal, str):
            ideal = [ideal]
        elif not isinstance(ideal, list) or not all(isinstance(a, str) for a in ideal):
            raise SchemaError(f"question {i}: bad 'ideal_answer'", "ideal_answer")
        samples.append(
            Sample(
                id=str(q.get("id", f"q{i}")),
                question_text=q["body"],
                question_type=q["type"],
                snippets=tuple(snippets),
                references=tuple(ideal),
            )
        )
    return samples


def to_bioasq(samples: Iterable[Sample]) -> str:
    questions = [
        {
            "id": s.id,
            "body": s.question_text,
            "type": s.question_type,
            "snippets": [{"text": t} for t in s.snippets],
            "ideal_answer": list(s.references),
        }
        for s in samples
    ]
    return json.dumps({"questions": questions}, ensure_ascii=False)


def dumps_jsonl(samples: Iterable[Sample]) -> str:
    """Canonical corpus format: one JSON object per line, fixed key order."""
    return "".join(json.dumps(s.to_dict(), ensure_ascii=False) + "\n" for s in samples)


def loads_jsonl(text: str) -> list[Sample]:
    samples = []
    # only "\n" separates records; str.splitlines would also break on U+2028 etc.
    for lineno, line in enumerate(text.split("\n"), 1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusParseError(f"line {lineno}: {exc.msg}", _byte_offset(line, exc.pos)) from None
        for key in ("id", "question", "type", "snippets"):
            if key not in d:
                raise SchemaError(f"line {lineno}: missing field '{key}'", key)
        if d["type"] not in QUESTION_TYPES:
            raise SchemaError(f"line {lineno}: unknown type {d['type']!r}", "type")
        samples.append(
            Sample(
                id=str(d["id"]),
                question_text=d["question"],
                question_type=d["type"],
                snippets=tuple(d["snippets"]),
                references=tuple(d.get("references", ())),
            )
        )
    return samples


def read_corpus(path) -> list[Sample]:
    """Load a corpus file, accepting either JSON-lines or BioASQ JSON."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError:
        doc = None
    if isinstance(doc, dict) and "questions" in doc:
        return ingest_bioasq(text)
    return loads_jsonl(text)


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    assignment: dict

    def fold(self, i: int) -> list:
        return [sid for sid, f in self.assignment.items() if f == i]

    def split(self, i: int, samples: list[Sample]) -> tuple[list[Sample], list[Sample]]:
        """(train, validation) samples for fold ``i``, in corpus order."""
        train = [s for s in samples if self.assignment[s.id] != i]
        val = [s for s in samples if self.assignment[s.id] == i]
        return train, val


def make_folds(sample_ids: list, k: int, seed: int) -> FoldAssignment:
    if k < 2:
        raise ArgumentError(f"k must be >= 2, got {k}")
    if k > len(sample_ids):
        raise ArgumentError(f"k={k} exceeds the number of samples ({len(sample_ids)})")
    if len(set(sample_ids)) != len(sample_ids):
        raise ArgumentError("sample ids must be unique")
    order = list(sample_ids)
    random.Random(seed).shuffle(order)
    return FoldAssignment(k, {sid: pos % k for pos, sid in enumerate(order)})
