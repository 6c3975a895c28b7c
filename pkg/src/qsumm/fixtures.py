"""Synthetic corpora bundled for tests, demos and the acceptance suite.

``fixture_corpus`` builds 30 question/snippet/reference samples in which the
sentences that best match the reference are spread through the input rather
than concentrated at the front. ``toy_rl_corpus`` is the minimal REINFORCE
sanity task: one sentence equals the reference, five share no vocabulary
with it.
"""

from __future__ import annotations

import random
from importlib import resources

import numpy as np

from .corpus import QUESTION_TYPES, Sample, loads_jsonl, tokenize
from .features import EmbeddingTable

FIXTURE_SEED = 2019
FIXTURE_SIZE = 30
FIXTURE_DIM = 16

_SYLLABLES = ["ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "ze", "pa", "do", "fe", "gu", "hi", "jo", "be"]

_FILLER = (
    "study patients results analysis cohort data method clinical observed reported "
    "significant trial group effect level cell expression measured sample review "
    "population baseline survey outcome follow period design assessed previous "
    "criteria hospital center evidence literature reports cases controls years"
).split()

_VERBS = ["regulates", "inhibits", "activates", "binds", "modulates", "suppresses", "induces"]


def _word(rng: random.Random, used: set) -> str:
    while True:
        w = "".join(rng.choice(_SYLLABLES) for _ in range(3))
        if w not in used:
            used.add(w)
            return w


def _filler_sentence(rng: random.Random) -> str:
    words = rng.sample(_FILLER, rng.randint(7, 11))
    return " ".join(words).capitalize() + "."


def _question(qtype, entity, disease):
    return {
        "summary": f"What is the role of {entity} in {disease}?",
        "factoid": f"Which pathway does {entity} act on in {disease}?",
        "yesno": f"Is {entity} associated with {disease}?",
        "list": f"List the targets of {entity} in {disease}.",
    }[qtype]


def fixture_corpus(seed: int = FIXTURE_SEED, size: int = FIXTURE_SIZE) -> list[Sample]:
    rng = random.Random(seed)
    used: set = set()
    samples = []
    for i in range(size):
        qtype = QUESTION_TYPES[i % len(QUESTION_TYPES)]
        entity, disease = _word(rng, used), _word(rng, used)
        keys = [_word(rng, used) for _ in range(6)]
        facts = [
            f"{entity.capitalize()} {rng.choice(_VERBS)} {keys[0]} and {keys[1]} in {disease}.",
            f"Loss of {entity} increases {keys[2]} levels and {keys[3]} activity.",
            f"The {keys[4]} pathway mediates {entity} effects on {keys[5]} in {disease}.",
        ]
        reference = " ".join(facts)
        # input sentences: paraphrased facts with filler words mixed in
        key_sents = []
        for fact in facts:
            words = fact.rstrip(".").split()
            words += rng.sample(_FILLER, 3)
            key_sents.append(" ".join(words) + ".")
        n_sent = 12
        slots = sorted(rng.sample(range(n_sent), len(key_sents)))
        body = [_filler_sentence(rng) for _ in range(n_sent)]
        for slot, sent in zip(slots, key_sents):
            body[slot] = sent
        snippets = [" ".join(body[j : j + 4]) for j in range(0, n_sent, 4)]
        refs = [reference]
        if i % 5 == 0:
            refs.append(" ".join(reversed(facts)))
        samples.append(Sample(f"fx{i:02d}", _question(qtype, entity, disease), qtype, tuple(snippets), tuple(refs)))
    return samples


def fixture_embeddings(samples=None, dim: int = FIXTURE_DIM, seed: int = FIXTURE_SEED) -> EmbeddingTable:
    """Random vectors where each sample's content words share a common direction.

    Components are scaled to roughly word2vec magnitudes (about 0.2).
    """
    samples = fixture_corpus() if samples is None else samples
    rng = np.random.default_rng(seed)
    vectors: dict[str, np.ndarray] = {}
    filler = set(_FILLER)
    for s in samples:
        centre = rng.normal(scale=0.2, size=dim)
        words = tokenize(s.question_text) + [t for snip in s.snippets for t in tokenize(snip)]
        for tok in dict.fromkeys(words):
            if tok in vectors:
                continue
            noise = rng.normal(scale=0.2, size=dim)
            vec = noise if tok in filler or len(tok) < 4 else centre + 0.5 * noise
            vectors[tok] = np.round(vec, 6)
    return EmbeddingTable(dim, vectors)


def dump_embeddings(table: EmbeddingTable) -> str:
    lines = [f"{len(table.vectors)} {table.dim}"]
    for tok, vec in table.vectors.items():
        lines.append(tok + " " + " ".join(f"{v:.6f}" for v in vec))
    return "\n".join(lines) + "\n"


def bundled_path(name: str):
    return resources.files("qsumm") / "data" / name


def load_bundled_fixture() -> list[Sample]:
    return loads_jsonl(bundled_path("fixture.jsonl").read_text(encoding="utf-8"))


def toy_rl_corpus() -> list[Sample]:
    """Three samples; in each exactly one sentence equals the reference."""
    specs = [
        (0, "Alpha beta gamma delta epsilon.", ["Red green blue.", "One two three four.", "Cat dog fish bird.",
                                                "Sun moon star sky.", "Rock paper stone."]),
        (2, "Kappa lambda mu nu xi.", ["North south east west.", "Apple pear plum.", "Iron copper zinc tin.",
                                        "Oak pine elm ash.", "Salt sugar rice corn."]),
        (5, "Omicron pi rho sigma tau.", ["Monday tuesday friday.", "Piano violin drum harp.", "Lake river sea pond.",
                                          "Wolf bear fox deer.", "Gold silver bronze medal."]),
    ]
    samples = []
    for k, (pos, ref, distractors) in enumerate(specs):
        sents = list(distractors)
        sents.insert(pos, ref)
        samples.append(Sample(f"toy{k}", f"Question {k} about {ref.split()[0].lower()}?", "summary",
                              (" ".join(sents),), (ref,)))
    return samples
