"""Query-based extractive multi-document summarisation for question answering."""

__version__ = "0.1.0"

from .corpus import Sample, Sentence, ingest_bioasq, make_folds, split_sentences, tokenize
from .rouge import RewardScheme, RougeScore, reward, rouge_l, rouge_n, rouge_su

__all__ = [
    "RewardScheme",
    "RougeScore",
    "Sample",
    "Sentence",
    "ingest_bioasq",
    "make_folds",
    "reward",
    "rouge_l",
    "rouge_n",
    "rouge_su",
    "split_sentences",
    "tokenize",
]
