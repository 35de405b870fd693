"""TF-IDF featurization over word n-grams."""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp

from .errors import EmptyCorpus
from .textprep import NormalizedMessage

__all__ = [
    "NgramConfig",
    "TfidfModel",
    "SparseVector",
    "ngrams",
    "fit_tfidf",
    "transform",
    "to_matrix",
    "top_features",
]


@dataclass(frozen=True)
class NgramConfig:
    min_n: int = 1
    max_n: int = 2
    max_features: int | None = 5000

    def __post_init__(self):
        if not 1 <= self.min_n <= self.max_n <= 3:
            raise ValueError(f"need 1 <= min_n <= max_n <= 3, got {self.min_n}, {self.max_n}")
        if self.max_features is not None and self.max_features < 1:
            raise ValueError("max_features must be positive or None")


@dataclass(frozen=True)
class SparseVector:
    entries: Mapping[int, float] = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    def norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.entries.values()))

    def get(self, index, default=0.0):
        return self.entries.get(index, default)


@dataclass
class TfidfModel:
    vocabulary: dict  # n-gram -> column
    idf: np.ndarray
    config: NgramConfig
    corpus_size: int

    def __len__(self):
        return len(self.vocabulary)

    @property
    def feature_names(self) -> list[str]:
        names = [""] * len(self.vocabulary)
        for gram, col in self.vocabulary.items():
            names[col] = gram
        return names

    def to_dict(self) -> dict:
        entries = [[gram, col, float(self.idf[col])] for gram, col in sorted(self.vocabulary.items(), key=lambda kv: kv[1])]
        return {
            "config": {
                "min_n": self.config.min_n,
                "max_n": self.config.max_n,
                "max_features": self.config.max_features,
            },
            "corpus_size": self.corpus_size,
            "entries": entries,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TfidfModel":
        config = NgramConfig(**data["config"])
        entries = data["entries"]
        vocabulary = {gram: int(col) for gram, col, _ in entries}
        idf = np.zeros(len(entries))
        for _, col, value in entries:
            idf[int(col)] = float(value)
        return cls(vocabulary, idf, config, int(data["corpus_size"]))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def loads(cls, text: str) -> "TfidfModel":
        return cls.from_dict(json.loads(text))


def _sentences(doc) -> Iterable[tuple]:
    if isinstance(doc, NormalizedMessage):
        return doc.sentences
    # a bare lemma sequence counts as a single sentence
    return (tuple(doc),)


def ngrams(doc, config: NgramConfig) -> Counter:
    """Count n-grams of a document; n-grams never cross sentence boundaries."""
    counts = Counter()
    for sentence in _sentences(doc):
        for n in range(config.min_n, config.max_n + 1):
            for i in range(len(sentence) - n + 1):
                counts[" ".join(sentence[i:i + n])] += 1
    return counts


def fit_tfidf(docs, config: NgramConfig | None = None) -> TfidfModel:
    """Learn the vocabulary and smoothed idf table of a corpus.

    Keeps the ``max_features`` n-grams with the highest total count (ties
    go to the lexicographically smaller n-gram); columns are assigned in
    lexicographic order.
    """
    config = config or NgramConfig()
    docs = list(docs)
    if not docs:
        raise EmptyCorpus("cannot fit TF-IDF on an empty corpus")
    total, df = Counter(), Counter()
    for doc in docs:
        counts = ngrams(doc, config)
        total.update(counts)
        df.update(counts.keys())
    ranked = sorted(total, key=lambda g: (-total[g], g))
    if config.max_features is not None:
        ranked = ranked[: config.max_features]
    vocabulary = {gram: col for col, gram in enumerate(sorted(ranked))}
    n = len(docs)
    idf = np.empty(len(vocabulary))
    for gram, col in vocabulary.items():
        idf[col] = math.log((1 + n) / (1 + df[gram])) + 1.0
    return TfidfModel(vocabulary, idf, config, n)


def transform(model: TfidfModel, doc) -> SparseVector:
    counts = ngrams(doc, model.config)
    weights = {}
    for gram, c in counts.items():
        col = model.vocabulary.get(gram)
        if col is not None:
            weights[col] = c * float(model.idf[col])
    norm = math.sqrt(sum(w * w for w in weights.values()))
    if norm == 0.0:
        return SparseVector({})
    return SparseVector({col: weights[col] / norm for col in sorted(weights)})


def to_matrix(vectors, n_features: int) -> sp.csr_matrix:
    """Stack sparse vectors into a CSR matrix with ``n_features`` columns."""
    indptr, indices, data = [0], [], []
    for vec in vectors:
        entries = vec.entries if isinstance(vec, SparseVector) else vec
        for col in sorted(entries):
            indices.append(col)
            data.append(entries[col])
        indptr.append(len(indices))
    return sp.csr_matrix(
        (np.asarray(data, dtype=float), np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
        shape=(len(indptr) - 1, n_features),
    )


def top_features(model: TfidfModel, trained_model, category, k: int) -> list[str]:
    """Rank vocabulary n-grams by the trained classifier's feature scores.

    Ties are broken lexicographically; ``k`` is clamped to the vocabulary
    size.  Raises ``UnsupportedModel`` for classifiers without feature
    scores (k-NN).
    """
    scores = np.asarray(trained_model.feature_scores(category), dtype=float)
    names = model.feature_names
    order = sorted(range(len(names)), key=lambda col: (-scores[col], names[col]))
    return [names[col] for col in order[: max(0, k)]]
