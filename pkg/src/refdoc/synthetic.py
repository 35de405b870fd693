"""Keyword-separable synthetic commit messages for end-to-end checks.

Each category draws its signal words from its own vocabulary; a fixed
share of every message (rounded) is drawn from a shared noise vocabulary.
"""

from __future__ import annotations

import hashlib
import random

from .classify.core import Category, LabeledCommit
from .corpus import CommitRecord

__all__ = ["VOCABULARIES", "NOISE_WORDS", "synthetic_messages", "synthetic_corpus"]

VOCABULARIES = {
    Category.Functional: (
        "feature", "support", "option", "endpoint", "export", "import", "upload", "login",
        "dashboard", "setting", "widget", "command", "plugin", "search", "filter", "profile",
    ),
    Category.BugFix: (
        "bug", "crash", "fix", "error", "exception", "null", "pointer", "leak",
        "wrong", "broken", "fail", "issue", "regression", "overflow", "deadlock", "typo",
    ),
    Category.InternalQA: (
        "coupling", "cohesion", "hierarchy", "interface", "inheritance", "abstraction", "package", "module",
        "dependency", "layer", "encapsulate", "structure", "design", "architecture", "component", "decouple",
    ),
    Category.ExternalQA: (
        "readability", "performance", "testability", "speed", "faster", "readable", "latency", "memory",
        "understandable", "usability", "reliability", "efficient", "throughput", "maintainable", "quick", "cache",
    ),
    Category.CodeSmell: (
        "duplicate", "smell", "long", "method", "god", "dead", "unused", "clone",
        "envy", "magic", "number", "large", "switch", "parameter", "lazy", "redundant",
    ),
}

NOISE_WORDS = (
    "update", "change", "file", "class", "project", "version", "test", "build",
    "work", "make", "new", "use", "value", "name", "part", "step",
)


def synthetic_messages(n: int = 1000, seed: int = 42, noise: float = 0.30, min_words: int = 4, max_words: int = 10):
    """Return ``n`` pairs of (message, Category), categories balanced round-robin."""
    rng = random.Random(seed)
    out = []
    cats = list(Category)
    for i in range(n):
        cat = cats[i % len(cats)]
        vocab = VOCABULARIES[cat]
        length = rng.randint(min_words, max_words)
        n_noise = int(noise * length + 0.5)
        words = [rng.choice(NOISE_WORDS) for _ in range(n_noise)]
        words += [rng.choice(vocab) for _ in range(length - n_noise)]
        rng.shuffle(words)
        text = " ".join(words)
        out.append((text[0].upper() + text[1:] + ".", cat))
    rng.shuffle(out)
    return out


def synthetic_corpus(n: int = 1000, seed: int = 42, noise: float = 0.30) -> list[LabeledCommit]:
    """Synthetic messages wrapped as labeled commits with stable fake hashes."""
    labeled = []
    for i, (msg, cat) in enumerate(synthetic_messages(n, seed, noise)):
        sha = hashlib.sha1(f"{seed}:{i}:{msg}".encode()).hexdigest()
        commit = CommitRecord(
            sha=sha,
            project_id=f"synthetic-{i % 10}",
            author_id="dev <dev@example.org>",
            timestamp=1_500_000_000 + 3600 * i,
            message=msg,
        )
        labeled.append(LabeledCommit(commit, cat))
    return labeled
