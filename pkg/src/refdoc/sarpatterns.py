"""Self-affirmed refactoring (SAR) phrase patterns.

A template such as ``Clean* up`` is a sequence of word templates; a word
ending in ``*`` matches any message word starting with that stem and
followed only by letters.  Matching runs on the raw lowercased message with
every non-alphanumeric character treated as a separator.
"""

from __future__ import annotations

import hashlib
import re
from collections import defaultdict
from dataclasses import dataclass, replace
from importlib import resources
from typing import Iterable

import numpy as np

from .errors import MalformedTemplate
from .stats import mann_whitney_u, wilcoxon_rank_sum

__all__ = [
    "SCOPES",
    "SarPattern",
    "PatternCatalog",
    "OccurrenceVector",
    "compile_pattern",
    "load_catalog",
    "message_words",
    "scan_message",
    "matches",
    "occurrence_vectors",
    "pattern_pvalues",
    "significance_filter",
    "label_split",
    "label_split_test",
]

SCOPES = ("generic", "BugFix", "CodeSmell", "ExternalQA", "Functional", "InternalQA")
SIGNIFICANT_NOTE = "reported-significant"

_WORD = re.compile(r"[a-z0-9]+")
_PIECE = re.compile(r"[a-z0-9]+\*?")
_CAMEL = re.compile(r"[A-Z]?[a-z0-9]+|[A-Z]+(?![a-z])")


def message_words(message: str) -> list[str]:
    return _WORD.findall(message.lower())


@dataclass(frozen=True)
class SarPattern:
    text: str
    words: tuple  # word templates, e.g. ("clean*", "up")
    alternatives: tuple  # word-template sequences that count as a match
    scope: str = "generic"
    id: int = -1
    reported_significant: bool = False
    significant: bool | None = None

    def __str__(self):
        return self.text


def _split_word(raw: str) -> list[tuple[str, ...]]:
    """Word templates for one whitespace-delimited template token.

    Returns alternatives: CamelCase tokens yield the fused form and the
    split form.
    """
    pieces = []
    for chunk in re.split(r"[^A-Za-z0-9*]+", raw):
        if not chunk:
            continue
        low = chunk.lower()
        if not _PIECE.fullmatch(low):
            raise MalformedTemplate(f"bad word template {raw!r}: '*' must end a non-empty word")
        pieces.append(chunk)
    if not pieces:
        return []
    fused = tuple(p.lower() for p in pieces)
    alts = [fused]
    camel = []
    for p in pieces:
        star = p.endswith("*")
        parts = _CAMEL.findall(p.rstrip("*"))
        if "".join(parts) != p.rstrip("*"):
            parts = [p.rstrip("*")]
        parts = [q.lower() for q in parts]
        if star:
            parts[-1] += "*"
        camel.extend(parts)
    if tuple(camel) != fused:
        alts.append(tuple(camel))
    return alts


def compile_pattern(template_text: str, scope: str = "generic", id: int = -1, reported_significant: bool = False) -> SarPattern:
    if scope not in SCOPES:
        raise ValueError(f"unknown scope {scope!r}")
    tokens = template_text.split()
    if not tokens:
        raise MalformedTemplate("empty template")
    seqs = [()]
    for tok in tokens:
        alts = _split_word(tok)
        if not alts:
            continue
        seqs = [s + a for s in seqs for a in alts]
    if not seqs[0]:
        raise MalformedTemplate(f"template {template_text!r} has no words")
    return SarPattern(
        text=template_text.strip(),
        words=seqs[0],
        alternatives=tuple(dict.fromkeys(seqs)),
        scope=scope,
        id=id,
        reported_significant=reported_significant,
    )


def _word_ok(template: str, word: str) -> bool:
    if template.endswith("*"):
        stem = template[:-1]
        rest = word[len(stem):]
        return word.startswith(stem) and (not rest or rest.isalpha())
    return template == word


class PatternCatalog:
    """Immutable list of patterns with a first-word index for fast scanning."""

    def __init__(self, patterns: Iterable[SarPattern], version: str = ""):
        self.patterns = tuple(patterns)
        self.version = version
        self._exact = defaultdict(list)
        self._prefix = defaultdict(list)
        for p in self.patterns:
            for alt in p.alternatives:
                head = alt[0]
                if head.endswith("*"):
                    self._prefix[head[:-1]].append((p, alt))
                else:
                    self._exact[head].append((p, alt))

    def __len__(self):
        return len(self.patterns)

    def __iter__(self):
        return iter(self.patterns)

    def __getitem__(self, i):
        return self.patterns[i]

    def by_scope(self, scope: str) -> "PatternCatalog":
        return PatternCatalog([p for p in self.patterns if p.scope == scope], self.version)

    def find(self, text: str) -> list[SarPattern]:
        return [p for p in self.patterns if p.text.lower() == text.lower()]

    def _candidates(self, word: str):
        yield from self._exact.get(word, ())
        # a prefix stem must cover every digit of the word
        last_digit = max((i for i, ch in enumerate(word) if ch.isdigit()), default=-1)
        for cut in range(max(1, last_digit + 1), len(word) + 1):
            yield from self._prefix.get(word[:cut], ())

    def scan_words(self, words: list[str]) -> set:
        found = set()
        for i, w in enumerate(words):
            for pat, alt in self._candidates(w):
                if pat in found or i + len(alt) > len(words):
                    continue
                if all(_word_ok(t, words[i + j]) for j, t in enumerate(alt[1:], 1)):
                    found.add(pat)
        return found


def load_catalog(path=None) -> PatternCatalog:
    """Read a ``scope<TAB>template[<TAB>note]`` catalog; defaults to the shipped one."""
    if path is None:
        raw = resources.files("refdoc.data").joinpath("sar_catalog.tsv").read_bytes()
    else:
        with open(path, "rb") as fh:
            raw = fh.read()
    patterns = []
    for lineno, line in enumerate(raw.decode("utf-8").splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) < 2:
            raise MalformedTemplate(f"line {lineno}: expected scope<TAB>template")
        note = fields[2].strip() if len(fields) > 2 else ""
        patterns.append(compile_pattern(fields[1], fields[0].strip(), len(patterns), note == SIGNIFICANT_NOTE))
    version = "sha256:" + hashlib.sha256(raw).hexdigest()[:16]
    return PatternCatalog(patterns, version)


def _as_catalog(patterns) -> PatternCatalog:
    if isinstance(patterns, PatternCatalog):
        return patterns
    compiled = [p if isinstance(p, SarPattern) else compile_pattern(p, id=i) for i, p in enumerate(patterns)]
    return PatternCatalog(compiled)


def scan_message(message: str, catalog) -> set:
    """Patterns of ``catalog`` occurring in ``message`` (each at most once)."""
    return _as_catalog(catalog).scan_words(message_words(message))


def matches(message: str, pattern: SarPattern | str) -> bool:
    return bool(scan_message(message, [pattern]))


@dataclass(frozen=True)
class OccurrenceVector:
    pattern: SarPattern
    projects: tuple
    counts: np.ndarray

    def __len__(self):
        return len(self.counts)


def _message(item) -> tuple[str, str]:
    commit = getattr(item, "commit", item)
    return commit.project_id, commit.message


def _tally(catalog: PatternCatalog, corpus, slot: dict) -> np.ndarray:
    counts = np.zeros((len(catalog), len(slot)), dtype=np.int64)
    row = {p: i for i, p in enumerate(catalog.patterns)}
    for item in corpus:
        project, message = _message(item)
        for p in catalog.scan_words(message_words(message)):
            counts[row[p], slot[project]] += 1
    return counts


def occurrence_vectors(catalog, refactoring_corpus, nonrefactoring_corpus, projects=None) -> dict:
    """Per-project matching-commit counts of every pattern in both corpora.

    ``projects`` fixes the slot order; by default it is the sorted union of
    project ids seen in either corpus.
    """
    catalog = _as_catalog(catalog)
    ref = list(refactoring_corpus)
    non = list(nonrefactoring_corpus)
    if projects is None:
        projects = sorted({_message(c)[0] for c in ref} | {_message(c)[0] for c in non})
    projects = tuple(projects)
    slot = {p: i for i, p in enumerate(projects)}
    a = _tally(catalog, ref, slot)
    b = _tally(catalog, non, slot)
    return {
        p: (OccurrenceVector(p, projects, a[i]), OccurrenceVector(p, projects, b[i]))
        for i, p in enumerate(catalog.patterns)
    }


def pattern_pvalues(pairs: dict, alternative: str = "greater") -> dict:
    """Mann-Whitney result per pattern, refactoring counts vs the rest."""
    return {p: mann_whitney_u(r.counts, n.counts, alternative) for p, (r, n) in pairs.items()}


def significance_filter(pairs: dict, alpha: float = 0.05, version: str = "") -> PatternCatalog:
    """Flag each pattern whose refactoring occurrences are significantly higher.

    Nothing is dropped; non-significant patterns get ``significant=False``.
    """
    results = pattern_pvalues(pairs, "greater")
    flagged = [replace(p, significant=bool(results[p].p_value < alpha)) for p in pairs]
    return PatternCatalog(flagged, version)


def label_split(refcommits, patternset) -> dict:
    """Per refactoring kind: (operations in labeled commits, operations in unlabeled commits).

    A commit is labeled when its message matches any pattern of
    ``patternset``; every operation inherits its commit's status.
    """
    catalog = _as_catalog(patternset)
    out = defaultdict(lambda: [0, 0])
    for rc in refcommits:
        labeled = bool(catalog.scan_words(message_words(rc.commit.message))) if len(catalog) else False
        for op in rc.operations:
            out[op.kind][0 if labeled else 1] += 1
    return {kind: tuple(v) for kind, v in sorted(out.items())}


def label_split_test(split: dict, alternative: str = "two_sided"):
    """Rank-sum comparison of per-kind operation counts, labeled vs unlabeled.

    Two-sided by default since neither direction is assumed here.
    """
    if not split:
        raise ValueError("label split is empty")
    labeled = [a for a, _ in split.values()]
    unlabeled = [b for _, b in split.values()]
    return wilcoxon_rank_sum(labeled, unlabeled, alternative)
