"""Commit-message normalization.

The pipeline is fixed: sentence split, contraction expansion, noise
stripping, tokenization, stop-word removal and lemmatization.  Every step
is a pure function so the same normal form is produced at training and
inference time.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

__all__ = [
    "StopWordSet",
    "NormalizedMessage",
    "expand_contractions",
    "strip_noise",
    "tokenize",
    "remove_stopwords",
    "lemmatize",
    "lemmatize_word",
    "split_sentences",
    "normalize",
    "default_stopwords",
]


def _data_lines(name: str) -> list[str]:
    text = resources.files("refdoc.data").joinpath(name).read_text(encoding="utf-8")
    return [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


def _data_table(name: str) -> dict[str, str]:
    out = {}
    for ln in _data_lines(name):
        key, value = ln.split("\t", 1)
        out[key.strip().lower()] = value.strip()
    return out


@dataclass(frozen=True)
class StopWordSet:
    default_words: frozenset = field(default_factory=frozenset)
    custom_words: frozenset = field(default_factory=frozenset)

    def __contains__(self, word: str) -> bool:
        return word in self.default_words or word in self.custom_words

    @property
    def words(self) -> frozenset:
        return self.default_words | self.custom_words

    @classmethod
    def from_files(cls, default_path=None, custom_path=None) -> "StopWordSet":
        def read(path, fallback):
            if path is None:
                return frozenset(w.strip().lower() for w in _data_lines(fallback))
            with open(path, encoding="utf-8") as fh:
                return frozenset(
                    ln.strip().lower() for ln in fh if ln.strip() and not ln.startswith("#")
                )

        return cls(read(default_path, "stopwords_en.txt"), read(custom_path, "custom_stopwords.txt"))


@lru_cache(maxsize=None)
def default_stopwords() -> StopWordSet:
    return StopWordSet.from_files()


@dataclass(frozen=True)
class NormalizedMessage:
    original: str
    sentences: tuple  # tuple of tuples of lemmas, one per non-empty sentence
    lemmas: tuple

    def text(self) -> str:
        return " ".join(self.lemmas)


# --- contractions -----------------------------------------------------------

_APOSTROPHES = str.maketrans({"’": "'", "‘": "'", "ʼ": "'"})


@lru_cache(maxsize=None)
def _contraction_regex():
    table = _data_table("contractions.tsv")
    keys = sorted(table, key=len, reverse=True)
    pattern = re.compile(
        r"(?<![A-Za-z'])(" + "|".join(re.escape(k) for k in keys) + r")(?![A-Za-z'])",
        re.IGNORECASE,
    )
    return pattern, table


def expand_contractions(text: str) -> str:
    """Replace contractions like "I'm" with their expansion.

    Matching ignores case; the first letter of the replacement takes the
    case of the first letter of the match.
    """
    if not text:
        return text
    pattern, table = _contraction_regex()
    text = text.translate(_APOSTROPHES)

    def repl(m):
        found = m.group(0)
        expansion = table[found.lower()]
        if found[0].isupper():
            return expansion[0].upper() + expansion[1:]
        return expansion

    return pattern.sub(repl, text)


# --- noise ------------------------------------------------------------------

_URL = re.compile(r"(?:[A-Za-z][A-Za-z0-9+.\-]*://|www\.)\S*", re.IGNORECASE)
# trailer markers whose hyphens are deleted so they survive as one stop word
_MARKERS = re.compile(
    r"\b(git-svn-id|signed-off-by|reviewed-on|tested-by|change-id)\b", re.IGNORECASE
)
_NON_ALPHA = re.compile(r"[^a-z]+")


def strip_noise(text: str) -> str:
    """Lowercase and drop URLs, digits, punctuation and one-letter words."""
    text = _URL.sub(" ", text)
    text = _MARKERS.sub(lambda m: m.group(0).replace("-", ""), text)
    text = _NON_ALPHA.sub(" ", text.lower())
    return " ".join(w for w in text.split() if len(w) > 1)


def tokenize(text: str) -> list[str]:
    return text.split()


def remove_stopwords(tokens, stops: StopWordSet | None = None) -> list[str]:
    stops = default_stopwords() if stops is None else stops
    return [t for t in tokens if t not in stops]


# --- lemmatization ----------------------------------------------------------

@lru_cache(maxsize=None)
def _lexicon() -> frozenset:
    return frozenset(_data_lines("lemma_lexicon.txt"))


@lru_cache(maxsize=None)
def _irregular() -> dict:
    return _data_table("irregular_lemmas.tsv")


_VOWELS = set("aeiouy")


def _undouble(stem: str) -> str | None:
    if len(stem) >= 3 and stem[-1] == stem[-2] and stem[-1] not in _VOWELS and stem[-1] not in "lsz":
        return stem[:-1]
    return None


def _candidates(word: str) -> list[str]:
    """Rule-derived base-form guesses, most specific first."""
    out = []
    if word.endswith("ies") and len(word) > 4:
        out.append(word[:-3] + "y")
    if word.endswith("es") and len(word) > 3:
        out += [word[:-1], word[:-2]]
    elif word.endswith("s") and len(word) > 3 and not word.endswith(("ss", "us", "is")):
        out.append(word[:-1])
    for suffix in ("ing", "ed"):
        if word.endswith(suffix) and len(word) - len(suffix) >= 2:
            stem = word[: -len(suffix)]
            if suffix == "ed" and stem.endswith("i"):
                out.append(stem[:-1] + "y")
            out += [stem + "e", stem]
            undoubled = _undouble(stem)
            if undoubled:
                out.append(undoubled)
    return out


def _fallback(word: str) -> str:
    # no lexicon hit: conservative suffix stripping
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("sses"):
        return word[:-2]
    if word.endswith("es") and len(word) > 4 and word[:-2].endswith(("s", "x", "z", "ch", "sh")):
        return word[:-2]
    if word.endswith("s") and len(word) > 3 and not word.endswith(("ss", "us", "is", "ous")):
        return word[:-1]
    for suffix in ("ing", "ed"):
        stem = word[: -len(suffix)]
        if word.endswith(suffix) and len(stem) >= 3 and _VOWELS & set(stem):
            undoubled = _undouble(stem)
            if undoubled:
                return undoubled
            if stem.endswith(("at", "bl", "iz", "ur", "iv", "rc")):
                return stem + "e"
            return stem
    return word


def _lemma_step(word: str) -> str:
    irregular = _irregular()
    if word in irregular:
        return irregular[word]
    lexicon = _lexicon()
    if word in lexicon:
        return word
    for cand in _candidates(word):
        if cand in lexicon:
            return cand
    return _fallback(word)


@lru_cache(maxsize=65536)
def lemmatize_word(word: str) -> str:
    # iterate to a fixed point so lemmatization is idempotent
    for _ in range(8):
        nxt = _lemma_step(word)
        if nxt == word:
            break
        word = nxt
    return word


def lemmatize(tokens) -> list[str]:
    return [lemmatize_word(t) for t in tokens]


# --- pipeline ---------------------------------------------------------------

_SENTENCE_BREAK = re.compile(r"[.!?\n]+")


def split_sentences(message: str) -> list[str]:
    # a dot inside a URL is not a boundary
    spans, last = [], 0
    protected = [m.span() for m in _URL.finditer(message)]
    for m in _SENTENCE_BREAK.finditer(message):
        if any(a <= m.start() < b for a, b in protected):
            continue
        spans.append(message[last:m.start()])
        last = m.end()
    spans.append(message[last:])
    return [s for s in spans if s.strip()]


def _finish(lemmas, stops):
    # lemmatization can surface a stop word ("refactored" -> "refactor")
    return [w for w in lemmas if len(w) > 1 and w not in stops]


def normalize_sentence(sentence: str, stops: StopWordSet | None = None) -> list[str]:
    stops = default_stopwords() if stops is None else stops
    tokens = tokenize(strip_noise(expand_contractions(sentence)))
    return _finish(lemmatize(remove_stopwords(tokens, stops)), stops)


def normalize(message: str, stops: StopWordSet | None = None) -> NormalizedMessage:
    stops = default_stopwords() if stops is None else stops
    sentences = []
    for sentence in split_sentences(message or ""):
        lemmas = normalize_sentence(sentence, stops)
        if lemmas:
            sentences.append(tuple(lemmas))
    lemmas = tuple(w for s in sentences for w in s)
    return NormalizedMessage(original=message or "", sentences=tuple(sentences), lemmas=lemmas)
