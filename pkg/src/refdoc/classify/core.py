"""Shared classification types: categories, labeled commits, hyperparameters."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any

from ..corpus import CommitRecord
from ..features import SparseVector

__all__ = ["Category", "LabeledCommit", "Hyperparams", "KINDS", "DEFAULT_PARAMS", "parse_category"]


class Category(enum.IntEnum):
    """Refactoring motivation, in canonical (tie-breaking) order."""

    Functional = 0
    BugFix = 1
    InternalQA = 2
    ExternalQA = 3
    CodeSmell = 4

    def __str__(self):
        return self.name


_ALIASES = {
    "functional": Category.Functional,
    "feature": Category.Functional,
    "bugfix": Category.BugFix,
    "bug fix": Category.BugFix,
    "internalqa": Category.InternalQA,
    "internal": Category.InternalQA,
    "internal qa": Category.InternalQA,
    "internal quality attribute": Category.InternalQA,
    "externalqa": Category.ExternalQA,
    "external": Category.ExternalQA,
    "external qa": Category.ExternalQA,
    "external quality attribute": Category.ExternalQA,
    "codesmell": Category.CodeSmell,
    "code smell": Category.CodeSmell,
    "code smell resolution": Category.CodeSmell,
}


def parse_category(value) -> Category:
    if isinstance(value, Category):
        return value
    if isinstance(value, int):
        return Category(value)
    key = " ".join(str(value).replace("_", " ").replace("-", " ").split()).lower()
    if key in _ALIASES:
        return _ALIASES[key]
    raise ValueError(f"unknown category label: {value!r}")


@dataclass(frozen=True)
class LabeledCommit:
    commit: CommitRecord | None
    label: Category
    vector: SparseVector | None = None

    def with_vector(self, vector: SparseVector) -> "LabeledCommit":
        return LabeledCommit(self.commit, self.label, vector)


KINDS = ("RF", "DT", "LR", "MNB", "KNN")

_ALLOWED = {
    "RF": {"max_depth", "n_estimators", "criterion", "bootstrap", "max_features"},
    "DT": {"criterion", "max_depth"},
    "LR": {"penalty", "c", "tol", "max_iter"},
    "MNB": {"alpha"},
    "KNN": {"n_neighbors", "weights"},
}

DEFAULT_PARAMS = {
    "RF": {"max_depth": 78, "n_estimators": 500, "criterion": "gini", "bootstrap": False},
    "DT": {"criterion": "gini", "max_depth": 75},
    "LR": {"penalty": "l1", "c": 1.0},
    "MNB": {"alpha": 2.63},
    "KNN": {"n_neighbors": 69, "weights": "uniform"},
}


def _positive_int(name, v):
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ValueError(f"{name} must be a positive integer, got {v!r}")


def _positive_real(name, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
        raise ValueError(f"{name} must be a positive number, got {v!r}")


@dataclass(frozen=True)
class Hyperparams:
    """A model kind plus its settings; missing settings take the defaults."""

    kind: str
    values: tuple = ()

    def __post_init__(self):
        kind = self.kind.upper()
        if kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        values = dict(DEFAULT_PARAMS[kind])
        values.update(dict(self.values))
        unknown = set(values) - _ALLOWED[kind]
        if unknown:
            raise ValueError(f"unknown {kind} settings: {sorted(unknown)}")
        _validate(kind, values)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "values", tuple(sorted(values.items())))

    @classmethod
    def of(cls, kind: str, **values) -> "Hyperparams":
        return cls(kind, tuple(values.items()))

    def __getitem__(self, name):
        return dict(self.values)[name]

    def get(self, name, default=None):
        return dict(self.values).get(name, default)

    def as_dict(self) -> dict[str, Any]:
        return dict(self.values)


def _validate(kind, v):
    if kind in ("RF", "DT"):
        if v["criterion"] != "gini":
            raise ValueError("criterion must be 'gini'")
        _positive_int("max_depth", v["max_depth"])
    if kind == "RF":
        _positive_int("n_estimators", v["n_estimators"])
        if not isinstance(v["bootstrap"], bool):
            raise ValueError("bootstrap must be a boolean")
        mf = v.get("max_features", "sqrt")
        if mf not in ("sqrt", None, "all"):
            _positive_int("max_features", mf)
    elif kind == "LR":
        if v["penalty"] != "l1":
            raise ValueError("penalty must be 'l1'")
        _positive_real("c", v["c"])
        if "tol" in v:
            _positive_real("tol", v["tol"])
        if "max_iter" in v:
            _positive_int("max_iter", v["max_iter"])
    elif kind == "MNB":
        _positive_real("alpha", v["alpha"])
    elif kind == "KNN":
        _positive_int("n_neighbors", v["n_neighbors"])
        if v["weights"] != "uniform":
            raise ValueError("weights must be 'uniform'")
