"""End-to-end glue: labeled CSV in, tuned and evaluated classifiers out."""

from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass

from .classify import (
    Category,
    Hyperparams,
    LabeledCommit,
    evaluate,
    grid_search_cv,
    mcnemar,
    parse_category,
    stratified_split,
    train,
)
from .classify.models import dumps_model, loads_model
from .corpus import CommitRecord
from .features import NgramConfig, TfidfModel, fit_tfidf, transform
from .textprep import normalize

__all__ = [
    "TextClassifier",
    "read_labeled_csv",
    "write_labeled_csv",
    "expand_grid",
    "load_grid",
    "vectorize",
    "run_experiment",
    "SMALL_GRIDS",
]

# compact grids around the shipped defaults, cheap enough for desk-scale runs
SMALL_GRIDS = {
    "RF": {"max_depth": [10, 30, 78], "n_estimators": [100]},
    "DT": {"max_depth": [10, 30, 75]},
    "LR": {"c": [0.1, 1.0, 10.0]},
    "MNB": {"alpha": [0.1, 1.0, 2.63]},
    "KNN": {"n_neighbors": [5, 25, 69]},
}


@dataclass
class TextClassifier:
    """A fitted featurizer together with the classifier trained on its vectors."""

    tfidf: TfidfModel
    model: object

    def vector(self, message: str):
        return transform(self.tfidf, normalize(message))

    def classify(self, message: str) -> Category:
        return self.model.predict_vector(self.vector(message))

    def classify_many(self, messages) -> list:
        return self.model.predict_many([self.vector(m) for m in messages])

    def dumps(self) -> str:
        envelope = json.loads(dumps_model(self.model))
        envelope["featurizer"] = self.tfidf.to_dict()
        return json.dumps(envelope, sort_keys=True, separators=(",", ":"))

    @classmethod
    def loads(cls, text: str) -> "TextClassifier":
        envelope = json.loads(text)
        tfidf = TfidfModel.from_dict(envelope.pop("featurizer"))
        return cls(tfidf, loads_model(json.dumps(envelope)))


def read_labeled_csv(path) -> list[LabeledCommit]:
    """Rows with columns sha, project_id, message, label."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            commit = CommitRecord(
                project_id=row.get("project_id", ""),
                sha=row["sha"].strip().lower(),
                author_id=row.get("author_id", ""),
                timestamp=int(row.get("timestamp") or 0),
                message=row["message"],
            )
            out.append(LabeledCommit(commit, parse_category(row["label"])))
    return out


def write_labeled_csv(labeled, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["sha", "project_id", "message", "label"])
        for lc in labeled:
            writer.writerow([lc.commit.sha, lc.commit.project_id, lc.commit.message, lc.label.name])


def expand_grid(kind: str, grid) -> list[Hyperparams]:
    """A grid given as {name: [values]} (cartesian product) or a list of dicts."""
    if isinstance(grid, dict):
        names = sorted(grid)
        combos = itertools.product(*[grid[n] if isinstance(grid[n], list) else [grid[n]] for n in names])
        return [Hyperparams(kind, tuple(zip(names, combo))) for combo in combos]
    return [Hyperparams(kind, tuple(dict(point).items())) for point in grid]


def load_grid(path, kind: str) -> list[Hyperparams]:
    with open(path, encoding="utf-8") as fh:
        grid = json.load(fh)
    if isinstance(grid, dict) and kind.upper() in grid:
        grid = grid[kind.upper()]
    return expand_grid(kind, grid)


def vectorize(labeled, config: NgramConfig | None = None, tfidf: TfidfModel | None = None):
    """Normalize messages, fit TF-IDF unless given, and attach vectors."""
    labeled = list(labeled)
    docs = [normalize(lc.commit.message) for lc in labeled]
    if tfidf is None:
        tfidf = fit_tfidf(docs, config or NgramConfig())
    return tfidf, [lc.with_vector(transform(tfidf, d)) for lc, d in zip(labeled, docs)]


def run_experiment(labeled, kinds=("RF", "DT", "LR", "MNB", "KNN"), grids=None, seed: int = 42,
                   test_frac: float = 0.25, k_folds: int = 10, config: NgramConfig | None = None) -> dict:
    """Split, fit TF-IDF on the training part, tune each kind by CV, score on the held-out part.

    Returns ``{"tfidf", "models", "best", "cv_score", "reports", "mcnemar"}``;
    McNemar compares RF with every other kind when RF is included.
    """
    grids = SMALL_GRIDS if grids is None else grids
    train_raw, test_raw = stratified_split(list(labeled), test_frac, seed)
    tfidf, train_set = vectorize(train_raw, config)
    _, test_set = vectorize(test_raw, tfidf=tfidf)
    n = len(tfidf)
    out = {"tfidf": tfidf, "models": {}, "best": {}, "cv_score": {}, "reports": {}, "mcnemar": {}}
    for kind in kinds:
        grid = grids.get(kind)
        points = expand_grid(kind, grid) if grid is not None else [Hyperparams(kind)]
        best, score = grid_search_cv(kind, points, train_set, k_folds, seed, n_features=n)
        model = train(kind, best, train_set, seed, n_features=n)
        out["best"][kind] = best
        out["cv_score"][kind] = score
        out["models"][kind] = model
        out["reports"][kind] = evaluate(model, test_set)
    if "RF" in out["models"]:
        for kind, model in out["models"].items():
            if kind != "RF":
                out["mcnemar"][kind] = mcnemar(out["models"]["RF"], model, test_set)
    out["test_set"] = test_set
    return out
