"""Splitting, cross-validated grid search, scoring and McNemar comparison."""

from __future__ import annotations

import math
import random
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from ..errors import FoldTooSmall, TooFewPerCategory
from .core import Category, Hyperparams
from .models import dataset_matrix, fit

__all__ = [
    "EvalReport",
    "McNemarResult",
    "stratified_split",
    "stratified_kfold",
    "evaluate",
    "score_predictions",
    "grid_search_cv",
    "mcnemar",
    "mcnemar_counts",
]

N_CLASSES = len(Category)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _by_category(labels) -> dict:
    groups = defaultdict(list)
    for i, lab in enumerate(labels):
        groups[Category(int(lab))].append(i)
    return dict(sorted(groups.items()))


def _test_counts(sizes: dict, test_frac: float) -> dict:
    """Per-category test sizes that sum to round(total * test_frac)."""
    exact = {c: n * test_frac for c, n in sizes.items()}
    counts = {c: min(sizes[c] - 1, max(0, _round_half_up(e))) for c, e in exact.items()}
    target = _round_half_up(sum(sizes.values()) * test_frac)
    diff = target - sum(counts.values())
    # nudge the categories whose rounding moved furthest from the exact share
    while diff != 0:
        step = 1 if diff > 0 else -1
        movable = [c for c in counts if 0 <= counts[c] + step <= sizes[c] - 1]
        if not movable:
            break
        c = max(movable, key=lambda c: (step * (exact[c] - counts[c]), -int(c)))
        counts[c] += step
        diff -= step
    return counts


def stratified_split(data, test_frac: float, seed: int = 42):
    """Shuffle within each category and hold out ``test_frac`` of it."""
    if not 0 < test_frac < 1:
        raise ValueError("test_frac must lie strictly between 0 and 1")
    data = list(data)
    groups = _by_category([d.label for d in data])
    small = {c.name: len(ix) for c, ix in groups.items() if len(ix) < 2}
    if small or not groups:
        raise TooFewPerCategory(f"every category needs at least 2 members, got {small or 'no data'}")
    counts = _test_counts({c: len(ix) for c, ix in groups.items()}, test_frac)
    rng = random.Random(seed)
    train_idx, test_idx = [], []
    for c, idx in groups.items():
        idx = list(idx)
        rng.shuffle(idx)
        test_idx += idx[: counts[c]]
        train_idx += idx[counts[c]:]
    rng.shuffle(train_idx)
    rng.shuffle(test_idx)
    return [data[i] for i in train_idx], [data[i] for i in test_idx]


def stratified_kfold(labels, k_folds: int, seed: int = 42):
    """Index folds with each category dealt round-robin across folds.

    Returns a list of ``(train_indices, test_indices)`` pairs.
    """
    groups = _by_category(labels)
    smallest = min((len(ix) for ix in groups.values()), default=0)
    if k_folds < 2 or k_folds > smallest:
        raise FoldTooSmall(f"k_folds={k_folds} needs 2 <= k <= smallest category size ({smallest})")
    rng = random.Random(seed)
    folds = [[] for _ in range(k_folds)]
    offset = 0
    for idx in groups.values():
        idx = list(idx)
        rng.shuffle(idx)
        for j, i in enumerate(idx):
            folds[(offset + j) % k_folds].append(i)
        offset += len(idx)
    out = []
    for f in range(k_folds):
        test = sorted(folds[f])
        train = sorted(i for g in range(k_folds) if g != f for i in folds[g])
        out.append((np.array(train, dtype=np.int64), np.array(test, dtype=np.int64)))
    return out


@dataclass
class EvalReport:
    per_category: dict  # Category -> (precision, recall, f1)
    micro_f1: float
    confusion: np.ndarray  # rows = true label, columns = predicted

    @property
    def accuracy(self) -> float:
        total = self.confusion.sum()
        return float(np.trace(self.confusion) / total) if total else 0.0

    @property
    def macro_f1(self) -> float:
        return float(np.mean([s[2] for s in self.per_category.values()]))

    def support(self, category) -> int:
        return int(self.confusion[int(category)].sum())

    def to_dict(self) -> dict:
        return {
            "per_category": {
                c.name: {"precision": p, "recall": r, "f1": f, "support": self.support(c)}
                for c, (p, r, f) in self.per_category.items()
            },
            "micro_f1": self.micro_f1,
            "confusion": self.confusion.tolist(),
        }


def score_predictions(truth, predicted) -> EvalReport:
    truth = np.asarray([int(t) for t in truth], dtype=np.int64)
    predicted = np.asarray([int(p) for p in predicted], dtype=np.int64)
    if truth.size == 0:
        raise ValueError("cannot evaluate on an empty test set")
    confusion = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(confusion, (truth, predicted), 1)
    per = {}
    for c in Category:
        tp = confusion[c, c]
        fp = confusion[:, c].sum() - tp
        fn = confusion[c, :].sum() - tp
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        per[c] = (float(p), float(r), float(f))
    micro = float(np.trace(confusion) / truth.size)
    return EvalReport(per, micro, confusion)


def evaluate(model, test_set) -> EvalReport:
    test_set = list(test_set)
    predicted = model.predict_many([lc.vector for lc in test_set])
    return score_predictions([lc.label for lc in test_set], predicted)


def grid_search_cv(kind, grid, train_set, k_folds: int = 10, seed: int = 42, n_features: int | None = None):
    """Exhaustive search over ``grid`` by mean micro-F1 across stratified folds.

    Returns ``(best, score)``; ties keep the earliest grid point.
    """
    grid = [g if isinstance(g, Hyperparams) else Hyperparams(kind, tuple(dict(g).items())) for g in grid]
    if not grid:
        raise ValueError("grid is empty")
    train_set = list(train_set)
    X, y = dataset_matrix(train_set, n_features)
    folds = stratified_kfold(y, k_folds, seed)
    best, best_score = None, -1.0
    for params in grid:
        if params.kind != str(kind).upper():
            raise ValueError(f"grid point {params} is not a {kind} setting")
        scores = []
        for tr, te in folds:
            model = fit(params, X[tr], y[tr], seed)
            scores.append(score_predictions(y[te], model.predict_matrix(X[te])).micro_f1)
        score = float(np.mean(scores))
        if score > best_score:
            best, best_score = params, score
    return best, best_score


class McNemarResult:
    """Unpacks as ``(statistic, p_value)``; also carries the discordant counts."""

    def __init__(self, statistic: float, p_value: float, b: int, c: int, method: str):
        self.statistic = statistic
        self.p_value = p_value
        self.b = b
        self.c = c
        self.method = method

    def __iter__(self):
        return iter((self.statistic, self.p_value))

    def __repr__(self):
        return f"McNemarResult(statistic={self.statistic}, p_value={self.p_value}, b={self.b}, c={self.c}, method={self.method!r})"


def mcnemar_counts(b: int, c: int) -> McNemarResult:
    """McNemar test from the two discordant counts.

    Fewer than 25 discordant pairs use the exact two-sided binomial test
    (statistic = min(b, c)); otherwise the continuity-corrected chi-square.
    """
    b, c = int(b), int(c)
    n = b + c
    if n == 0:
        return McNemarResult(0.0, 1.0, b, c, "exact")
    if n < 25:
        k = min(b, c)
        tail = sum(math.comb(n, i) for i in range(k + 1))
        return McNemarResult(float(k), min(1.0, 2.0 * tail / 2.0 ** n), b, c, "exact")
    stat = (abs(b - c) - 1.0) ** 2 / n
    return McNemarResult(stat, math.erfc(math.sqrt(stat / 2.0)), b, c, "chi2")


def mcnemar(model_a, model_b, test_set) -> McNemarResult:
    test_set = list(test_set)
    vectors = [lc.vector for lc in test_set]
    pa = model_a.predict_many(vectors)
    pb = model_b.predict_many(vectors)
    b = c = 0
    for lc, a, bb in zip(test_set, pa, pb):
        ok_a, ok_b = a == lc.label, bb == lc.label
        b += ok_a and not ok_b
        c += ok_b and not ok_a
    return mcnemar_counts(b, c)
