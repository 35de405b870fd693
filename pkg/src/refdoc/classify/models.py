"""The five classifiers: random forest, CART, L1 logistic regression,
multinomial naive Bayes and k-nearest neighbours.

Every model predicts an integer category index; all ties resolve to the
lowest canonical category (or lowest training index for k-NN distances).
"""

from __future__ import annotations

import json
import math

import numpy as np
import scipy.sparse as sp

from ..errors import EmptyTrainingSet, KTooLarge, UnsupportedModel
from ..features import SparseVector, to_matrix
from .cart import Tree, build_tree, predict_votes
from .core import Category, Hyperparams, parse_category

__all__ = [
    "TrainedModel",
    "RandomForestModel",
    "DecisionTreeModel",
    "LogisticRegressionModel",
    "NaiveBayesModel",
    "KNeighborsModel",
    "fit",
    "train",
    "predict",
    "dumps_model",
    "loads_model",
    "dataset_matrix",
]

N_CLASSES = len(Category)
FORMAT = "refdoc-model/1"


def _first_argmax(scores: np.ndarray) -> np.ndarray:
    # np.argmax already returns the first maximum along the axis
    return np.argmax(scores, axis=-1)


def _tree_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, index]).generate_state(1)[0])


class TrainedModel:
    kind = ""

    def __init__(self, params: Hyperparams, seed: int, n_features: int):
        self.params = params
        self.seed = int(seed)
        self.n_features = int(n_features)

    # subclasses implement fit / predict_matrix / payload
    def predict_matrix(self, X) -> np.ndarray:
        raise NotImplementedError

    def feature_scores(self, category) -> np.ndarray:
        raise UnsupportedModel(f"{self.kind} exposes no feature scores")

    def payload(self) -> dict:
        raise NotImplementedError

    def matrix(self, vectors) -> sp.csr_matrix:
        """Stack vectors into this model's feature space; unknown columns are dropped."""
        kept = []
        for v in vectors:
            entries = v.entries if isinstance(v, SparseVector) else v
            kept.append({c: w for c, w in entries.items() if 0 <= c < self.n_features})
        return to_matrix(kept, self.n_features)

    def predict_many(self, vectors) -> list[Category]:
        vectors = list(vectors)
        if not vectors:
            return []
        return [Category(int(k)) for k in self.predict_matrix(self.matrix(vectors))]

    def predict_vector(self, vector: SparseVector) -> Category:
        return self.predict_many([vector])[0]


class _TreeEnsemble(TrainedModel):
    def __init__(self, params, seed, n_features, trees=()):
        super().__init__(params, seed, n_features)
        self.trees = list(trees)

    def votes(self, X) -> np.ndarray:
        return predict_votes(self.trees, sp.csr_matrix(X), N_CLASSES)

    def predict_matrix(self, X):
        return _first_argmax(self.votes(X))

    def importances(self) -> np.ndarray:
        total = np.zeros(self.n_features)
        for t in self.trees:
            s = t.importance.sum()
            if s > 0:
                total += t.importance / s
        return total / max(len(self.trees), 1)

    def feature_scores(self, category):
        return self.importances()

    def payload(self):
        return {"n_features": self.n_features, "trees": [t.to_dict() for t in self.trees]}


class DecisionTreeModel(_TreeEnsemble):
    kind = "DT"

    def fit(self, X, y):
        self.trees = [build_tree(X, y, N_CLASSES, self.params["max_depth"])]
        return self


class RandomForestModel(_TreeEnsemble):
    """Forest of CART trees.

    Without bootstrap every tree sees the full training set and the only
    randomness is the per-split feature draw.
    """

    kind = "RF"

    def max_features(self):
        mf = self.params.get("max_features", "sqrt")
        if mf in (None, "all"):
            return None
        if mf == "sqrt":
            return max(1, math.ceil(math.sqrt(self.n_features)))
        return int(mf)

    def fit(self, X, y):
        X = sp.csr_matrix(X)
        y = np.asarray(y)
        mf = self.max_features()
        trees = []
        for i in range(self.params["n_estimators"]):
            seed = _tree_seed(self.seed, i)
            Xi, yi = X, y
            if self.params["bootstrap"]:
                rows = np.random.default_rng(seed).integers(0, X.shape[0], X.shape[0])
                Xi, yi = X[rows], y[rows]
            trees.append(build_tree(Xi, yi, N_CLASSES, self.params["max_depth"], mf, seed))
        self.trees = trees
        return self


class LogisticRegressionModel(TrainedModel):
    """One-vs-rest L1 logistic regression fitted by accelerated proximal gradient.

    Each binary problem minimises ``sum(log(1 + exp(-y * (Xw + b)))) +
    ||w||_1 / c``; the intercept is not penalised.
    """

    kind = "LR"

    def __init__(self, params, seed, n_features, coef=None, intercept=None):
        super().__init__(params, seed, n_features)
        self.coef = np.zeros((N_CLASSES, n_features)) if coef is None else np.asarray(coef, dtype=float)
        self.intercept = np.zeros(N_CLASSES) if intercept is None else np.asarray(intercept, dtype=float)
        self.n_iter = [0] * N_CLASSES

    def fit(self, X, y):
        X = sp.csr_matrix(X)
        y = np.asarray(y)
        lam = 1.0 / float(self.params["c"])
        tol = float(self.params.get("tol", 1e-4))
        max_iter = int(self.params.get("max_iter", 1000))
        for k in range(N_CLASSES):
            target = np.where(y == k, 1.0, -1.0)
            w, b, it = _fista_l1_logistic(X, target, lam, tol, max_iter)
            self.coef[k], self.intercept[k], self.n_iter[k] = w, b, it
        return self

    def decision_function(self, X):
        return np.asarray(sp.csr_matrix(X) @ self.coef.T) + self.intercept

    def predict_matrix(self, X):
        return _first_argmax(self.decision_function(X))

    def feature_scores(self, category):
        return self.coef[int(parse_category(category))]

    def payload(self):
        rows = []
        for k in range(N_CLASSES):
            nz = np.flatnonzero(self.coef[k])
            rows.append({"index": nz.tolist(), "value": self.coef[k, nz].tolist()})
        return {"n_features": self.n_features, "coef": rows, "intercept": self.intercept.tolist()}


def _logistic_loss(X, y, w, b):
    margin = y * (X @ w + b)
    return float(np.logaddexp(0.0, -margin).sum())


def _logistic_grad(X, y, w, b):
    margin = y * (X @ w + b)
    # d/dm log(1+exp(-m)) = -sigmoid(-m)
    s = -y * np.exp(-np.logaddexp(0.0, margin))
    return X.T @ s, float(s.sum())


def _fista_l1_logistic(X, y, lam, tol, max_iter):
    n_features = X.shape[1]
    w = np.zeros(n_features)
    b = 0.0
    zw, zb = w.copy(), b
    t = 1.0
    L = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        f_z = _logistic_loss(X, y, zw, zb)
        gw, gb = _logistic_grad(X, y, zw, zb)
        while True:
            step = 1.0 / L
            vw = zw - step * gw
            nw = np.sign(vw) * np.maximum(np.abs(vw) - lam * step, 0.0)
            nb = zb - step * gb
            dw, db = nw - zw, nb - zb
            bound = f_z + gw @ dw + gb * db + 0.5 * L * (dw @ dw + db * db)
            if _logistic_loss(X, y, nw, nb) <= bound + 1e-12:
                break
            L *= 2.0
        t_next = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        change = max(np.max(np.abs(nw - w)) if n_features else 0.0, abs(nb - b))
        mom = (t - 1.0) / t_next
        zw = nw + mom * (nw - w)
        zb = nb + mom * (nb - b)
        w, b, t = nw, nb, t_next
        if change <= tol:
            break
    return w, b, it


class NaiveBayesModel(TrainedModel):
    """Multinomial naive Bayes over (fractional) TF-IDF weights."""

    kind = "MNB"

    def __init__(self, params, seed, n_features, class_log_prior=None, feature_log_prob=None):
        super().__init__(params, seed, n_features)
        self.class_log_prior = None if class_log_prior is None else np.asarray(class_log_prior, dtype=float)
        self.feature_log_prob = None if feature_log_prob is None else np.asarray(feature_log_prob, dtype=float)

    def fit(self, X, y):
        X = sp.csr_matrix(X)
        y = np.asarray(y)
        alpha = float(self.params["alpha"])
        onehot = np.zeros((len(y), N_CLASSES))
        onehot[np.arange(len(y)), y] = 1.0
        class_count = onehot.sum(axis=0)
        with np.errstate(divide="ignore"):
            self.class_log_prior = np.log(class_count / class_count.sum())
        feature_count = np.asarray((X.T @ onehot).T)  # classes x features
        smoothed = feature_count + alpha
        self.feature_log_prob = np.log(smoothed) - np.log(smoothed.sum(axis=1, keepdims=True))
        return self

    def joint_log_likelihood(self, X):
        return np.asarray(sp.csr_matrix(X) @ self.feature_log_prob.T) + self.class_log_prior

    def predict_matrix(self, X):
        return _first_argmax(self.joint_log_likelihood(X))

    def feature_scores(self, category):
        return self.feature_log_prob[int(parse_category(category))]

    def payload(self):
        prior = [None if not np.isfinite(v) else float(v) for v in self.class_log_prior]
        return {"n_features": self.n_features, "class_log_prior": prior,
                "feature_log_prob": self.feature_log_prob.tolist()}


class KNeighborsModel(TrainedModel):
    """Plurality vote of the nearest training vectors (Euclidean distance)."""

    kind = "KNN"

    def __init__(self, params, seed, n_features, X=None, y=None):
        super().__init__(params, seed, n_features)
        self.X = None if X is None else sp.csr_matrix(X)
        self.y = None if y is None else np.asarray(y, dtype=np.int64)
        self._dense = None

    def fit(self, X, y):
        k = self.params["n_neighbors"]
        if k > X.shape[0]:
            raise KTooLarge(f"n_neighbors={k} exceeds the {X.shape[0]} training vectors")
        self.X = sp.csr_matrix(X, dtype=float)
        self.y = np.asarray(y, dtype=np.int64)
        self._dense = None
        return self

    def _train_dense(self):
        if self._dense is None:
            self._dense = self.X.toarray()
        return self._dense

    def neighbors(self, query) -> np.ndarray:
        """Training indices of the k nearest vectors, nearest first."""
        dense = self._train_dense()
        q = np.asarray(sp.csr_matrix(query).toarray()).ravel()
        d2 = ((dense - q) ** 2).sum(axis=1)
        order = np.argsort(d2, kind="stable")
        return order[: self.params["n_neighbors"]]

    def predict_matrix(self, X):
        X = sp.csr_matrix(X)
        out = np.empty(X.shape[0], dtype=np.int64)
        for i in range(X.shape[0]):
            votes = np.bincount(self.y[self.neighbors(X[i])], minlength=N_CLASSES)
            out[i] = int(np.argmax(votes))
        return out

    def payload(self):
        X = self.X.copy()
        X.sort_indices()
        return {"n_features": self.n_features, "indptr": X.indptr.tolist(), "indices": X.indices.tolist(),
                "data": X.data.tolist(), "labels": self.y.tolist()}


_CLASSES = {
    "RF": RandomForestModel,
    "DT": DecisionTreeModel,
    "LR": LogisticRegressionModel,
    "MNB": NaiveBayesModel,
    "KNN": KNeighborsModel,
}


def dataset_matrix(train_set, n_features: int | None = None):
    """CSR matrix and label array for a list of vectorized ``LabeledCommit``."""
    vectors = [lc.vector for lc in train_set]
    if n_features is None:
        n_features = 1 + max((max(v.entries) for v in vectors if v.entries), default=-1)
    X = to_matrix(vectors, max(n_features, 0))
    y = np.array([int(lc.label) for lc in train_set], dtype=np.int64)
    return X, y


def fit(kind_or_params, X, y, seed: int = 42, params: Hyperparams | None = None) -> TrainedModel:
    """Train on a matrix; ``params`` defaults to the kind's shipped defaults."""
    if isinstance(kind_or_params, Hyperparams):
        params = kind_or_params
    elif params is None:
        params = Hyperparams(kind_or_params)
    if X.shape[0] == 0:
        raise EmptyTrainingSet("training set is empty")
    model = _CLASSES[params.kind](params, seed, X.shape[1])
    return model.fit(sp.csr_matrix(X), np.asarray(y, dtype=np.int64))


def train(kind, params: Hyperparams | None, train_set, seed: int = 42, n_features: int | None = None) -> TrainedModel:
    train_set = list(train_set)
    if not train_set:
        raise EmptyTrainingSet("training set is empty")
    if params is None:
        params = Hyperparams(kind)
    if params.kind != str(kind).upper():
        raise ValueError(f"hyperparameters are for {params.kind}, not {kind}")
    X, y = dataset_matrix(train_set, n_features)
    return fit(params, X, y, seed)


def predict(model: TrainedModel, vector: SparseVector) -> Category:
    return model.predict_vector(vector)


# --- serialization ----------------------------------------------------------

def _params_json(params: Hyperparams) -> dict:
    return params.as_dict()


def dumps_model(model: TrainedModel) -> str:
    envelope = {
        "format": FORMAT,
        "kind": model.kind,
        "params": _params_json(model.params),
        "seed": model.seed,
        "payload": model.payload(),
    }
    return json.dumps(envelope, sort_keys=True, separators=(",", ":"))


def loads_model(text: str) -> TrainedModel:
    env = json.loads(text)
    if env.get("format") != FORMAT:
        raise ValueError(f"unsupported model format {env.get('format')!r}")
    kind = env["kind"]
    params = Hyperparams(kind, tuple(env["params"].items()))
    seed = env["seed"]
    p = env["payload"]
    n = p["n_features"]
    if kind in ("RF", "DT"):
        return _CLASSES[kind](params, seed, n, [Tree.from_dict(t) for t in p["trees"]])
    if kind == "LR":
        coef = np.zeros((N_CLASSES, n))
        for k, row in enumerate(p["coef"]):
            coef[k, row["index"]] = row["value"]
        return LogisticRegressionModel(params, seed, n, coef, p["intercept"])
    if kind == "MNB":
        prior = [-np.inf if v is None else v for v in p["class_log_prior"]]
        return NaiveBayesModel(params, seed, n, prior, p["feature_log_prob"])
    X = sp.csr_matrix((p["data"], p["indices"], p["indptr"]), shape=(len(p["indptr"]) - 1, n))
    return KNeighborsModel(params, seed, n, X, p["labels"])
