import json
import math
import os

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DATA
from oracles import BruteTree, best_split, knn_neighbors, mcnemar_exact, mnb_log_posteriors
from refdoc.classify import (
    DEFAULT_PARAMS,
    KINDS,
    Category,
    Hyperparams,
    LabeledCommit,
    dumps_model,
    evaluate,
    fit,
    grid_search_cv,
    loads_model,
    mcnemar,
    mcnemar_counts,
    parse_category,
    predict,
    score_predictions,
    stratified_kfold,
    stratified_split,
    train,
)
from refdoc.classify.cart import build_tree, predict_votes
from refdoc.errors import EmptyTrainingSet, FoldTooSmall, KTooLarge, TooFewPerCategory
from refdoc.features import SparseVector

F, B, I, E, C = Category


def lc(label, entries=None):
    return LabeledCommit(None, label, SparseVector(entries or {}))


def load_fixture():
    with open(os.path.join(DATA, "classify_fixture.json")) as fh:
        fx = json.load(fh)
    golden = []
    with open(os.path.join(DATA, "classify_golden.tsv")) as fh:
        for line in fh:
            if not line.startswith("#"):
                golden.append(tuple(int(v) for v in line.split()))
    return fx, golden


def dense_set(X, y):
    return [lc(Category(k), {j: v for j, v in enumerate(row) if v}) for row, k in zip(X, y)]


# --- types ---------------------------------------------------------------------------------

def test_category_order_and_parsing():
    assert [c.name for c in Category] == ["Functional", "BugFix", "InternalQA", "ExternalQA", "CodeSmell"]
    assert parse_category("bug fix") is B
    assert parse_category("Code_Smell") is C
    assert parse_category(3) is E
    with pytest.raises(ValueError):
        parse_category("refactoring")


def test_hyperparams_defaults_and_validation():
    assert Hyperparams("rf").as_dict() == DEFAULT_PARAMS["RF"]
    assert Hyperparams.of("KNN", n_neighbors=3)["n_neighbors"] == 3
    for kind, bad in [("DT", {"criterion": "entropy"}), ("LR", {"penalty": "l2"}), ("MNB", {"alpha": 0}),
                      ("KNN", {"weights": "distance"}), ("RF", {"n_estimators": 0}), ("DT", {"depth": 3})]:
        with pytest.raises(ValueError):
            Hyperparams.of(kind, **bad)
    with pytest.raises(ValueError):
        Hyperparams("SVC")


# --- worked examples ---------------------------------------------------------------------------

def test_mnb_toy_hand_posterior():
    # features: 0 = good, 1 = bad; class F plays "A", class B plays "B"
    data = [lc(F, {0: 2.0}), lc(B, {1: 2.0})]
    model = train("MNB", Hyperparams.of("MNB", alpha=1.0), data, n_features=2)
    # P(good|A) = (2+1)/(2+2) = 3/4, P(good|B) = 1/4, equal priors
    assert np.allclose(np.exp(model.feature_log_prob[[0, 1], 0]), [0.75, 0.25])
    assert predict(model, SparseVector({0: 1.0})) is F


def test_mnb_empty_vector_is_prior_argmax():
    data = [lc(B, {0: 1.0}), lc(B, {1: 1.0}), lc(I, {0: 1.0}), lc(C, {2: 1.0})]
    model = train("MNB", None, data, n_features=3)
    assert predict(model, SparseVector({})) is B


def test_knn_k1_returns_training_label():
    data = [lc(F, {0: 1.0}), lc(E, {1: 1.0}), lc(C, {0: 0.6, 1: 0.8})]
    model = train("KNN", Hyperparams.of("KNN", n_neighbors=1), data, n_features=2)
    for item in data:
        assert predict(model, item.vector) is item.label


def test_knn_vote_ties_go_to_lowest_category():
    data = [lc(C, {0: 1.0}), lc(B, {0: 1.0})]
    model = train("KNN", Hyperparams.of("KNN", n_neighbors=2), data, n_features=1)
    assert predict(model, SparseVector({0: 1.0})) is B


def test_dt_one_feature_single_split():
    xs, labels = [0.1, 0.2, 0.8, 0.9], [F, F, B, B]
    data = [lc(k, {0: x}) for x, k in zip(xs, labels)]
    model = train("DT", None, data, n_features=1)
    (tree,) = model.trees
    assert tree.n_nodes == 3 and tree.depth() == 1
    assert tree.feature[0] == 0 and tree.threshold[0] == pytest.approx(0.5)
    assert best_split([[x] for x in xs], [int(k) for k in labels])[1:] == (0, 0.5)
    assert evaluate(model, data).micro_f1 == 1.0


def test_rf_identical_trees_give_common_vote():
    data = [lc(F, {0: 0.1}), lc(F, {0: 0.2}), lc(B, {0: 0.8}), lc(B, {0: 0.9})]
    rf = train("RF", Hyperparams.of("RF", n_estimators=7, max_depth=5), data, n_features=1)
    first = rf.trees[0].to_dict()
    assert all(t.to_dict() == first for t in rf.trees)
    assert rf.votes(sp.csr_matrix([[0.85]])).tolist() == [[0, 7, 0, 0, 0]]


def test_golden_labels_from_independent_oracle():
    fx, golden = load_fixture()
    data = dense_set(fx["train_X"], fx["train_y"])
    n = fx["n_features"]
    mnb = train("MNB", Hyperparams.of("MNB", alpha=1.0), data, n_features=n)
    knn = train("KNN", Hyperparams.of("KNN", n_neighbors=3), data, n_features=n)
    assert len(golden) == 20
    for i, want_mnb, want_knn in golden:
        q = SparseVector({j: v for j, v in enumerate(fx["queries"][i]) if v})
        assert predict(mnb, q) == want_mnb
        assert predict(knn, q) == want_knn


def test_mnb_posteriors_match_first_principles():
    fx, _ = load_fixture()
    X, y = fx["train_X"], fx["train_y"]
    model = train("MNB", Hyperparams.of("MNB", alpha=0.5), dense_set(X, y), n_features=fx["n_features"])
    for q in fx["queries"]:
        got = model.joint_log_likelihood(sp.csr_matrix([q]))[0]
        assert np.allclose(got, mnb_log_posteriors(X, y, 5, 0.5, q), atol=1e-9)


def test_knn_neighbors_match_brute_force():
    fx, _ = load_fixture()
    X = fx["train_X"]
    model = train("KNN", Hyperparams.of("KNN", n_neighbors=5), dense_set(X, fx["train_y"]), n_features=fx["n_features"])
    for q in fx["queries"]:
        assert model.neighbors(sp.csr_matrix([q])).tolist() == knn_neighbors(X, q, 5)


# --- CART against the brute-force tree ------------------------------------------------------------

small_int_data = st.integers(3, 14).flatmap(lambda n: st.tuples(
    st.lists(st.lists(st.integers(0, 3), min_size=3, max_size=3), min_size=n, max_size=n),
    st.lists(st.integers(0, 4), min_size=n, max_size=n),
    st.integers(1, 5),
))


@settings(max_examples=150, deadline=None)
@given(small_int_data)
def test_cart_matches_brute_tree(data):
    X, y, depth = data
    tree = build_tree(sp.csr_matrix(np.array(X, dtype=float)), np.array(y), 5, depth)
    brute = BruteTree([[float(v) for v in r] for r in X], y, 5, depth)
    probe = [[a, b, c] for a in range(4) for b in range(4) for c in range(4)]
    votes = predict_votes([tree], sp.csr_matrix(np.array(probe, dtype=float)), 5)
    assert [int(np.argmax(v)) for v in votes] == [brute.predict(r) for r in probe]
    assert tree.depth() <= depth


@settings(max_examples=60, deadline=None)
@given(small_int_data, st.integers(0, 2**31))
def test_rf_single_full_feature_tree_equals_dt(data, seed):
    X, y, depth = data
    data = dense_set(X, y)
    rf = train("RF", Hyperparams.of("RF", n_estimators=1, max_depth=depth, max_features="all"), data, seed, 3)
    dt = train("DT", Hyperparams.of("DT", max_depth=depth), data, seed, 3)
    assert rf.trees[0].to_dict() == dt.trees[0].to_dict()


def test_rf_respects_depth_and_tree_count():
    fx, _ = load_fixture()
    rf = train("RF", Hyperparams.of("RF", n_estimators=9, max_depth=2), dense_set(fx["train_X"], fx["train_y"]), 3, 8)
    assert len(rf.trees) == 9
    assert all(t.depth() <= 2 for t in rf.trees)
    assert len({json.dumps(t.to_dict()) for t in rf.trees}) > 1  # feature draws differ per tree


# --- logistic regression ------------------------------------------------------------------------

def test_lr_satisfies_l1_optimality_conditions():
    fx, _ = load_fixture()
    X = sp.csr_matrix(np.array(fx["train_X"]))
    y = np.array(fx["train_y"])
    c = 2.0
    model = fit(Hyperparams.of("LR", c=c, tol=1e-9, max_iter=20000), X, y)
    lam = 1.0 / c
    A = X.toarray()
    for k in range(5):
        t = np.where(y == k, 1.0, -1.0)
        w, b = model.coef[k], model.intercept[k]
        m = t * (A @ w + b)
        s = -t / (1.0 + np.exp(m))
        gw, gb = A.T @ s, s.sum()
        assert abs(gb) < 1e-4
        for j in range(len(w)):
            if w[j] != 0:
                assert gw[j] == pytest.approx(-lam * np.sign(w[j]), abs=1e-4)
            else:
                assert abs(gw[j]) <= lam + 1e-4
    assert evaluate(model, dense_set(fx["train_X"], fx["train_y"])).micro_f1 > 0.9


def test_lr_strong_penalty_zeroes_weights():
    fx, _ = load_fixture()
    model = train("LR", Hyperparams.of("LR", c=1e-4), dense_set(fx["train_X"], fx["train_y"]), n_features=8)
    assert not model.coef.any()


# --- determinism and serialization ---------------------------------------------------------------

SMALL = {
    "RF": Hyperparams.of("RF", n_estimators=5, max_depth=4),
    "DT": Hyperparams.of("DT", max_depth=4),
    "LR": Hyperparams.of("LR", c=1.0),
    "MNB": Hyperparams.of("MNB", alpha=0.5),
    "KNN": Hyperparams.of("KNN", n_neighbors=3),
}


@pytest.mark.parametrize("kind", KINDS)
def test_serialization_is_deterministic_and_round_trips(kind):
    fx, _ = load_fixture()
    data = dense_set(fx["train_X"], fx["train_y"])
    a = train(kind, SMALL[kind], data, 11, 8)
    b = train(kind, SMALL[kind], data, 11, 8)
    text = dumps_model(a)
    assert text == dumps_model(b)
    env = json.loads(text)
    assert set(env) == {"format", "kind", "params", "seed", "payload"} and env["kind"] == kind
    again = loads_model(text)
    assert dumps_model(again) == text
    queries = [SparseVector({j: v for j, v in enumerate(q) if v}) for q in fx["queries"]]
    assert again.predict_many(queries) == a.predict_many(queries)


def test_errors():
    with pytest.raises(EmptyTrainingSet):
        train("DT", None, [])
    with pytest.raises(KTooLarge):
        train("KNN", Hyperparams.of("KNN", n_neighbors=3), [lc(F, {0: 1.0}), lc(B, {1: 1.0})])
    with pytest.raises(ValueError):
        train("DT", Hyperparams("RF"), [lc(F, {0: 1.0})])


# --- splitting and folds -------------------------------------------------------------------------------

def test_stratified_split_small_example():
    data = [lc(F) for _ in range(4)] + [lc(B) for _ in range(4)]
    train_set, test_set = stratified_split(data, 0.25, 1)
    assert sorted(x.label for x in test_set) == [F, B]
    assert len(train_set) == 6


def test_stratified_split_determinism_and_partition():
    data = [LabeledCommit(None, Category(i % 5), SparseVector({i: 1.0})) for i in range(53)]
    a = stratified_split(data, 0.3, 5)
    assert a == stratified_split(data, 0.3, 5)
    train_set, test_set = a
    ids = lambda s: sorted(next(iter(x.vector.entries)) for x in s)
    assert sorted(ids(train_set) + ids(test_set)) == list(range(53))
    assert len(test_set) == round(53 * 0.3)


def test_stratified_split_1702_item_label_multiset():
    counts = {F: 348, B: 348, I: 348, C: 348, E: 310}
    data = [lc(k) for k, n in counts.items() for _ in range(n)]
    train_set, test_set = stratified_split(data, 0.25, 42)
    assert len(train_set) + len(test_set) == 1702
    assert len(test_set) == 426  # round(1702 * 0.25) = round(425.5)
    per = {k: sum(x.label == k for x in test_set) for k in counts}
    assert all(abs(per[k] - counts[k] * 0.25) <= 1 for k in counts)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(2, 30), min_size=1, max_size=5), st.floats(0.05, 0.95), st.integers(0, 1000))
def test_stratified_split_counts(sizes, frac, seed):
    data = [lc(Category(k)) for k, n in enumerate(sizes) for _ in range(n)]
    train_set, test_set = stratified_split(data, frac, seed)
    assert len(train_set) + len(test_set) == len(data)
    for k, n in enumerate(sizes):
        got = sum(x.label == k for x in test_set)
        assert abs(got - n * frac) <= 1.5 and 0 <= got <= n - 1


def test_stratified_split_errors():
    with pytest.raises(TooFewPerCategory):
        stratified_split([lc(F), lc(F), lc(B)], 0.5, 0)
    with pytest.raises(ValueError):
        stratified_split([lc(F), lc(F)], 1.0, 0)


def test_kfold_partition_and_errors():
    labels = [i % 3 for i in range(30)]
    folds = stratified_kfold(labels, 5, 0)
    tests = np.concatenate([te for _, te in folds])
    assert sorted(tests.tolist()) == list(range(30))
    for tr, te in folds:
        assert not set(tr) & set(te)
        assert sorted(np.bincount(np.array(labels)[te]).tolist()) == [2, 2, 2]
    with pytest.raises(FoldTooSmall):
        stratified_kfold(labels, 11, 0)
    with pytest.raises(FoldTooSmall):
        stratified_kfold(labels, 1, 0)


# --- grid search ---------------------------------------------------------------------------

def separable(n_per=6):
    return [lc(Category(k), {k: 1.0}) for k in range(5) for _ in range(n_per)]


def test_grid_single_point():
    best, score = grid_search_cv("KNN", [Hyperparams.of("KNN", n_neighbors=5)], separable(), k_folds=3)
    assert best == Hyperparams.of("KNN", n_neighbors=5)
    assert 0.0 <= score <= 1.0


def test_grid_picks_separating_point_and_first_on_ties():
    grid = [{"n_neighbors": 20}, {"n_neighbors": 1}, {"n_neighbors": 2}]
    best, score = grid_search_cv("KNN", grid, separable(), k_folds=3)
    assert best["n_neighbors"] == 1 and score == 1.0
    with pytest.raises(FoldTooSmall):
        grid_search_cv("KNN", grid, separable(2), k_folds=3)


# --- evaluation ---------------------------------------------------------------------------

def test_all_correct_scores_one():
    r = score_predictions([F, B, C], [F, B, C])
    assert r.micro_f1 == 1.0
    for c in (F, B, C):
        assert r.per_category[c] == (1.0, 1.0, 1.0)


def test_hand_confusion_two_categories():
    truth = [F] * 5 + [B] * 5
    pred = [F, F, F, F, B, F, B, B, B, B]
    r = score_predictions(truth, pred)
    p_f, r_f = 4 / 5, 4 / 5
    assert r.per_category[F] == pytest.approx((p_f, r_f, 0.8))
    assert r.per_category[B] == pytest.approx((0.8, 0.8, 0.8))
    assert r.per_category[C] == (0.0, 0.0, 0.0)
    assert r.confusion[0].tolist() == [4, 1, 0, 0, 0]
    assert r.micro_f1 == pytest.approx(0.8)
    assert r.support(F) == 5


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=60))
def test_micro_f1_equals_accuracy(pairs):
    truth, pred = zip(*pairs)
    r = score_predictions(truth, pred)
    assert abs(r.micro_f1 - sum(a == b for a, b in pairs) / len(pairs)) <= 1e-12
    assert abs(r.micro_f1 - r.accuracy) <= 1e-12
    for c in Category:
        assert all(0.0 <= s <= 1.0 for s in r.per_category[c])
        assert r.confusion[c].sum() == sum(t == c for t in truth)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.lists(st.floats(0, 5), min_size=4, max_size=4), min_size=5, max_size=5),
       st.lists(st.floats(0, 3), min_size=4, max_size=4), st.floats(0.01, 100))
def test_mnb_argmax_scale_invariant_with_uniform_priors(rows, query, lam):
    data = dense_set(rows, list(range(5)))
    scaled = dense_set([[v * lam for v in r] for r in rows], list(range(5)))
    q = SparseVector({j: v for j, v in enumerate(query) if v})
    qs = SparseVector({j: v * lam for j, v in enumerate(query) if v})
    a = train("MNB", Hyperparams.of("MNB", alpha=1e-6), data, n_features=4)
    b = train("MNB", Hyperparams.of("MNB", alpha=1e-6 * lam), scaled, n_features=4)
    ja = a.joint_log_likelihood(a.matrix([q]))[0]
    if np.sort(ja)[-1] - np.sort(ja)[-2] < 1e-6:
        return  # near-ties can flip either way in floating point
    assert predict(a, q) == predict(b, qs)


# --- McNemar ---------------------------------------------------------------------------

def test_mcnemar_examples():
    assert tuple(mcnemar_counts(0, 0)) == (0.0, 1.0)
    stat, p = mcnemar_counts(10, 0)
    assert p == pytest.approx(2 * 0.5 ** 10) and stat == 0.0
    r = mcnemar_counts(30, 10)
    assert r.method == "chi2" and r.statistic == pytest.approx(19 ** 2 / 40)


@pytest.mark.parametrize("b", range(0, 25))
def test_mcnemar_exact_matches_fraction_oracle(b):
    for c in range(0, 25 - b):
        assert mcnemar_counts(b, c).p_value == pytest.approx(mcnemar_exact(b, c), abs=1e-12)


def test_mcnemar_chi2_survival():
    from scipy.stats import chi2
    r = mcnemar_counts(40, 20)
    assert r.p_value == pytest.approx(chi2.sf(19 ** 2 / 60, 1), rel=1e-10)


def test_mcnemar_on_models():
    data = separable(4)
    good = train("KNN", Hyperparams.of("KNN", n_neighbors=1), data, n_features=5)
    assert mcnemar(good, good, data).p_value == 1.0
    bad = train("MNB", Hyperparams.of("MNB", alpha=1.0), [lc(F, {0: 1.0}), lc(F, {1: 1.0})], n_features=5)
    r = mcnemar(good, bad, data)
    assert (r.b, r.c) == (16, 0)
