"""CART trees with Gini splits over sparse (CSC) feature matrices.

Only the nonzero entries of a column are visited when searching a split,
which keeps wide TF-IDF matrices cheap.  Split ties are resolved by the
lowest feature index and then the lowest threshold, so the chosen split
never depends on the order in which candidate features were drawn.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from numba import njit

_TIE_EPS = 1e-9


@njit(cache=True)
def _majority(counts):
    best = 0
    for k in range(1, counts.shape[0]):
        if counts[k] > counts[best]:
            best = k
    return best


@njit(cache=True)
def _build(indptr, indices, data, y, n_classes, max_depth, max_features, seed, randomize):
    n, n_features = y.shape[0], indptr.shape[0] - 1
    cap = 2 * n + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    label = np.zeros(cap, np.int64)
    importance = np.zeros(n_features)

    samples = np.arange(n)
    buf = np.empty(n, np.int64)
    mark = np.full(n, -1, np.int64)
    xval = np.zeros(n)
    perm = np.arange(n_features)
    vals = np.empty(n)
    labs = np.empty(n, np.int64)
    if randomize:
        np.random.seed(seed)

    # stack of (node, start, end, depth)
    stack = np.empty((cap, 4), np.int64)
    top = 0
    stack[0, 0], stack[0, 1], stack[0, 2], stack[0, 3] = 0, 0, n, 0
    top = 1
    n_nodes = 1
    counts = np.zeros(n_classes, np.int64)
    lc = np.zeros(n_classes, np.int64)

    while top > 0:
        top -= 1
        node, start, end, depth = stack[top, 0], stack[top, 1], stack[top, 2], stack[top, 3]
        size = end - start
        counts[:] = 0
        for i in range(start, end):
            counts[y[samples[i]]] += 1
        label[node] = _majority(counts)
        if depth >= max_depth or size < 2 or counts[label[node]] == size:
            continue

        parent_s = 0.0
        for k in range(n_classes):
            parent_s += counts[k] * counts[k]
        for i in range(start, end):
            mark[samples[i]] = node

        best_g = -1.0
        best_f = -1
        best_t = 0.0
        visited = 0
        for t in range(n_features):
            if randomize:
                j = np.random.randint(t, n_features)
                tmp = perm[t]
                perm[t] = perm[j]
                perm[j] = tmp
            f = perm[t]
            k_nz = 0
            for p in range(indptr[f], indptr[f + 1]):
                r = indices[p]
                if mark[r] == node:
                    vals[k_nz] = data[p]
                    labs[k_nz] = y[r]
                    k_nz += 1
            zeros = size - k_nz
            if k_nz == 0:
                continue
            order = np.argsort(vals[:k_nz], kind="mergesort")
            if zeros == 0 and vals[order[0]] == vals[order[k_nz - 1]]:
                continue
            visited += 1

            # walk values in ascending order; the implicit zeros form one block
            lc[:] = 0
            n_left = 0
            zero_done = zeros == 0
            prev = 0.0
            have_prev = False
            idx = 0
            while idx < k_nz or not zero_done:
                take_zero = (not zero_done) and (idx >= k_nz or vals[order[idx]] > 0.0)
                if take_zero:
                    v = 0.0
                else:
                    v = vals[order[idx]]
                if have_prev and v != prev and n_left > 0 and n_left < size:
                    g = 0.0
                    sl = 0.0
                    sr = 0.0
                    for k in range(n_classes):
                        sl += lc[k] * lc[k]
                        rk = counts[k] - lc[k]
                        sr += rk * rk
                    g = sl / n_left + sr / (size - n_left)
                    thr = (prev + v) / 2.0
                    if thr >= v:
                        thr = prev
                    better = g > best_g + _TIE_EPS
                    if not better and abs(g - best_g) <= _TIE_EPS:
                        better = f < best_f or (f == best_f and thr < best_t)
                    if better:
                        best_g = g
                        best_f = f
                        best_t = thr
                if take_zero:
                    # zero block counts = node counts minus the nonzero entries
                    for k in range(n_classes):
                        lc[k] += counts[k]
                    for q in range(k_nz):
                        lc[labs[q]] -= 1
                    n_left += zeros
                    zero_done = True
                else:
                    lc[labs[order[idx]]] += 1
                    n_left += 1
                    idx += 1
                prev = v
                have_prev = True
            if randomize and visited >= max_features:
                break

        if best_f < 0:
            continue

        # partition node samples on the chosen split
        for i in range(start, end):
            xval[samples[i]] = 0.0
        for p in range(indptr[best_f], indptr[best_f + 1]):
            r = indices[p]
            if mark[r] == node:
                xval[r] = data[p]
        nl = 0
        for i in range(start, end):
            s = samples[i]
            if xval[s] <= best_t:
                buf[nl] = s
                nl += 1
        nr = nl
        for i in range(start, end):
            s = samples[i]
            if xval[s] > best_t:
                buf[nr] = s
                nr += 1
        for i in range(size):
            samples[start + i] = buf[i]

        importance[best_f] += best_g - parent_s / size
        feature[node] = best_f
        threshold[node] = best_t
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack[top, 0], stack[top, 1], stack[top, 2], stack[top, 3] = n_nodes + 1, start + nl, end, depth + 1
        top += 1
        stack[top, 0], stack[top, 1], stack[top, 2], stack[top, 3] = n_nodes, start, start + nl, depth + 1
        top += 1
        n_nodes += 2

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), label[:n_nodes].copy(), importance)


@njit(cache=True)
def _predict_votes(feature, threshold, left, right, label, roots, indptr, indices, data, n_classes):
    n = indptr.shape[0] - 1
    votes = np.zeros((n, n_classes), np.int64)
    for i in range(n):
        for t in range(roots.shape[0]):
            node = roots[t]
            while feature[node] >= 0:
                f = feature[node]
                v = 0.0
                # row entries are sorted by column
                lo, hi = indptr[i], indptr[i + 1]
                while lo < hi:
                    mid = (lo + hi) // 2
                    if indices[mid] < f:
                        lo = mid + 1
                    else:
                        hi = mid
                if lo < indptr[i + 1] and indices[lo] == f:
                    v = data[lo]
                if v <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            votes[i, label[node]] += 1
    return votes


class Tree:
    """A fitted CART tree stored as flat node arrays (node 0 is the root)."""

    def __init__(self, feature, threshold, left, right, label, importance):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.label = np.asarray(label, dtype=np.int64)
        self.importance = np.asarray(importance, dtype=float)

    @property
    def n_nodes(self):
        return len(self.feature)

    def depth(self):
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depths[self.left[node]] = depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def to_dict(self):
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "label": self.label.tolist(),
            "importance": self.importance.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["feature"], d["threshold"], d["left"], d["right"], d["label"], d["importance"])


def build_tree(X, y, n_classes, max_depth, max_features=None, seed=0) -> Tree:
    """Grow one tree.

    ``max_features=None`` searches every feature.  Otherwise features are
    drawn in random order until ``max_features`` non-constant ones have
    been examined at a node.
    """
    X = sp.csc_matrix(X, copy=True)
    X.eliminate_zeros()
    X.sort_indices()
    n_features = X.shape[1]
    randomize = max_features is not None and max_features < n_features
    mf = n_features if max_features is None else int(max_features)
    parts = _build(
        X.indptr.astype(np.int64), X.indices.astype(np.int64), X.data.astype(float),
        np.asarray(y, dtype=np.int64), int(n_classes), int(max_depth), mf, int(seed) & 0xFFFFFFFF, randomize,
    )
    return Tree(*parts)


def predict_votes(trees, X, n_classes) -> np.ndarray:
    """Per-row class vote counts over ``trees`` for a CSR matrix ``X``."""
    X = sp.csr_matrix(X)
    X.sort_indices()
    offsets = np.cumsum([0] + [t.n_nodes for t in trees[:-1]]).astype(np.int64)

    def cat(attr, shift=False):
        arrs = []
        for off, t in zip(offsets, trees):
            a = getattr(t, attr)
            if shift:
                a = np.where(a >= 0, a + off, a)
            arrs.append(a)
        return np.concatenate(arrs)

    return _predict_votes(
        cat("feature"), cat("threshold"), cat("left", True), cat("right", True), cat("label"),
        offsets, X.indptr.astype(np.int64), X.indices.astype(np.int64), X.data.astype(float), int(n_classes),
    )
