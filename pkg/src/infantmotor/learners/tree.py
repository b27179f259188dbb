"""Binary decision trees on numeric features.

Two split criteria are supported: C4.5 gain ratio (entropy based) and Gini
decrease. Trees are grown on weighted samples and, for C4.5 style trees,
pruned bottom-up with the pessimistic (upper confidence bound) error
estimate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Optional, Sequence, Union

import numpy as np
from numba import njit

from ..core import Label, vote

CRITERIA = ("gain_ratio", "gini")
SCORE_EPS = 1e-12


@dataclass(frozen=True)
class Leaf:
    label: Label
    td_weight: float
    ar_weight: float

    @property
    def weight(self) -> float:
        return self.td_weight + self.ar_weight


@dataclass(frozen=True)
class Split:
    """Samples with ``x[feature] <= threshold`` go left, the rest go right."""

    feature: str
    threshold: float
    left: "TreeNode"
    right: "TreeNode"
    td_weight: float = 0.0
    ar_weight: float = 0.0

    @property
    def weight(self) -> float:
        return self.td_weight + self.ar_weight


TreeNode = Union[Leaf, Split]


def _entropy(p):
    p = np.clip(p, 0.0, 1.0)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(np.where(p > 0, p * np.log2(p), 0.0) + np.where(q > 0, q * np.log2(q), 0.0))
    return h


def _gini(p):
    return 2.0 * p * (1.0 - p)


def impurity(ar_fraction, criterion: str):
    if criterion == "gini":
        return _gini(ar_fraction)
    return _entropy(ar_fraction)


@njit(cache=True)
def _h(p, gini):
    if gini:
        return 2.0 * p * (1.0 - p)
    h = 0.0
    if p > 0.0:
        h -= p * math.log2(p)
    if p < 1.0:
        h -= (1.0 - p) * math.log2(1.0 - p)
    return h


@njit(cache=True)
def _scan_column(x, y, w, gini, min_child, allow_zero, eps, thresholds, scores):
    """Fill per-cut thresholds/scores (nan/-inf where invalid); return the best cut index or -1."""
    n = len(x)
    order = np.argsort(x, kind="mergesort")
    total = 0.0
    total_ar = 0.0
    for k in range(n):
        i = order[k]
        total += w[i]
        if y[i] == 1:
            total_ar += w[i]
    parent = _h(total_ar / total, gini)
    cw = 0.0
    car = 0.0
    best = -np.inf
    for k in range(n - 1):
        i = order[k]
        cw += w[i]
        if y[i] == 1:
            car += w[i]
        thresholds[k] = np.nan
        scores[k] = -np.inf
        a = x[i]
        b = x[order[k + 1]]
        rw = total - cw
        rar = total_ar - car
        if not a < b or cw < min_child or rw < min_child or cw <= 0.0 or rw <= 0.0:
            continue
        gain = parent - (cw * _h(car / cw, gini) + rw * _h(rar / rw, gini)) / total
        if not allow_zero and gain <= eps:
            continue
        if gini:
            score = gain
        else:
            si = _h(cw / total, False)
            score = gain / si if si > 0.0 else 0.0
        thresholds[k] = (a + b) / 2.0
        scores[k] = score
        if score > best:
            best = score
    if best == -np.inf:
        return -1
    # cuts run in ascending threshold order, so the first near-maximal one is the smallest
    for k in range(n - 1):
        if scores[k] >= best - eps:
            return k
    return -1


def split_scores(values, labels, weights, criterion="gain_ratio", min_child_weight=0.0, allow_zero_gain=True):
    """Thresholds and scores of every cut between consecutive sorted values.

    Invalid cuts (equal neighbours, a child lighter than ``min_child_weight``,
    or no impurity decrease unless ``allow_zero_gain``) hold ``nan``/``-inf``.
    For the gain-ratio criterion the score is information gain divided by
    split information; for Gini it is the Gini decrease.
    """
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}")
    x = np.ascontiguousarray(values, dtype=np.float64)
    y = np.ascontiguousarray(labels, dtype=np.int64)
    w = np.ascontiguousarray(weights, dtype=np.float64)
    if not (x.ndim == 1 and len(x) == len(y) == len(w)):
        raise ValueError("values, labels and weights must be equal-length vectors")
    m = max(len(x) - 1, 0)
    thresholds, scores = np.empty(m), np.empty(m)
    if len(x) < 2:
        return thresholds, scores, -1
    k = _scan_column(x, y, w, criterion == "gini", float(min_child_weight), bool(allow_zero_gain), SCORE_EPS,
                     thresholds, scores)
    return thresholds, scores, k


def best_splits(X, labels, weights, criterion="gain_ratio", min_child_weight=0.0, allow_zero_gain=False):
    """Per-column best ``(threshold, score)``; ``None`` where no cut qualifies."""
    X = np.asarray(X, dtype=np.float64)
    y = np.ascontiguousarray(labels, dtype=np.int64)
    w = np.ascontiguousarray(weights, dtype=np.float64)
    gini = criterion == "gini"
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}")
    n = len(X)
    if n < 2:
        return [None] * X.shape[1]
    thresholds, scores = np.empty(n - 1), np.empty(n - 1)
    out = []
    for j in range(X.shape[1]):
        k = _scan_column(np.ascontiguousarray(X[:, j]), y, w, gini, float(min_child_weight),
                         bool(allow_zero_gain), SCORE_EPS, thresholds, scores)
        out.append(None if k < 0 else (float(thresholds[k]), float(scores[k])))
    return out


def best_numeric_split(values, labels, weights, criterion="gain_ratio", min_child_weight=0.0,
                       allow_zero_gain=False) -> Optional[tuple[float, float]]:
    """Best ``(threshold, score)`` over all midpoints, or ``None``.

    Only splits with a strictly positive impurity decrease qualify unless
    ``allow_zero_gain`` is set. Ties go to the smallest threshold.
    """
    thresholds, scores, k = split_scores(values, labels, weights, criterion, min_child_weight, allow_zero_gain)
    return None if k < 0 else (float(thresholds[k]), float(scores[k]))


def added_errors(n: float, e: float, confidence: float) -> float:
    """Extra errors from the upper confidence limit of a binomial error rate (C4.5)."""
    if confidence > 0.5:
        raise ValueError("pruning confidence must be <= 0.5")
    if n <= 0:
        return 0.0
    if e < 1:
        base = n * (1.0 - confidence ** (1.0 / n))
        if e == 0:
            return base
        return base + e * (added_errors(n, 1.0, confidence) - base)
    if e + 0.5 >= n:
        return max(n - e, 0.0)
    z = NormalDist().inv_cdf(1.0 - confidence)
    f = (e + 0.5) / n
    r = (f + z * z / (2 * n) + z * math.sqrt(f / n - f * f / n + z * z / (4 * n * n))) / (1 + z * z / n)
    return r * n - e


def _leaf_errors(node: Leaf) -> float:
    return node.weight - max(node.td_weight, node.ar_weight)


def _estimated_errors(node: TreeNode, confidence: float) -> float:
    if isinstance(node, Leaf):
        e = _leaf_errors(node)
        return e + added_errors(node.weight, e, confidence)
    return _estimated_errors(node.left, confidence) + _estimated_errors(node.right, confidence)


def prune(node: TreeNode, confidence: float) -> TreeNode:
    """Subtree replacement: collapse a split whenever a leaf is estimated no worse."""
    if isinstance(node, Leaf):
        return node
    left, right = prune(node.left, confidence), prune(node.right, confidence)
    node = Split(node.feature, node.threshold, left, right, node.td_weight, node.ar_weight)
    leaf = Leaf(vote(node.td_weight, node.ar_weight), node.td_weight, node.ar_weight)
    leaf_err = _leaf_errors(leaf) + added_errors(leaf.weight, _leaf_errors(leaf), confidence)
    if leaf_err <= _estimated_errors(node, confidence) + 0.1:
        return leaf
    return node


def depth(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(depth(node.left), depth(node.right))


def n_leaves(node: TreeNode) -> int:
    if isinstance(node, Leaf):
        return 1
    return n_leaves(node.left) + n_leaves(node.right)


def node_to_dict(node: TreeNode) -> dict:
    if isinstance(node, Leaf):
        return {"leaf": node.label.name, "td_weight": node.td_weight, "ar_weight": node.ar_weight}
    return {
        "feature": node.feature,
        "threshold": node.threshold,
        "td_weight": node.td_weight,
        "ar_weight": node.ar_weight,
        "left": node_to_dict(node.left),
        "right": node_to_dict(node.right),
    }


def node_from_dict(d: dict) -> TreeNode:
    if "leaf" in d:
        return Leaf(Label[d["leaf"]], float(d["td_weight"]), float(d["ar_weight"]))
    return Split(
        d["feature"],
        float(d["threshold"]),
        node_from_dict(d["left"]),
        node_from_dict(d["right"]),
        float(d["td_weight"]),
        float(d["ar_weight"]),
    )


class DecisionTree:
    """Weighted binary tree grown greedily, optionally pruned C4.5 style.

    Parameters
    ----------
    max_depth : int or None
        Depth cap; ``None`` grows until leaves are pure or unsplittable.
    min_leaf_weight : float
        Minimum total sample weight in each child of a split.
    pruning_confidence : float or None
        Confidence factor for pessimistic pruning; ``None`` disables pruning.
    criterion : {'gain_ratio', 'gini'}
    max_features : int or None
        Number of candidate features drawn per split (random forests).
    rng : numpy Generator, needed only when ``max_features`` is set.
    """

    def __init__(self, max_depth=None, min_leaf_weight=1.0, pruning_confidence=0.25,
                 criterion="gain_ratio", max_features=None, rng=None):
        if criterion not in CRITERIA:
            raise ValueError(f"unknown criterion {criterion!r}")
        if max_depth is not None and max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        self.max_depth = max_depth
        self.min_leaf_weight = float(min_leaf_weight)
        self.pruning_confidence = pruning_confidence
        self.criterion = criterion
        self.max_features = max_features
        self.rng = rng
        self.root: Optional[TreeNode] = None
        self.feature_names: tuple[str, ...] = ()
        self.importances_: Optional[np.ndarray] = None

    def fit(self, X, y, w, feature_names: Optional[Sequence[str]] = None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        w = np.asarray(w, dtype=float)
        if len(X) == 0:
            raise ValueError("cannot fit a tree on zero samples")
        d = X.shape[1]
        self.feature_names = tuple(feature_names) if feature_names is not None else tuple(f"x{i}" for i in range(d))
        self._total = w.sum()
        root = self._grow(X, y, w, np.arange(len(X)), 0)
        if self.pruning_confidence is not None:
            root = prune(root, self.pruning_confidence)
        self.root = root
        self.importances_ = self._importances(root, X.shape[1])
        return self

    def _candidates(self, d):
        if self.max_features is None or self.max_features >= d:
            return range(d)
        return sorted(self.rng.choice(d, size=self.max_features, replace=False).tolist())

    def _grow(self, X, y, w, idx, level):
        wi, yi = w[idx], y[idx]
        ar = float(wi[yi == 1].sum())
        td = float(wi[yi == 0].sum())
        leaf = Leaf(vote(td, ar), td, ar)
        if td <= 0 or ar <= 0 or (self.max_depth is not None and level >= self.max_depth):
            return leaf

        candidates = self._candidates(X.shape[1])
        best = self._best(X, y, w, idx, candidates, allow_zero_gain=False)
        if best is None:
            best = self._best(X, y, w, idx, candidates, allow_zero_gain=True)
        if best is None:
            return leaf
        j, threshold = best
        go_left = X[idx, j] <= threshold
        left = self._grow(X, y, w, idx[go_left], level + 1)
        right = self._grow(X, y, w, idx[~go_left], level + 1)
        return Split(self.feature_names[j], threshold, left, right, td, ar)

    def _best(self, X, y, w, idx, candidates, allow_zero_gain):
        cols = list(candidates)
        found = best_splits(X[np.ix_(idx, cols)], y[idx], w[idx], self.criterion,
                            self.min_leaf_weight, allow_zero_gain)
        best, best_score = None, -np.inf
        for j, f in zip(cols, found):
            if f is not None and f[1] > best_score + SCORE_EPS:
                best, best_score = (j, f[0]), f[1]
        return best

    def _importances(self, root, d):
        imp = np.zeros(d)
        index = {name: i for i, name in enumerate(self.feature_names)}

        def walk(node):
            if isinstance(node, Leaf):
                return
            n = node.weight
            child = sum(c.weight * impurity(c.ar_weight / c.weight, self.criterion)
                        for c in (node.left, node.right) if c.weight > 0)
            imp[index[node.feature]] += n / self._total * (impurity(node.ar_weight / n, self.criterion) - child / n)
            walk(node.left)
            walk(node.right)

        walk(root)
        s = imp.sum()
        return imp / s if s > 0 else imp

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        index = {name: i for i, name in enumerate(self.feature_names)}
        out = np.empty(len(X), dtype=int)
        for r, x in enumerate(X):
            node = self.root
            while isinstance(node, Split):
                node = node.left if x[index[node.feature]] <= node.threshold else node.right
            out[r] = int(node.label)
        return out

    def feature_importances(self) -> np.ndarray:
        return self.importances_

    def to_state(self) -> dict:
        return {"features": list(self.feature_names), "root": node_to_dict(self.root),
                "importances": self.importances_.tolist()}

    @classmethod
    def from_state(cls, state: dict, **params):
        tree = cls(**params)
        tree.feature_names = tuple(state["features"])
        tree.root = node_from_dict(state["root"])
        tree.importances_ = np.asarray(state["importances"], dtype=float)
        return tree
