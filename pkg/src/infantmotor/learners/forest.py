import math

import numpy as np

from ..core import vote
from .tree import DecisionTree


def tree_rng(seed: int, t: int) -> np.random.Generator:
    """Per-tree generator; depends only on (seed, t) so parallel and serial fits agree."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, t])


class RandomForest:
    """Gini trees on weighted bootstrap resamples, combined by unweighted vote.

    The bootstrap draws n rows with probability proportional to the sample
    weights, so class balancing is carried by the resample and each tree is
    then fitted with unit weights.
    """

    def __init__(self, n_trees=100, max_features="sqrt", max_depth=None, bootstrap=True,
                 min_leaf_weight=1.0, seed=0):
        if int(n_trees) < 1:
            raise ValueError("n_trees must be >= 1")
        self.n_trees = int(n_trees)
        self.max_features = max_features
        self.max_depth = max_depth
        self.bootstrap = bool(bootstrap)
        self.min_leaf_weight = float(min_leaf_weight)
        self.seed = int(seed)

    def _n_features(self, d):
        if self.max_features in (None, "all"):
            return d
        if self.max_features == "sqrt":
            return max(1, int(math.sqrt(d)))
        return max(1, min(d, int(self.max_features)))

    def fit(self, X, y, w, feature_names=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        w = np.asarray(w, dtype=float)
        n, d = X.shape
        m = self._n_features(d)
        self.trees = []
        for t in range(self.n_trees):
            rng = tree_rng(self.seed, t)
            if self.bootstrap:
                idx = np.sort(rng.choice(n, size=n, replace=True, p=w / w.sum()))
                Xt, yt, wt = X[idx], y[idx], np.ones(n)
            else:
                Xt, yt, wt = X, y, w
            tree = DecisionTree(max_depth=self.max_depth, min_leaf_weight=self.min_leaf_weight,
                                pruning_confidence=None, criterion="gini",
                                max_features=None if m >= d else m, rng=rng)
            self.trees.append(tree.fit(Xt, yt, wt, feature_names))
        return self

    def predict(self, X):
        votes = np.array([t.predict(X) for t in self.trees])
        ar = votes.sum(axis=0)
        return np.array([int(vote(len(self.trees) - a, a)) for a in ar], dtype=int)

    def feature_importances(self):
        return np.mean([t.feature_importances() for t in self.trees], axis=0)

    def to_state(self):
        return {"trees": [t.to_state() for t in self.trees]}

    @classmethod
    def from_state(cls, state, **params):
        m = cls(**params)
        m.trees = [DecisionTree.from_state(s, pruning_confidence=None, criterion="gini") for s in state["trees"]]
        return m

