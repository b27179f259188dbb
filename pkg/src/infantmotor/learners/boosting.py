"""Discrete AdaBoost over single-split stumps."""
from __future__ import annotations

import math

import numpy as np

from ..core import vote
from .tree import best_numeric_split

EPS_MIN = 1e-10


def stump_alpha(eps: float) -> float:
    eps = min(max(eps, EPS_MIN), 1.0 - EPS_MIN)
    return 0.5 * math.log((1.0 - eps) / eps)


class Stump:
    def __init__(self, feature, threshold, left, right):
        self.feature = feature  # column index; None for a constant stump
        self.threshold = threshold
        self.left = int(left)
        self.right = int(right)

    def predict(self, X):
        if self.feature is None:
            return np.full(len(X), self.left, dtype=int)
        return np.where(X[:, self.feature] <= self.threshold, self.left, self.right)

    def to_state(self):
        return [self.feature, self.threshold, self.left, self.right]


def fit_stump(X, y, d, criterion="gini"):
    best, best_score = None, -np.inf
    for j in range(X.shape[1]):
        found = best_numeric_split(X[:, j], y, d, criterion)
        if found is not None and found[1] > best_score + 1e-12:
            best, best_score = (j, found[0]), found[1]
    if best is None:
        label = vote(d[y == 0].sum(), d[y == 1].sum())
        return Stump(None, None, label, label)
    j, thr = best
    left = X[:, j] <= thr
    side = lambda mask: vote(d[mask & (y == 0)].sum(), d[mask & (y == 1)].sum())  # noqa: E731
    return Stump(j, thr, side(left), side(~left))


class AdaBoost:
    """Two-class AdaBoost (SAMME reduces to discrete AdaBoost for K = 2).

    The initial distribution is the normalised sample weights. A round with
    weighted error >= 0.5 stops boosting and is discarded; a perfect round
    is kept with alpha capped at ``0.5 * ln((1 - 1e-10) / 1e-10)`` and also stops.
    """

    def __init__(self, n_rounds=50, stump_criterion="gini"):
        if int(n_rounds) < 1:
            raise ValueError("n_rounds must be >= 1")
        self.n_rounds = int(n_rounds)
        self.stump_criterion = stump_criterion

    def fit(self, X, y, w, feature_names=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=int)
        d = np.asarray(w, dtype=float) / np.sum(w)
        sign = np.where(y == 1, 1.0, -1.0)
        self.stumps, self.alphas, self.errors = [], [], []
        for _ in range(self.n_rounds):
            stump = fit_stump(X, y, d, self.stump_criterion)
            miss = stump.predict(X) != y
            eps = float(d[miss].sum())
            if eps >= 0.5:
                break
            alpha = stump_alpha(eps)
            self.stumps.append(stump)
            self.alphas.append(alpha)
            self.errors.append(eps)
            if eps <= 0.0:
                break
            h = np.where(stump.predict(X) == 1, 1.0, -1.0)
            d = d * np.exp(-alpha * sign * h)
            d = d / d.sum()
        return self

    def decision_function(self, X):
        X = np.asarray(X, dtype=float)
        score = np.zeros(len(X))
        for a, s in zip(self.alphas, self.stumps):
            score += a * np.where(s.predict(X) == 1, 1.0, -1.0)
        return score

    def predict(self, X):
        return (self.decision_function(X) >= 0.0).astype(int)

    def feature_importances(self):
        return None

    def to_state(self):
        return {"alphas": list(self.alphas), "errors": list(self.errors),
                "stumps": [s.to_state() for s in self.stumps]}

    @classmethod
    def from_state(cls, state, **params):
        m = cls(**params)
        m.alphas = [float(a) for a in state["alphas"]]
        m.errors = [float(e) for e in state["errors"]]
        m.stumps = [Stump(*s) for s in state["stumps"]]
        return m
