import numpy as np

from ..core import vote
from .scaling import Standardizer


class KNN:
    """Weighted k-nearest-neighbour vote in standardised Euclidean space.

    Every training point tied with the k-th nearest distance joins the vote.
    """

    def __init__(self, k=5, metric="euclidean"):
        if metric != "euclidean":
            raise ValueError(f"unsupported metric {metric!r}")
        if int(k) < 1:
            raise ValueError("k must be >= 1")
        self.k = int(k)
        self.metric = metric

    def fit(self, X, y, w, feature_names=None):
        self.scaler = Standardizer().fit(X)
        self.Z = self.scaler.transform(X)
        self.y = np.asarray(y, dtype=int)
        self.w = np.asarray(w, dtype=float)
        return self

    def neighbours(self, x):
        """Indices of the voting neighbours of one raw (unscaled) query."""
        z = self.scaler.transform(np.asarray(x, dtype=float)[None, :])[0]
        dist = np.sqrt(((self.Z - z) ** 2).sum(axis=1))
        k = min(self.k, len(dist))
        kth = np.partition(dist, k - 1)[k - 1]
        return np.nonzero(dist <= kth)[0]

    def predict(self, X):
        out = np.empty(len(X), dtype=int)
        for r, x in enumerate(np.asarray(X, dtype=float)):
            idx = self.neighbours(x)
            ar = self.w[idx][self.y[idx] == 1].sum()
            td = self.w[idx][self.y[idx] == 0].sum()
            out[r] = int(vote(td, ar))
        return out

    def to_state(self):
        return {"scaler": self.scaler.to_state(), "Z": self.Z.tolist(), "y": self.y.tolist(), "w": self.w.tolist()}

    @classmethod
    def from_state(cls, state, **params):
        m = cls(**params)
        m.scaler = Standardizer.from_state(state["scaler"])
        m.Z = np.asarray(state["Z"], dtype=float).reshape(-1, len(m.scaler.mean))
        m.y = np.asarray(state["y"], dtype=int)
        m.w = np.asarray(state["w"], dtype=float)
        return m
