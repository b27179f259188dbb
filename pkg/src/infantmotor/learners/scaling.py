import numpy as np


class Standardizer:
    """Column-wise z-scoring fitted on training rows only.

    Constant columns keep scale 1 so they map to exactly zero.
    """

    def __init__(self, mean=None, scale=None):
        self.mean = None if mean is None else np.asarray(mean, dtype=float)
        self.scale = None if scale is None else np.asarray(scale, dtype=float)

    def fit(self, X):
        X = np.asarray(X, dtype=float)
        self.mean = X.mean(axis=0)
        sd = X.std(axis=0)
        self.constant = sd <= 1e-12 * np.maximum(1.0, np.abs(self.mean))
        self.scale = np.where(self.constant, 1.0, sd)
        return self

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def fit_transform(self, X):
        return self.fit(X).transform(X)

    def to_state(self):
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_state(cls, state):
        return cls(state["mean"], state["scale"])
