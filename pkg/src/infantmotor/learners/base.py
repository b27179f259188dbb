"""Declarative learner configuration and the fitted-model wrapper."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from ..core import Dataset, InfantMotorError, Label, SchemaMismatchError, balanced_weights_from_labels
from .boosting import AdaBoost
from .forest import RandomForest
from .knn import KNN
from .logistic import LogisticRegression
from .svm import SVM
from .tree import DecisionTree

MODEL_FORMAT = "infantmotor.model"
MODEL_VERSION = 1

FAMILIES = ("DecisionTree", "LogisticRegression", "SVM", "KNN", "RandomForest", "AdaBoost")

DEFAULTS: dict[str, dict[str, Any]] = {
    "DecisionTree": {"max_depth": None, "min_leaf_weight": 1.0, "pruning_confidence": 0.25,
                     "criterion": "gain_ratio"},
    "LogisticRegression": {"l2_lambda": 1.0, "max_iter": 100, "tol": 1e-8},
    "SVM": {"C": 1.0, "kernel": "rbf", "gamma": "auto", "tol": 1e-3, "max_passes": 1000},
    "KNN": {"k": 5, "metric": "euclidean"},
    "RandomForest": {"n_trees": 100, "max_features": "sqrt", "max_depth": None, "bootstrap": True,
                     "min_leaf_weight": 1.0},
    "AdaBoost": {"n_rounds": 50, "stump_criterion": "gini"},
}

_CLASSES = {
    "DecisionTree": DecisionTree,
    "LogisticRegression": LogisticRegression,
    "SVM": SVM,
    "KNN": KNN,
    "RandomForest": RandomForest,
    "AdaBoost": AdaBoost,
}


class UnsupportedLearnerError(InfantMotorError, ValueError):
    pass


def _plain(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


@dataclass(frozen=True)
class LearnerSpec:
    """A classifier family, the hyperparameters that differ from its defaults, and a seed."""

    family: str
    hyperparameters: tuple = ()
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown learner family {self.family!r}; expected one of {FAMILIES}")
        hp = self.hyperparameters
        items = hp.items() if isinstance(hp, Mapping) else hp
        items = tuple(sorted((str(k), _plain(v)) for k, v in items))
        allowed = DEFAULTS[self.family]
        for key, _ in items:
            if key not in allowed:
                raise ValueError(f"{self.family} has no hyperparameter {key!r}; allowed: {sorted(allowed)}")
        object.__setattr__(self, "hyperparameters", items)
        object.__setattr__(self, "seed", int(self.seed))

    @classmethod
    def create(cls, family: str, seed: int = 0, **hyperparameters) -> "LearnerSpec":
        return cls(family, tuple(hyperparameters.items()), seed)

    @property
    def params(self) -> dict:
        merged = dict(DEFAULTS[self.family])
        merged.update(self.hyperparameters)
        return merged

    def to_dict(self) -> dict:
        return {"family": self.family, "hyperparameters": dict(self.hyperparameters), "seed": self.seed}

    @classmethod
    def from_dict(cls, d: Mapping) -> "LearnerSpec":
        return cls(d["family"], tuple(dict(d.get("hyperparameters", {})).items()), int(d.get("seed", 0)))

    def key(self) -> str:
        """Canonical serialisation; used as the final tie-breaker when ranking."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def __str__(self):
        hp = ", ".join(f"{k}={v}" for k, v in self.hyperparameters)
        return f"{self.family}({hp})" if hp else self.family

    def build(self):
        params = self.params
        if self.family == "RandomForest":
            params["seed"] = self.seed
        return _CLASSES[self.family](**params)


def canonical_rows(X, y, w):
    """Row permutation that depends only on row content, never on input order."""
    keys = [w, y] + [X[:, j] for j in range(X.shape[1] - 1, -1, -1)]
    return np.lexsort(keys)


class Model:
    """A fitted learner bound to the schema and feature subset it was trained on."""

    def __init__(self, spec: LearnerSpec, estimator, features: Sequence[str], schema_fingerprint: str):
        self.spec = spec
        self.estimator = estimator
        self.features = tuple(features)
        self.schema_fingerprint = schema_fingerprint

    @property
    def family(self) -> str:
        return self.spec.family

    def predict_matrix(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(self.features):
            raise SchemaMismatchError(f"expected {len(self.features)} feature columns, got shape {X.shape}")
        return self.estimator.predict(X)

    def predict(self, dataset: Dataset) -> list[Label]:
        if dataset.schema.fingerprint != self.schema_fingerprint:
            raise SchemaMismatchError("dataset schema differs from the schema the model was trained on")
        return [Label(int(v)) for v in self.predict_matrix(dataset.matrix(self.features))]

    def feature_importances(self) -> Optional[dict]:
        imp = getattr(self.estimator, "feature_importances", lambda: None)()
        if imp is None:
            return None
        return dict(zip(self.features, (float(v) for v in imp)))

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "spec": self.spec.to_dict(),
            "features": list(self.features),
            "schema_fingerprint": self.schema_fingerprint,
            "state": self.estimator.to_state(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: Mapping) -> "Model":
        if d.get("format") != MODEL_FORMAT or d.get("version") != MODEL_VERSION:
            raise ValueError("not a serialised model of a supported version")
        spec = LearnerSpec.from_dict(d["spec"])
        params = spec.params
        if spec.family == "RandomForest":
            params["seed"] = spec.seed
        estimator = _CLASSES[spec.family].from_state(d["state"], **params)
        return cls(spec, estimator, d["features"], d["schema_fingerprint"])

    @classmethod
    def from_json(cls, text: str) -> "Model":
        return cls.from_dict(json.loads(text))


def fit_arrays(spec: LearnerSpec, X, y, w, features: Sequence[str], schema_fingerprint: str = "") -> Model:
    """Fit ``spec`` on raw arrays.

    Rows are put in a content-defined order and weights are rescaled to mean
    one before fitting, so the result does not depend on record order or on
    a global rescaling of the weights.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    w = np.asarray(w, dtype=float)
    if len(X) == 0:
        raise ValueError("cannot fit on an empty training set")
    if X.shape[1] != len(features):
        raise ValueError("feature names do not match the matrix width")
    if np.any(w <= 0):
        raise ValueError("sample weights must be positive")
    order = canonical_rows(X, y, w)
    X, y, w = X[order], y[order], w[order]
    w = w / w.mean()
    estimator = spec.build()
    estimator.fit(X, y, w, feature_names=tuple(features))
    return Model(spec, estimator, features, schema_fingerprint)


def fit(spec: LearnerSpec, dataset: Dataset, features: Optional[Sequence[str]] = None, weights=None) -> Model:
    """Fit on ``dataset`` restricted to ``features`` (default: the whole schema).

    Without explicit ``weights`` the class-balanced weights are used.
    """
    features = tuple(dataset.schema.names if features is None else getattr(features, "selected", features))
    X = dataset.matrix(features)
    y = dataset.y
    if weights is None:
        weights = balanced_weights_from_labels(y).for_labels(y)
    return fit_arrays(spec, X, y, weights, features, dataset.schema.fingerprint)
