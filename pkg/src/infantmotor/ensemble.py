"""Default-parameter spot checks, grid search, and the top-3 majority-vote ensemble."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import Dataset, InfantMotorError, balanced_weights_from_labels, vote
from .evaluate import EvalReport, loocv, loocv_predictions, report_from_predictions
from .learners import FAMILIES, LearnerSpec, fit_arrays

DEFAULT_GRIDS: dict[str, dict[str, list]] = {
    "SVM": {"C": [0.01, 0.1, 1.0, 10.0, 100.0], "kernel": ["linear", "rbf"], "gamma": [0.01, 0.1, "auto", 1.0]},
    "LogisticRegression": {"l2_lambda": [0.001, 0.01, 0.1, 1.0, 10.0, 100.0]},
    "KNN": {"k": [1, 3, 5, 7, 9]},
    "DecisionTree": {"max_depth": [1, 2, 3, None], "pruning_confidence": [0.1, 0.25, 0.5]},
    "RandomForest": {"n_trees": [50, 100, 200]},
    "AdaBoost": {"n_rounds": [25, 50, 100]},
}


class EnsembleError(InfantMotorError, ValueError):
    pass


@dataclass(frozen=True)
class GridEntry:
    spec: LearnerSpec
    report: Optional[EvalReport] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.report is not None

    def to_dict(self) -> dict:
        d = {"spec": self.spec.to_dict(), "error": self.error}
        if self.report is not None:
            avg, ar = self.report.average_row, self.report.ar_row
            d.update({"accuracy": avg.accuracy, "ar_recall": ar.recall, "f1": avg.f1})
        return d


def _sort_entries(entries: Sequence[GridEntry]) -> tuple[GridEntry, ...]:
    ok = [e for e in entries if e.ok]
    bad = [e for e in entries if not e.ok]
    ok.sort(key=lambda e: tuple(-v for v in e.report.ranking_key()) + (e.spec.key(),))
    bad.sort(key=lambda e: e.spec.key())
    return tuple(ok + bad)


@dataclass(frozen=True)
class GridResult:
    """Entries ranked by (accuracy, AR recall, average F1) descending; failures last."""

    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", _sort_entries(self.entries))

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    @property
    def best(self) -> GridEntry:
        return self.entries[0]

    def best_of(self, family: str) -> Optional[GridEntry]:
        return next((e for e in self.entries if e.ok and e.spec.family == family), None)

    def to_dict(self) -> dict:
        return {"ranking": [e.to_dict() for e in self.entries]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def expand_grid(family: str, lattice: Mapping[str, Sequence], seed: int = 0) -> list[LearnerSpec]:
    """Cross product of the lattice; ``gamma`` only combines with the rbf kernel."""
    if not lattice or any(len(v) == 0 for v in lattice.values()):
        raise ValueError(f"empty parameter lattice for {family}")
    keys = sorted(lattice)
    specs, seen = [], set()
    for values in itertools.product(*(lattice[k] for k in keys)):
        params = dict(zip(keys, values))
        if family == "SVM" and params.get("kernel", "rbf") == "linear":
            params.pop("gamma", None)
        spec = LearnerSpec.create(family, seed=seed, **params)
        if spec.key() not in seen:
            seen.add(spec.key())
            specs.append(spec)
    return specs


def _evaluate(dataset, features, spec, selector):
    try:
        return GridEntry(spec, loocv(dataset, features, spec, selector))
    except Exception as exc:  # a failing configuration must not sink the sweep
        return GridEntry(spec, error=f"{type(exc).__name__}: {exc}")


def evaluate_specs(dataset: Dataset, features, specs: Sequence[LearnerSpec], selector=None,
                   n_jobs: int = 1) -> GridResult:
    if n_jobs == 1:
        entries = [_evaluate(dataset, features, s, selector) for s in specs]
    else:
        from joblib import Parallel, delayed
        entries = Parallel(n_jobs=n_jobs)(delayed(_evaluate)(dataset, features, s, selector) for s in specs)
    return GridResult(tuple(entries))


def spot_check(dataset: Dataset, features=None, seed: int = 0, overrides: Optional[Mapping] = None,
               families: Sequence[str] = FAMILIES, selector=None, n_jobs: int = 1) -> GridResult:
    """One leave-one-out report per family at its default parameters.

    ``overrides`` maps a family to hyperparameters replacing its defaults.
    """
    overrides = overrides or {}
    specs = [LearnerSpec.create(f, seed=seed, **dict(overrides.get(f, {}))) for f in families]
    return evaluate_specs(dataset, features, specs, selector, n_jobs)


def grid_search(dataset: Dataset, features, grids: Optional[Mapping] = None, seed: int = 0, selector=None,
                n_jobs: int = 1) -> GridResult:
    grids = DEFAULT_GRIDS if grids is None else grids
    if not grids:
        raise ValueError("no parameter lattices given")
    specs = [s for family in sorted(grids) for s in expand_grid(family, grids[family], seed)]
    return evaluate_specs(dataset, features, specs, selector, n_jobs)


@dataclass(frozen=True)
class EnsembleSpec:
    members: tuple

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if len(self.members) != 3:
            raise EnsembleError("an ensemble has exactly 3 members")

    def to_dict(self) -> dict:
        return {"members": [m.to_dict() for m in self.members]}

    @classmethod
    def from_dict(cls, d) -> "EnsembleSpec":
        return cls(tuple(LearnerSpec.from_dict(m) for m in d["members"]))


def build_ensemble(grid: GridResult) -> EnsembleSpec:
    """Best configuration of each of the three highest-ranked distinct families."""
    members, families = [], set()
    for entry in grid:
        if entry.ok and entry.spec.family not in families:
            members.append(entry.spec)
            families.add(entry.spec.family)
        if len(members) == 3:
            return EnsembleSpec(tuple(members))
    raise EnsembleError(f"need 3 distinct successful families, found {len(members)}")


def majority(votes: Sequence[int]) -> int:
    votes = list(votes)
    ar = sum(votes)
    return int(vote(len(votes) - ar, ar))


def evaluate_ensemble(dataset: Dataset, features, ensemble: EnsembleSpec, selector=None,
                      n_jobs: int = 1) -> EvalReport:
    """Leave-one-out report where all members retrain on each fold and vote 2-of-3."""
    fp = dataset.schema.fingerprint

    def make_predictor(feats):
        def predict(X_train, y_train, X_test):
            w = balanced_weights_from_labels(y_train).for_labels(y_train)
            votes = np.array([fit_arrays(m, X_train, y_train, w, feats, fp).predict_matrix(X_test)
                              for m in ensemble.members])
            return np.array([majority(votes[:, c]) for c in range(votes.shape[1])])
        return predict

    records, predicted, actual, skipped = loocv_predictions(dataset, features, make_predictor, selector, n_jobs)
    name = "Ensemble: " + ", ".join(m.family for m in ensemble.members)
    mode = "select_per_fold" if selector is not None else "mask_fixed"
    return report_from_predictions(records, predicted, actual, skipped, mode, name)
