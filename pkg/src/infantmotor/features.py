"""Feature selection: ANOVA F ranking, recursive elimination, greedy stepwise
search and correlation pruning. Every selector returns a FeatureMask."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import Dataset, DegenerateDatasetError
from .learners import LearnerSpec, UnsupportedLearnerError, fit

METHODS = ("univariate", "rfe", "stepwise", "manual")
STEP_TOL = 1e-9

# the eight-feature set reported for the 0-6 month band
ZERO_TO_SIX_FEATURES = tuple(
    f"{base}_{leg}"
    for base in ("mean_avg_accel", "mean_peak_accel", "pct_unilateral", "movements_per_awake_hour")
    for leg in ("L", "R")
)


@dataclass(frozen=True)
class FeatureMask:
    selected: tuple
    method: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "selected", tuple(self.selected))
        if not self.selected:
            raise ValueError("a feature mask must select at least one feature")
        if len(set(self.selected)) != len(self.selected):
            raise ValueError("duplicate features in mask")
        if self.method not in METHODS:
            raise ValueError(f"unknown selection method {self.method!r}")

    def __len__(self):
        return len(self.selected)

    def validate(self, dataset: Dataset) -> "FeatureMask":
        missing = [f for f in self.selected if f not in dataset.schema.names]
        if missing:
            raise ValueError(f"mask features not in dataset schema: {missing}")
        return self

    def to_dict(self) -> dict:
        return {"method": self.method, "selected": list(self.selected), "params": self.params, "seed": self.seed}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d) -> "FeatureMask":
        return cls(tuple(d["selected"]), d.get("method", "manual"), dict(d.get("params", {})), int(d.get("seed", 0)))

    @classmethod
    def from_json(cls, text: str) -> "FeatureMask":
        return cls.from_dict(json.loads(text))


def _names(dataset, features):
    if features is None:
        return tuple(dataset.schema.names)
    return tuple(getattr(features, "selected", features))


def f_statistic(x: np.ndarray, y: np.ndarray) -> float:
    """One-way ANOVA F for two groups (df1 = 1, df2 = n - 2)."""
    groups = [x[y == 0], x[y == 1]]
    if min(len(g) for g in groups) < 2:
        raise DegenerateDatasetError("need at least 2 samples per class for an F statistic")
    if np.ptp(x) == 0:
        return 0.0
    grand = x.mean()
    ssb = sum(len(g) * (g.mean() - grand) ** 2 for g in groups)
    if all(np.ptp(g) == 0 for g in groups):
        return float("inf")
    ssw = sum(((g - g.mean()) ** 2).sum() for g in groups)
    return float(ssb / (ssw / (len(x) - 2)))


def univariate_f_scores(dataset: Dataset, features=None) -> dict:
    names = _names(dataset, features)
    X = dataset.matrix(names)
    return {n: f_statistic(X[:, j], dataset.y) for j, n in enumerate(names)}


def _rank(scores: dict, names: Sequence[str]) -> list[str]:
    # stable sort keeps schema order among equal scores
    return sorted(names, key=lambda n: -scores[n])


def select_univariate(dataset: Dataset, k: int, features=None) -> FeatureMask:
    names = _names(dataset, features)
    if not 1 <= k <= len(names):
        raise ValueError(f"k must lie in [1, {len(names)}], got {k}")
    scores = univariate_f_scores(dataset, names)
    top = set(_rank(scores, names)[:k])
    selected = tuple(n for n in names if n in top)
    return FeatureMask(selected, "univariate", {"k": k})


RFE_FAMILIES = ("LogisticRegression", "SVM", "DecisionTree", "RandomForest")


def _check_rfe_base(base: LearnerSpec):
    if base.family not in RFE_FAMILIES or (base.family == "SVM" and base.params["kernel"] != "linear"):
        raise UnsupportedLearnerError(
            f"{base} exposes no feature importances; use LogisticRegression, linear SVM, DecisionTree "
            "or RandomForest")


def select_rfe(dataset: Dataset, k: int, base: LearnerSpec, features=None) -> FeatureMask:
    """Refit on the surviving features and drop the least important one until ``k`` remain.

    Equal importances drop the schema-later feature.
    """
    _check_rfe_base(base)
    surviving = list(_names(dataset, features))
    if not 1 <= k <= len(surviving):
        raise ValueError(f"k must lie in [1, {len(surviving)}], got {k}")
    eliminated = []
    while len(surviving) > k:
        imp = fit(base, dataset, surviving).feature_importances()
        lowest = min(imp.values())
        drop = [n for n in surviving if imp[n] <= lowest][-1]
        surviving.remove(drop)
        eliminated.append(drop)
    return FeatureMask(tuple(surviving), "rfe",
                       {"k": k, "base": base.to_dict(), "elimination_order": eliminated}, base.seed)


def inner_loocv_score(dataset: Dataset, features: Sequence[str], base: LearnerSpec) -> Optional[float]:
    """Class-balanced leave-one-out accuracy, or ``None`` when a fold degenerates."""
    from .evaluate import loocv

    report = loocv(dataset, tuple(features), base)
    if any(f.startswith("fold_skipped") for f in report.flags):
        return None
    return 0.5 * (report.td_row.recall + report.ar_row.recall)


def select_stepwise(dataset: Dataset, base: LearnerSpec, direction: str = "forward",
                    features=None) -> FeatureMask:
    """Greedy forward addition or backward removal driven by inner leave-one-out accuracy.

    Forward search adds the best candidate while it improves the score by
    more than 1e-9. Backward search removes the feature whose removal scores
    best as long as that score is not worse (within 1e-9); it never empties
    the mask. Ties go to the schema-earlier feature.
    """
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    counts = dataset.counts()
    if min(counts.values()) < 3:
        raise DegenerateDatasetError("stepwise selection needs at least 3 samples per class")
    pool = list(_names(dataset, features))
    history = []

    def score(cands):
        s = inner_loocv_score(dataset, cands, base)
        if s is None:
            warnings.warn(f"skipping candidate set {cands}: a leave-one-out fold is single-class")
        return s

    if direction == "forward":
        current, current_score = [], -np.inf
        while len(current) < len(pool):
            best, best_score = None, -np.inf
            for name in pool:
                if name in current:
                    continue
                s = score([n for n in pool if n in current or n == name])
                if s is not None and s > best_score:
                    best, best_score = name, s
            if best is None or best_score <= current_score + STEP_TOL:
                break
            current = [n for n in pool if n in current or n == best]
            current_score = best_score
            history.append({"add": best, "score": best_score})
    else:
        current = list(pool)
        current_score = score(current)
        if current_score is None:
            current_score = -np.inf
        while len(current) > 1:
            best, best_score = None, -np.inf
            for name in current:
                s = score([n for n in current if n != name])
                if s is not None and s > best_score:
                    best, best_score = name, s
            if best is None or best_score < current_score - STEP_TOL:
                break
            current.remove(best)
            current_score = best_score
            history.append({"remove": best, "score": best_score})

    return FeatureMask(tuple(current), "stepwise",
                       {"direction": direction, "base": base.to_dict(), "history": history}, base.seed)


def correlation_matrix(X: np.ndarray) -> np.ndarray:
    """Pearson correlations; any pair involving a constant column gets r = 0."""
    Xc = X - X.mean(axis=0)
    norms = np.sqrt((Xc ** 2).sum(axis=0))
    const = np.ptp(X, axis=0) == 0
    safe = np.where(const, 1.0, norms)
    R = (Xc.T @ Xc) / np.outer(safe, safe)
    R[const, :] = 0.0
    R[:, const] = 0.0
    np.fill_diagonal(R, 1.0)
    return np.clip(R, -1.0, 1.0)


def prune_correlated(dataset: Dataset, mask: FeatureMask, threshold: float = 0.9) -> FeatureMask:
    """Repeatedly take the most correlated surviving pair above ``threshold``
    and drop its member with the lower F score (equal F drops the later one)."""
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    schema_pos = {n: i for i, n in enumerate(dataset.schema.names)}
    names = sorted(mask.selected, key=lambda n: schema_pos[n])
    R = np.abs(correlation_matrix(dataset.matrix(names)))
    scores = univariate_f_scores(dataset, names)
    alive = list(range(len(names)))
    dropped = []
    while True:
        best, pair = threshold, None
        for a_pos, a in enumerate(alive):
            for b in alive[a_pos + 1:]:
                if R[a, b] > best:
                    best, pair = R[a, b], (a, b)
        if pair is None:
            break
        a, b = pair
        loser = b if scores[names[a]] >= scores[names[b]] else a
        alive.remove(loser)
        dropped.append(names[loser])
    params = dict(mask.params)
    params.update({"corr_threshold": threshold, "pruned": dropped})
    kept = set(names[i] for i in alive)
    return FeatureMask(tuple(n for n in mask.selected if n in kept), mask.method, params, mask.seed)


def run_selector(dataset: Dataset, method: str, k: Optional[int] = None, base: Optional[LearnerSpec] = None,
                 direction: str = "forward", corr_threshold: Optional[float] = 0.9) -> FeatureMask:
    """Run one selector and (optionally) correlation pruning on its output."""
    if base is None:
        base = LearnerSpec.create("LogisticRegression")
    if method == "univariate":
        mask = select_univariate(dataset, k)
    elif method == "rfe":
        mask = select_rfe(dataset, k, base)
    elif method == "stepwise":
        mask = select_stepwise(dataset, base, direction)
    else:
        raise ValueError(f"unknown selection method {method!r}")
    if corr_threshold is not None:
        mask = prune_correlated(dataset, mask, corr_threshold)
    return mask


def selector_from_mask(mask: FeatureMask) -> Callable[[Dataset], FeatureMask]:
    """A callable that reruns the selection recorded in ``mask`` on another dataset."""
    if mask.method == "manual":
        return lambda ds: mask
    p = mask.params
    base = LearnerSpec.from_dict(p["base"]) if "base" in p else None
    return lambda ds: run_selector(ds, mask.method, p.get("k"), base, p.get("direction", "forward"),
                                   p.get("corr_threshold"))


def select_best_mask(dataset: Dataset, masks: Sequence[FeatureMask], spec: LearnerSpec) -> tuple[FeatureMask, list]:
    """Pick the mask with the highest leave-one-out accuracy for ``spec``; earlier masks win ties."""
    from .evaluate import loocv

    scored = [(loocv(dataset, m, spec).accuracy, m) for m in masks]
    best = max(range(len(scored)), key=lambda i: (scored[i][0], -i))
    return scored[best][1], [(m.method, acc) for acc, m in scored]


def manual_mask(names: Sequence[str]) -> FeatureMask:
    return FeatureMask(tuple(names), "manual")

