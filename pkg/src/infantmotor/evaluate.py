"""Leave-one-out evaluation, per-class metric tables and the weighted-random baseline."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (
    Dataset,
    DegenerateDatasetError,
    Label,
    balanced_weights_from_labels,
)
from .learners import LearnerSpec, fit_arrays

MODE_FIXED = "mask_fixed"
MODE_PER_FOLD = "select_per_fold"


@dataclass(frozen=True)
class ConfusionMatrix:
    td_correct: int
    td_wrong: int
    ar_correct: int
    ar_wrong: int

    def __post_init__(self):
        for name in ("td_correct", "td_wrong", "ar_correct", "ar_wrong"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v}")
            object.__setattr__(self, name, int(v))

    @property
    def n_td(self) -> int:
        return self.td_correct + self.td_wrong

    @property
    def n_ar(self) -> int:
        return self.ar_correct + self.ar_wrong

    @property
    def n(self) -> int:
        return self.n_td + self.n_ar

    @classmethod
    def from_predictions(cls, predicted: Sequence[int], actual: Sequence[int]) -> "ConfusionMatrix":
        p = np.asarray(predicted, dtype=int)
        a = np.asarray(actual, dtype=int)
        return cls(
            int(((a == 0) & (p == 0)).sum()),
            int(((a == 0) & (p == 1)).sum()),
            int(((a == 1) & (p == 1)).sum()),
            int(((a == 1) & (p == 0)).sum()),
        )

    def to_dict(self) -> dict:
        return {"td_correct": self.td_correct, "td_wrong": self.td_wrong,
                "ar_correct": self.ar_correct, "ar_wrong": self.ar_wrong}


@dataclass(frozen=True)
class MetricRow:
    accuracy: float
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return {"accuracy": self.accuracy, "precision": self.precision, "recall": self.recall, "f1": self.f1}


@dataclass(frozen=True)
class EvalReport:
    """Metric table for one evaluated configuration.

    ``confusion`` is ``None`` for reports averaged over several runs (the
    baseline); the individual runs are then kept in ``runs``.
    """

    confusion: Optional[ConfusionMatrix]
    td_row: MetricRow
    ar_row: MetricRow
    average_row: MetricRow
    predictions: tuple = ()
    flags: tuple = ()
    mode: str = ""
    name: str = ""
    runs: tuple = field(default=(), repr=False)

    @property
    def accuracy(self) -> float:
        return self.average_row.accuracy

    def ranking_key(self) -> tuple[float, float, float]:
        return (self.average_row.accuracy, self.ar_row.recall, self.average_row.f1)

    def to_dict(self, include_runs: bool = False) -> dict:
        d = {
            "name": self.name,
            "mode": self.mode,
            "confusion": None if self.confusion is None else self.confusion.to_dict(),
            "rows": {"TD": self.td_row.to_dict(), "AR": self.ar_row.to_dict(), "Average": self.average_row.to_dict()},
            "flags": list(self.flags),
            "predictions": [{"record": r, "predicted": p, "actual": a} for r, p, a in self.predictions],
        }
        if self.runs:
            d["n_runs"] = len(self.runs)
            if include_runs:
                d["runs"] = [r.to_dict() for r in self.runs]
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(**kw), indent=2, sort_keys=True)


def _ratio(num: int, den: int) -> Fraction:
    return Fraction(num, den) if den else Fraction(0)


def _f1(p: Fraction, r: Fraction) -> Fraction:
    return 2 * p * r / (p + r) if p + r else Fraction(0)


def exact_rows(confusion: ConfusionMatrix) -> dict[str, tuple[Fraction, Fraction, Fraction, Fraction]]:
    """TD, AR and class-size-weighted average rows as exact fractions.

    Per-class accuracy is the class recall. Undefined ratios (zero
    denominators) are 0.
    """
    c = confusion
    if c.n == 0:
        raise DegenerateDatasetError("confusion matrix is empty")
    td_p = _ratio(c.td_correct, c.td_correct + c.ar_wrong)
    ar_p = _ratio(c.ar_correct, c.ar_correct + c.td_wrong)
    td_r = _ratio(c.td_correct, c.n_td)
    ar_r = _ratio(c.ar_correct, c.n_ar)
    td = (td_r, td_p, td_r, _f1(td_p, td_r))
    ar = (ar_r, ar_p, ar_r, _f1(ar_p, ar_r))
    avg = tuple((c.n_td * a + c.n_ar * b) / c.n for a, b in zip(td, ar))
    return {"TD": td, "AR": ar, "Average": avg}


def _flags(c: ConfusionMatrix) -> tuple[str, ...]:
    flags = []
    if c.n_td == 0:
        flags.append("td_absent")
    if c.n_ar == 0:
        flags.append("ar_absent")
    if c.td_correct + c.ar_wrong == 0:
        flags.append("td_precision_undefined")
    if c.ar_correct + c.td_wrong == 0:
        flags.append("ar_precision_undefined")
    return tuple(flags)


@lru_cache(maxsize=8192)
def _float_rows(confusion: ConfusionMatrix) -> tuple[MetricRow, MetricRow, MetricRow]:
    # baselines revisit the same few hundred confusions thousands of times
    rows = exact_rows(confusion)
    return tuple(MetricRow(*(float(v) for v in rows[name])) for name in ("TD", "AR", "Average"))


def compute_report(confusion: ConfusionMatrix, **kw) -> EvalReport:
    flags = _flags(confusion) + tuple(kw.pop("flags", ()))
    return EvalReport(confusion, *_float_rows(confusion), flags=flags, **kw)


def row_is_consistent(precision: float, recall: float, f1: float, decimals: int = 2) -> bool:
    """Whether a printed (precision, recall, F1) triple can come from one confusion matrix.

    Each printed value is taken to lie within one unit of its last printed
    digit; F1 is monotone in both arguments, so interval ends suffice.
    """
    h = 10.0 ** -decimals
    lo = float(_f1(Fraction(max(precision - h, 0)), Fraction(max(recall - h, 0))))
    hi = float(_f1(Fraction(min(precision + h, 1)), Fraction(min(recall + h, 1))))
    return lo <= f1 + h and f1 - h <= hi


COLUMNS = ("accuracy", "precision", "recall", "f1")


def matches_printed(value, printed: str) -> bool:
    """Whether ``value`` prints as ``printed`` under round-half-up or truncation.

    The number of decimals is read off the printed text; a bare integer such
    as ``"1"`` is compared at two decimals.
    """
    text = printed.strip()
    decimals = len(text.split(".")[1]) if "." in text else 2
    target = Fraction(text)
    exact = Fraction(value)
    scale = 10 ** decimals
    truncated = Fraction(int(exact * scale), scale)
    rounded = Fraction(int(exact * scale + Fraction(1, 2)), scale)
    return target in (truncated, rounded)


def audit_printed_table(confusion: ConfusionMatrix, printed: dict) -> dict:
    """Compare exact metrics with a printed table.

    ``printed`` maps "TD"/"AR"/"Average" to four strings (accuracy,
    precision, recall, F1). Returns the mismatching cells and the rows whose
    printed precision/recall/F1 cannot come from any single confusion matrix.
    """
    rows = exact_rows(confusion)
    mismatches, inconsistent = [], []
    for name, cells in printed.items():
        for col, exact, text in zip(COLUMNS, rows[name], cells):
            if not matches_printed(exact, text):
                mismatches.append((name, col, text, float(exact)))
        decimals = min(len(t.split(".")[1]) if "." in t else 2 for t in cells[1:])
        if not row_is_consistent(*(float(t) for t in cells[1:]), decimals=decimals):
            inconsistent.append(name)
    return {"mismatches": mismatches, "inconsistent_rows": inconsistent}


def record_key(record) -> str:
    return f"{record.infant_id}#{record.visit_index}"


def _fit_predict(spec: LearnerSpec, features, schema_fp):
    def predict(X_train, y_train, X_test):
        w = balanced_weights_from_labels(y_train).for_labels(y_train)
        return fit_arrays(spec, X_train, y_train, w, features, schema_fp).predict_matrix(X_test)
    return predict


def loocv_predictions(dataset: Dataset, features: Optional[Sequence[str]],
                      make_predictor: Callable, selector: Optional[Callable] = None, n_jobs: int = 1):
    """Run leave-one-out folds in stable record-id order.

    ``make_predictor(features)`` returns ``predict(X_train, y_train, X_test)``.
    ``selector`` (when given) maps the training fold to a feature mask, which
    keeps feature selection inside the fold.

    Returns ``(records, predicted, actual, skipped)`` aligned lists.
    """
    if len(dataset) < 3:
        raise DegenerateDatasetError("leave-one-out needs at least 3 records")
    counts = dataset.counts()
    if counts[Label.TD] == 0 or counts[Label.AR] == 0:
        raise DegenerateDatasetError("leave-one-out needs both classes")
    order = dataset.canonical_order()
    y = dataset.y
    all_features = tuple(dataset.schema.names if features is None else getattr(features, "selected", features))

    def run_fold(i):
        train = [j for j in order if j != i]
        y_train = y[train]
        if y_train.min() == y_train.max():
            return None
        feats = all_features
        if selector is not None:
            feats = tuple(selector(dataset.subset(train)).selected)
        X = dataset.matrix(feats)
        return int(make_predictor(feats)(X[train], y_train, X[[i]])[0])

    if n_jobs == 1:
        preds = [run_fold(i) for i in order]
    else:
        from joblib import Parallel, delayed
        preds = Parallel(n_jobs=n_jobs)(delayed(run_fold)(i) for i in order)

    records, predicted, actual, skipped = [], [], [], []
    for i, p in zip(order, preds):
        if p is None:
            skipped.append(dataset.records[i])
            continue
        records.append(dataset.records[i])
        predicted.append(p)
        actual.append(int(y[i]))
    return records, predicted, actual, skipped


def report_from_predictions(records, predicted, actual, skipped=(), mode="", name="") -> EvalReport:
    confusion = ConfusionMatrix.from_predictions(predicted, actual)
    preds = tuple((record_key(r), Label(p).name, Label(a).name) for r, p, a in zip(records, predicted, actual))
    flags = tuple(f"fold_skipped:{record_key(r)}" for r in skipped)
    return compute_report(confusion, predictions=preds, flags=flags, mode=mode, name=name)


def loocv(dataset: Dataset, features, spec: LearnerSpec, selector: Optional[Callable] = None,
          n_jobs: int = 1) -> EvalReport:
    """Leave-one-out report for ``spec``; class weights are rebalanced on every fold.

    ``features`` is a FeatureMask, a sequence of names or ``None`` for the
    whole schema. With ``selector`` the mask is recomputed inside each fold.
    """
    fp = dataset.schema.fingerprint
    records, predicted, actual, skipped = loocv_predictions(
        dataset, features, lambda f: _fit_predict(spec, f, fp), selector, n_jobs)
    mode = MODE_PER_FOLD if selector is not None else MODE_FIXED
    return report_from_predictions(records, predicted, actual, skipped, mode, str(spec))


def _mean_row(rows: Sequence[MetricRow]) -> MetricRow:
    return MetricRow(*(float(np.mean([getattr(r, f) for r in rows])) for f in ("accuracy", "precision", "recall", "f1")))


def average_reports(reports: Sequence[EvalReport], mode="", name="") -> EvalReport:
    flags = tuple(sorted({f for r in reports for f in r.flags}))
    return EvalReport(
        None,
        _mean_row([r.td_row for r in reports]),
        _mean_row([r.ar_row for r in reports]),
        _mean_row([r.average_row for r in reports]),
        flags=flags,
        mode=mode,
        name=name,
        runs=tuple(reports),
    )


def weighted_random_baseline(dataset: Dataset, runs: int = 10, seed: int = 0) -> EvalReport:
    """Average of ``runs`` reports whose predictions are drawn from the class prior."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    n = len(dataset)
    if n == 0:
        raise DegenerateDatasetError("empty dataset")
    y = dataset.y
    p_ar = float(y.mean())
    rng = np.random.default_rng(seed)
    reports = []
    for _ in range(runs):
        pred = (rng.random(n) < p_ar).astype(int)
        reports.append(compute_report(ConfusionMatrix.from_predictions(pred, y), mode="baseline"))
    return average_reports(reports, mode="baseline", name=f"weighted random baseline ({runs} runs)")


def baseline_expected_accuracy(n_td: int, n_ar: int) -> float:
    p = n_td / (n_td + n_ar)
    return p * p + (1 - p) * (1 - p)


def improvement_over_baseline(model_report: EvalReport, baseline_report: EvalReport) -> float:
    """Average-accuracy gain in percentage points."""
    return 100.0 * (model_report.average_row.accuracy - baseline_report.average_row.accuracy)


def _fixed(value: float, decimals: int) -> str:
    # half-up, like the printed tables (so 0.8125 shows as 0.813)
    return str(Decimal(value).quantize(Decimal(1).scaleb(-decimals), rounding=ROUND_HALF_UP))


def render_table(report: EvalReport, title: Optional[str] = None, decimals: int = 3) -> str:
    """Aligned text table: Class | Accuracy | Precision | Recall | F1 Score, plus the Average row."""
    header = ("Class", "Accuracy", "Precision", "Recall", "F1 Score")
    body = []
    for name, row in (("TD", report.td_row), ("AR", report.ar_row), ("Average", report.average_row)):
        body.append((name,) + tuple(_fixed(v, decimals) for v in (row.accuracy, row.precision, row.recall, row.f1)))
    widths = [max(len(r[i]) for r in [header] + body) for i in range(len(header))]
    fmt = lambda r: "  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip()  # noqa: E731
    lines = []
    if title is None:
        title = report.name
    if title:
        lines.append(title)
    lines.append(fmt(header))
    lines.append("  ".join("-" * w for w in widths))
    lines.extend(fmt(r) for r in body[:2])
    lines.append("  ".join("=" * w for w in widths))
    lines.append(fmt(body[2]))
    if report.mode:
        lines.append(f"mode: {report.mode}")
    if report.flags:
        lines.append("flags: " + ", ".join(report.flags))
    return "\n".join(lines) + "\n"
