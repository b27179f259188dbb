"""Domain types shared by every other module.

Nothing in here touches the filesystem or fits a model.
"""
from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Optional, Sequence

import numpy as np

LEGS = ("L", "R")
LEG_FEATURES = (
    ("movements_per_awake_hour", "rate"),
    ("pct_unilateral", "percent"),
    ("pct_bilateral_sync", "percent"),
    ("pct_bilateral_async", "percent"),
    ("mean_duration", "duration_s"),
    ("sd_duration", "duration_s"),
    ("mean_avg_accel", "accel_g"),
    ("sd_avg_accel", "accel_g"),
    ("mean_peak_accel", "accel_g"),
    ("sd_peak_accel", "accel_g"),
)
LATERALITY = ("pct_unilateral", "pct_bilateral_sync", "pct_bilateral_async")
FEATURE_KINDS = ("rate", "count", "percent", "duration_s", "accel_g")

# relative slack used by every "tie breaks toward AR" comparison
TIE_RTOL = 1e-12


class InfantMotorError(Exception):
    pass


class DegenerateDatasetError(InfantMotorError, ValueError):
    """Raised when an operation needs both classes and only one is present."""


class SchemaMismatchError(InfantMotorError, ValueError):
    pass


class Label(enum.IntEnum):
    """Developmental status. AR is the positive class."""

    TD = 0
    AR = 1

    @classmethod
    def parse(cls, text: str) -> "Label":
        key = str(text).strip().upper()
        try:
            return cls[key]
        except KeyError:
            raise ValueError(f"label must be TD or AR, got {text!r}") from None


class Band(enum.Enum):
    ZERO_TO_SIX = "0-6"
    SIX_TO_TWELVE = "6-12"
    UNBANDED = "unbanded"

    def contains(self, age_months: float) -> bool:
        if self is Band.ZERO_TO_SIX:
            return 0.0 <= age_months < 6.0
        if self is Band.SIX_TO_TWELVE:
            return 6.0 <= age_months <= 12.0
        return age_months >= 0.0

    @classmethod
    def parse(cls, text: str) -> "Band":
        for band in cls:
            if text in (band.value, band.name):
                return band
        raise ValueError(f"unknown band {text!r}; expected 0-6, 6-12 or unbanded")


def vote(td_mass: float, ar_mass: float) -> Label:
    """Weighted two-way vote; an exact (or rounding-level) tie goes to AR."""
    if ar_mass >= td_mass - TIE_RTOL * (abs(td_mass) + abs(ar_mass)):
        return Label.AR
    return Label.TD


def infer_kind(name: str) -> str:
    base = name.lower()
    if base.startswith("pct_") or "percent" in base:
        return "percent"
    if "per_awake_hour" in base or base.endswith("_rate"):
        return "rate"
    if "count" in base:
        return "count"
    if "duration" in base:
        return "duration_s"
    if "accel" in base:
        return "accel_g"
    raise ValueError(f"cannot infer the kind of feature column {name!r}")


@dataclass(frozen=True)
class FeatureSchema:
    names: tuple[str, ...]
    kinds: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "kinds", tuple(self.kinds))
        if len(self.names) != len(self.kinds):
            raise ValueError("names and kinds must have the same length")
        if len(set(self.names)) != len(self.names):
            raise ValueError("feature names must be unique")
        if not self.names:
            raise ValueError("schema must contain at least one feature")
        for kind in self.kinds:
            if kind not in FEATURE_KINDS:
                raise ValueError(f"unknown feature kind {kind!r}")

    @classmethod
    def canonical(cls) -> "FeatureSchema":
        """Ten per-leg summaries for the left leg, then the same ten for the right."""
        names, kinds = [], []
        for leg in LEGS:
            for base, kind in LEG_FEATURES:
                names.append(f"{base}_{leg}")
                kinds.append(kind)
        return cls(tuple(names), tuple(kinds))

    @classmethod
    def from_names(cls, names: Iterable[str]) -> "FeatureSchema":
        names = tuple(names)
        return cls(names, tuple(infer_kind(n) for n in names))

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"feature {name!r} not in schema") from None

    def indices(self, names: Sequence[str]) -> list[int]:
        return [self.index(n) for n in names]

    def laterality_groups(self) -> list[tuple[int, int, int]]:
        """Index triples of (unilateral, sync, async) percentages that share a leg suffix."""
        groups = []
        for i, name in enumerate(self.names):
            if not name.startswith(LATERALITY[0] + "_"):
                continue
            suffix = name[len(LATERALITY[0]):]
            others = [f"{base}{suffix}" for base in LATERALITY[1:]]
            if all(o in self.names for o in others):
                groups.append((i, self.names.index(others[0]), self.names.index(others[1])))
        return groups

    @cached_property
    def fingerprint(self) -> str:
        text = "\n".join(f"{n}:{k}" for n, k in zip(self.names, self.kinds))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class SampleRecord:
    """One infant visit."""

    infant_id: str
    visit_index: int
    age_months: float
    label: Label
    features: tuple[float, ...]
    aims_score: Optional[float] = None
    awake_hours: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(float(v) for v in self.features))
        object.__setattr__(self, "label", Label(self.label))
        if self.visit_index < 1:
            raise ValueError(f"visit_index must be >= 1, got {self.visit_index}")
        if not (self.age_months >= 0.0 and math.isfinite(self.age_months)):
            raise ValueError(f"age_months must be a non-negative number, got {self.age_months}")
        if self.aims_score is not None and not self.aims_score >= 0.0:
            raise ValueError(f"aims_score must be non-negative, got {self.aims_score}")
        if self.awake_hours is not None and not self.awake_hours > 0.0:
            raise ValueError(f"awake_hours must be positive, got {self.awake_hours}")

    @property
    def record_id(self) -> tuple[str, int]:
        return (self.infant_id, self.visit_index)


def check_record(record: SampleRecord, schema: FeatureSchema) -> list[tuple[str, str]]:
    """Return (column, problem) pairs for every schema invariant the record breaks."""
    problems = []
    if len(record.features) != len(schema):
        return [("features", f"expected {len(schema)} values, got {len(record.features)}")]
    for name, kind, value in zip(schema.names, schema.kinds, record.features):
        if not math.isfinite(value):
            problems.append((name, f"non-finite value {value}"))
        elif kind == "percent" and not 0.0 <= value <= 100.0:
            problems.append((name, f"percentage {value} outside [0, 100]"))
        elif kind != "percent" and value < 0.0:
            problems.append((name, f"negative value {value}"))
    for triple in schema.laterality_groups():
        total = sum(record.features[i] for i in triple)
        if abs(total - 100.0) > 0.5:
            names = ", ".join(schema.names[i] for i in triple)
            problems.append((names, f"laterality percentages sum to {total}, not 100"))
    return problems


@dataclass(frozen=True)
class Dataset:
    records: tuple[SampleRecord, ...]
    schema: FeatureSchema
    band: Band = Band.UNBANDED
    normalized: bool = True

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        for r in self.records:
            if len(r.features) != len(self.schema):
                raise SchemaMismatchError(
                    f"record {r.record_id} has {len(r.features)} features, schema has {len(self.schema)}"
                )
            if not self.band.contains(r.age_months):
                raise ValueError(f"record {r.record_id} age {r.age_months} outside band {self.band.value}")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @cached_property
    def X(self) -> np.ndarray:
        X = np.array([r.features for r in self.records], dtype=float).reshape(len(self.records), len(self.schema))
        X.setflags(write=False)
        return X

    @cached_property
    def y(self) -> np.ndarray:
        y = np.array([int(r.label) for r in self.records], dtype=int)
        y.setflags(write=False)
        return y

    def matrix(self, names: Optional[Sequence[str]] = None) -> np.ndarray:
        if names is None:
            return self.X
        return self.X[:, self.schema.indices(names)]

    def counts(self) -> dict[Label, int]:
        n_ar = int(self.y.sum())
        return {Label.TD: len(self) - n_ar, Label.AR: n_ar}

    def subset(self, indices: Iterable[int], band: Optional[Band] = None) -> "Dataset":
        return Dataset(
            tuple(self.records[i] for i in indices),
            self.schema,
            self.band if band is None else band,
            self.normalized,
        )

    def with_records(self, records: Iterable[SampleRecord], band: Optional[Band] = None) -> "Dataset":
        return Dataset(tuple(records), self.schema, self.band if band is None else band, self.normalized)

    def canonical_order(self) -> list[int]:
        """Record indices sorted by stable record id (infant, visit, then content)."""
        return sorted(
            range(len(self.records)),
            key=lambda i: (self.records[i].record_id, self.records[i].age_months, self.records[i].features),
        )


def concat(datasets: Sequence[Dataset], band: Band = Band.UNBANDED) -> Dataset:
    if not datasets:
        raise ValueError("nothing to concatenate")
    schema = datasets[0].schema
    for ds in datasets[1:]:
        if ds.schema != schema:
            raise SchemaMismatchError("cannot concatenate datasets with different schemas")
    records = [r for ds in datasets for r in ds.records]
    return Dataset(tuple(records), schema, band, all(ds.normalized for ds in datasets))


@dataclass(frozen=True)
class ClassWeights:
    td_weight: float
    ar_weight: float

    def __post_init__(self):
        if not (self.td_weight > 0 and self.ar_weight > 0):
            raise ValueError("class weights must be positive")

    def for_labels(self, y: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(y) == int(Label.AR), self.ar_weight, self.td_weight)


def balanced_weights_from_labels(y: np.ndarray) -> ClassWeights:
    y = np.asarray(y)
    n = len(y)
    n_ar = int((y == int(Label.AR)).sum())
    n_td = n - n_ar
    if n_ar == 0 or n_td == 0:
        raise DegenerateDatasetError(f"need both classes for balanced weights (TD={n_td}, AR={n_ar})")
    return ClassWeights(n / (2.0 * n_td), n / (2.0 * n_ar))


def balanced_class_weights(dataset: Dataset) -> ClassWeights:
    """Weights n / (2 n_c) so both classes carry the same total mass."""
    return balanced_weights_from_labels(dataset.y)
