"""CSV ingestion, awake-time normalisation and age banding."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import replace
from pathlib import Path
from typing import Optional, Union

from .core import (
    Band,
    Dataset,
    FeatureSchema,
    InfantMotorError,
    Label,
    SampleRecord,
    check_record,
)

REQUIRED_COLUMNS = ("infant_id", "visit_index", "age_months", "label")
OPTIONAL_COLUMNS = ("aims_score", "awake_hours")
RESERVED = REQUIRED_COLUMNS + OPTIONAL_COLUMNS


class IngestError(InfantMotorError, ValueError):
    """Carries every located problem found in a file.

    ``errors`` is a list of ``(row, column, message)``; ``row`` counts data
    rows from 1 (the header is row 0) and is ``None`` for header problems.
    """

    def __init__(self, errors):
        self.errors = list(errors)
        lines = [f"row {r if r is not None else '-'} column {c}: {m}" for r, c, m in self.errors[:20]]
        if len(self.errors) > 20:
            lines.append(f"... and {len(self.errors) - 20} more")
        super().__init__("\n".join(lines))


def _parse_float(text, row, column, errors, required=True):
    text = (text or "").strip()
    if not text:
        if required:
            errors.append((row, column, "missing value"))
        return None
    try:
        value = float(text)
    except ValueError:
        errors.append((row, column, f"non-numeric value {text!r}"))
        return None
    if not math.isfinite(value):
        errors.append((row, column, f"non-finite value {text!r}"))
        return None
    return value


def read_csv(source: Union[str, Path, io.TextIOBase], schema: Optional[FeatureSchema] = None) -> Dataset:
    if hasattr(source, "read"):
        return _read(source, schema)
    with open(source, newline="", encoding="utf-8") as fh:
        return _read(fh, schema)


load_csv = read_csv


def _read(fh, schema):
    reader = csv.reader(fh)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise IngestError([(None, "header", "file is empty")]) from None

    errors = []
    for col in REQUIRED_COLUMNS:
        if col not in header:
            errors.append((None, col, "required column missing"))
    if len(set(header)) != len(header):
        errors.append((None, "header", "duplicate column names"))
    if schema is None:
        names = [h for h in header if h not in RESERVED]
        try:
            schema = FeatureSchema.from_names(names)
        except ValueError as exc:
            errors.append((None, "header", str(exc)))
    else:
        for name in schema.names:
            if name not in header:
                errors.append((None, name, "feature column missing"))
    if errors:
        raise IngestError(errors)

    raw = "count" in schema.kinds
    if raw and "awake_hours" not in header:
        raise IngestError([(None, "awake_hours", "raw movement counts need an awake_hours column")])

    pos = {h: i for i, h in enumerate(header)}
    records = []
    for row_no, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            errors.append((row_no, "*", f"expected {len(header)} cells, got {len(row)}"))
            continue
        n_before = len(errors)
        cell = lambda c: row[pos[c]] if c in pos else ""  # noqa: E731

        infant_id = cell("infant_id").strip()
        if not infant_id:
            errors.append((row_no, "infant_id", "missing value"))
        visit = _parse_float(cell("visit_index"), row_no, "visit_index", errors)
        if visit is not None and (visit != int(visit) or visit < 1):
            errors.append((row_no, "visit_index", f"visit_index must be an integer >= 1, got {visit}"))
        age = _parse_float(cell("age_months"), row_no, "age_months", errors)
        if age is not None and age < 0:
            errors.append((row_no, "age_months", f"negative age {age}"))
        try:
            label = Label.parse(cell("label"))
        except ValueError as exc:
            label = None
            errors.append((row_no, "label", str(exc)))
        aims = _parse_float(cell("aims_score"), row_no, "aims_score", errors, required=False)
        if aims is not None and aims < 0:
            errors.append((row_no, "aims_score", f"negative score {aims}"))
        awake = _parse_float(cell("awake_hours"), row_no, "awake_hours", errors, required=raw)
        if awake is not None and awake <= 0:
            errors.append((row_no, "awake_hours", f"awake_hours must be positive, got {awake}"))
        features = [_parse_float(cell(n), row_no, n, errors) for n in schema.names]
        if len(errors) > n_before:
            continue

        record = SampleRecord(infant_id, int(visit), age, label, tuple(features), aims, awake)
        problems = check_record(record, schema)
        if problems:
            errors.extend((row_no, col, msg) for col, msg in problems)
            continue
        records.append(record)

    if errors:
        raise IngestError(errors)
    return Dataset(tuple(records), schema, Band.UNBANDED, normalized=not raw)


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def write_csv(dataset: Dataset, target: Union[str, Path, io.TextIOBase]) -> None:
    """Write ``dataset`` in the ingest format; floats use their shortest round-trip repr."""
    if hasattr(target, "write"):
        _write(dataset, target)
        return
    with open(target, "w", newline="", encoding="utf-8") as fh:
        _write(dataset, fh)


def _write(dataset, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(list(RESERVED) + list(dataset.schema.names))
    for r in dataset.records:
        writer.writerow(
            [r.infant_id, r.visit_index, _fmt(r.age_months), r.label.name, _fmt(r.aims_score), _fmt(r.awake_hours)]
            + [_fmt(v) for v in r.features]
        )


def rate_name(count_name: str) -> str:
    if "movement_count" in count_name:
        return count_name.replace("movement_count", "movements_per_awake_hour")
    return count_name + "_per_awake_hour"


def normalize_by_awake_time(dataset: Dataset) -> Dataset:
    """Turn raw movement counts into movements per awake hour.

    Duration and acceleration summaries are per-movement statistics and pass
    through untouched. A dataset with no count columns is returned as is.
    """
    count_idx = [i for i, k in enumerate(dataset.schema.kinds) if k == "count"]
    if not count_idx:
        return dataset if dataset.normalized else replace(dataset, normalized=True)

    errors = []
    records = []
    for row_no, r in enumerate(dataset.records, start=1):
        if r.awake_hours is None or not r.awake_hours > 0:
            errors.append((row_no, "awake_hours", f"need positive awake_hours, got {r.awake_hours}"))
            continue
        feats = list(r.features)
        for i in count_idx:
            feats[i] = feats[i] / r.awake_hours
        records.append(replace(r, features=tuple(feats)))
    if errors:
        raise IngestError(errors)

    names = list(dataset.schema.names)
    kinds = list(dataset.schema.kinds)
    for i in count_idx:
        names[i] = rate_name(names[i])
        kinds[i] = "rate"
    return Dataset(tuple(records), FeatureSchema(tuple(names), tuple(kinds)), dataset.band, normalized=True)


def split_age_bands(dataset: Dataset) -> tuple[Dataset, Dataset, Dataset]:
    """Partition into [0, 6) months, [6, 12] months and the discarded remainder (> 12)."""
    low, high, rest = [], [], []
    for r in dataset.records:
        if Band.ZERO_TO_SIX.contains(r.age_months):
            low.append(r)
        elif Band.SIX_TO_TWELVE.contains(r.age_months):
            high.append(r)
        else:
            rest.append(r)
    return (
        dataset.with_records(low, Band.ZERO_TO_SIX),
        dataset.with_records(high, Band.SIX_TO_TWELVE),
        dataset.with_records(rest, Band.UNBANDED),
    )


def assign_band(dataset: Dataset, band: Band) -> Dataset:
    """Tag an already-banded dataset, failing on the first record outside ``band``."""
    errors = [
        (i, "age_months", f"age {r.age_months} outside band {band.value}")
        for i, r in enumerate(dataset.records, start=1)
        if not band.contains(r.age_months)
    ]
    if errors:
        raise IngestError(errors)
    return dataset.with_records(dataset.records, band)


def census(dataset: Dataset) -> dict:
    counts = dataset.counts()
    return {"n": len(dataset), "TD": counts[Label.TD], "AR": counts[Label.AR]}
