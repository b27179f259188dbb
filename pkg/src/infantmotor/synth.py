"""Synthetic visit records drawn from independent per-class Gaussians."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .core import Band, Dataset, FeatureSchema, Label, SampleRecord
from .features import ZERO_TO_SIX_FEATURES

# (mean, sd) per leg feature; loosely shaped like day-long infant leg data
BASE_PROFILE = {
    "movements_per_awake_hour": (150.0, 40.0),
    "pct_unilateral": (45.0, 8.0),
    "pct_bilateral_sync": (25.0, 5.0),
    "pct_bilateral_async": (30.0, 5.0),
    "mean_duration": (1.2, 0.2),
    "sd_duration": (0.8, 0.15),
    "mean_avg_accel": (1.5, 0.2),
    "sd_avg_accel": (0.6, 0.1),
    "mean_peak_accel": (4.0, 0.6),
    "sd_peak_accel": (1.8, 0.3),
}

CENSUS = {Band.ZERO_TO_SIX: (16, 15), Band.SIX_TO_TWELVE: (23, 38)}
AGE_RANGE = {Band.ZERO_TO_SIX: (0.0, 6.0), Band.SIX_TO_TWELVE: (6.0, 12.0), Band.UNBANDED: (0.0, 12.0)}


@dataclass(frozen=True)
class GeneratorProfile:
    td_mean: tuple
    td_sd: tuple
    ar_mean: tuple
    ar_sd: tuple
    n_td: int
    n_ar: int
    band: Band = Band.UNBANDED
    seed: int = 0
    schema: FeatureSchema = FeatureSchema.canonical()
    id_prefix: str = ""

    def __post_init__(self):
        d = len(self.schema)
        for name in ("td_mean", "td_sd", "ar_mean", "ar_sd"):
            v = tuple(float(x) for x in getattr(self, name))
            if len(v) != d:
                raise ValueError(f"{name} has {len(v)} entries, schema has {d}")
            object.__setattr__(self, name, v)
        if min(self.td_sd + self.ar_sd) < 0:
            raise ValueError("standard deviations must be >= 0")
        if self.n_td < 1 or self.n_ar < 1:
            raise ValueError("need at least one record per class")

    @classmethod
    def from_dict(cls, d: Mapping) -> "GeneratorProfile":
        """Build from ``{"td": {"mean": {...}, "sd": {...}}, "ar": {...}, "n_td", "n_ar", ...}``.

        Features missing from a class block fall back to the built-in base profile.
        """
        schema = FeatureSchema.from_names(d["features"]) if "features" in d else FeatureSchema.canonical()
        base = base_vectors(schema)

        def vec(block, key, fallback):
            given = d.get(block, {}).get(key, {})
            return tuple(float(given.get(n, fb)) for n, fb in zip(schema.names, fallback))

        return cls(
            vec("td", "mean", base[0]), vec("td", "sd", base[1]),
            vec("ar", "mean", base[0]), vec("ar", "sd", base[1]),
            int(d["n_td"]), int(d["n_ar"]), Band.parse(d.get("band", "unbanded")), int(d.get("seed", 0)),
            schema, d.get("id_prefix", ""),
        )

    @classmethod
    def from_json(cls, text: str) -> "GeneratorProfile":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        names = self.schema.names
        return {
            "features": list(names),
            "td": {"mean": dict(zip(names, self.td_mean)), "sd": dict(zip(names, self.td_sd))},
            "ar": {"mean": dict(zip(names, self.ar_mean)), "sd": dict(zip(names, self.ar_sd))},
            "n_td": self.n_td, "n_ar": self.n_ar, "band": self.band.value, "seed": self.seed,
            "id_prefix": self.id_prefix,
        }


def base_vectors(schema: FeatureSchema) -> tuple[tuple, tuple]:
    means, sds = [], []
    for name in schema.names:
        stem = name.rsplit("_", 1)[0]
        mean, sd = BASE_PROFILE.get(stem, (1.0, 0.2))
        means.append(mean)
        sds.append(sd)
    return tuple(means), tuple(sds)


def _clamp(row: np.ndarray, schema: FeatureSchema) -> np.ndarray:
    for j, kind in enumerate(schema.kinds):
        row[j] = min(max(row[j], 0.0), 100.0) if kind == "percent" else max(row[j], 0.0)
    for triple in schema.laterality_groups():
        idx = list(triple)
        total = row[idx].sum()
        row[idx] = 100.0 / 3.0 if total <= 0 else np.clip(row[idx] / total * 100.0, 0.0, 100.0)
    return row


def generate(profile: GeneratorProfile) -> Dataset:
    """Draw ``n_td`` TD then ``n_ar`` AR records; bit-deterministic in the profile seed."""
    rng = np.random.default_rng(profile.seed)
    schema = profile.schema
    lo, hi = AGE_RANGE[profile.band]
    records = []
    for label, n, mean, sd in ((Label.TD, profile.n_td, profile.td_mean, profile.td_sd),
                               (Label.AR, profile.n_ar, profile.ar_mean, profile.ar_sd)):
        draws = rng.normal(size=(n, len(schema))) * np.asarray(sd) + np.asarray(mean)
        ages = rng.uniform(lo, hi, size=n)
        awake = rng.uniform(8.0, 12.0, size=n)
        for i in range(n):
            row = _clamp(draws[i].copy(), schema)
            records.append(SampleRecord(
                f"{profile.id_prefix}{label.name}{i + 1:03d}", 1, float(ages[i]), label,
                tuple(float(v) for v in row), None, float(awake[i])))
    return Dataset(tuple(records), schema, profile.band, normalized=True)


def separated_profile(band: Band, separation: float, seed: int = 0, informative=ZERO_TO_SIX_FEATURES,
                      counts: Optional[tuple[int, int]] = None) -> GeneratorProfile:
    """Base profile with TD means raised by ``separation`` sds on the informative features."""
    if separation < 0:
        raise ValueError("separation must be >= 0")
    schema = FeatureSchema.canonical()
    means, sds = base_vectors(schema)
    td_mean = tuple(m + separation * s if n in informative else m for n, m, s in zip(schema.names, means, sds))
    n_td, n_ar = counts or CENSUS[band]
    prefix = {Band.ZERO_TO_SIX: "A", Band.SIX_TO_TWELVE: "B"}.get(band, "U")
    return GeneratorProfile(td_mean, sds, means, sds, n_td, n_ar, band, seed, schema, prefix)


def paper_census_fixture(band: Band, separation: float = 0.0, seed: int = 0) -> Dataset:
    """16 TD / 15 AR records for 0-6 months or 23 TD / 38 AR for 6-12 months."""
    if band not in CENSUS:
        raise ValueError("band must be 0-6 or 6-12")
    return generate(separated_profile(band, separation, seed))


def fig2_profile(seed: int = 0, td_accel: float = 3.0, ar_accel: float = 1.5, sd: float = 0.2) -> GeneratorProfile:
    """0-6 month census where only mean_avg_accel_R separates the classes."""
    schema = FeatureSchema.canonical()
    means, sds = base_vectors(schema)
    j = schema.index("mean_avg_accel_R")
    td_mean, ar_mean, sds = list(means), list(means), list(sds)
    td_mean[j], ar_mean[j], sds[j] = td_accel, ar_accel, sd
    n_td, n_ar = CENSUS[Band.ZERO_TO_SIX]
    return GeneratorProfile(tuple(td_mean), tuple(sds), tuple(ar_mean), tuple(sds), n_td, n_ar,
                            Band.ZERO_TO_SIX, seed, schema, "A")
