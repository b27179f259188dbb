from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from infantmotor.core import (
    Band, Dataset, DegenerateDatasetError, FeatureSchema, Label, SampleRecord,
    balanced_class_weights, balanced_weights_from_labels, check_record, vote,
)

from conftest import make_dataset


@pytest.mark.parametrize("n_td,n_ar,expected", [
    (10, 10, (Fraction(1), Fraction(1))),
    (16, 15, (Fraction(31, 32), Fraction(31, 30))),
    (23, 38, (Fraction(61, 46), Fraction(61, 76))),
])
def test_balanced_weights_examples(n_td, n_ar, expected):
    ds = make_dataset(np.zeros(n_td + n_ar), [0] * n_td + [1] * n_ar)
    w = balanced_class_weights(ds)
    assert w.td_weight == pytest.approx(float(expected[0]), rel=1e-15)
    assert w.ar_weight == pytest.approx(float(expected[1]), rel=1e-15)


def test_single_class_is_degenerate():
    with pytest.raises(DegenerateDatasetError):
        balanced_weights_from_labels(np.zeros(5, dtype=int))


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 200), st.integers(1, 200))
def test_weighted_class_mass_equal(n_td, n_ar):
    y = np.array([0] * n_td + [1] * n_ar)
    w = balanced_weights_from_labels(y).for_labels(y)
    td, ar = w[y == 0].sum(), w[y == 1].sum()
    assert td == pytest.approx(ar, rel=1e-12)


def test_label_parse_case_insensitive():
    assert Label.parse("ar") is Label.AR
    assert Label.parse(" Td ") is Label.TD
    with pytest.raises(ValueError):
        Label.parse("maybe")


def test_vote_tie_goes_to_ar():
    assert vote(1.0, 1.0) is Label.AR
    assert vote(0.1 + 0.2, 0.3) is Label.AR
    assert vote(2.0, 1.0) is Label.TD


def test_band_boundary_convention():
    assert Band.ZERO_TO_SIX.contains(5.999)
    assert not Band.ZERO_TO_SIX.contains(6.0)
    assert Band.SIX_TO_TWELVE.contains(6.0) and Band.SIX_TO_TWELVE.contains(12.0)
    assert not Band.SIX_TO_TWELVE.contains(12.01)


def test_canonical_schema_layout():
    schema = FeatureSchema.canonical()
    assert len(schema) == 20
    assert schema.names[0] == "movements_per_awake_hour_L"
    assert schema.names[10] == "movements_per_awake_hour_R"
    assert len(schema.laterality_groups()) == 2
    assert schema.fingerprint == FeatureSchema.canonical().fingerprint


def test_schema_rejects_duplicates_and_bad_kinds():
    with pytest.raises(ValueError):
        FeatureSchema(("a_accel", "a_accel"), ("accel_g", "accel_g"))
    with pytest.raises(ValueError):
        FeatureSchema(("a",), ("volts",))


def _record(features, schema=FeatureSchema.canonical()):
    return SampleRecord("i1", 1, 2.0, Label.TD, features)


def test_check_record_flags_invariants():
    schema = FeatureSchema.canonical()
    good = [100.0, 40.0, 30.0, 30.0, 1.0, 0.5, 1.0, 0.5, 3.0, 1.0] * 2
    assert check_record(_record(good), schema) == []
    bad = list(good)
    bad[1] = 140.0
    cols = [c for c, _ in check_record(_record(bad), schema)]
    assert "pct_unilateral_L" in cols
    bad = list(good)
    bad[6] = -0.1
    assert [c for c, _ in check_record(_record(bad), schema)] == ["mean_avg_accel_L"]
    bad = list(good)
    bad[2] = 31.0  # triple sums to 101
    assert len(check_record(_record(bad), schema)) == 1


def test_record_validation():
    with pytest.raises(ValueError):
        SampleRecord("x", 0, 1.0, Label.TD, (1.0,))
    with pytest.raises(ValueError):
        SampleRecord("x", 1, -1.0, Label.TD, (1.0,))
    with pytest.raises(ValueError):
        SampleRecord("x", 1, 1.0, Label.TD, (1.0,), awake_hours=0.0)


def test_dataset_band_invariant():
    schema = FeatureSchema(("a_accel",), ("accel_g",))
    rec = SampleRecord("x", 1, 6.0, Label.TD, (1.0,))
    with pytest.raises(ValueError):
        Dataset((rec,), schema, Band.ZERO_TO_SIX)
    assert len(Dataset((rec,), schema, Band.SIX_TO_TWELVE)) == 1


def test_dataset_matrix_is_read_only():
    ds = make_dataset([[1, 2], [3, 4]], [0, 1])
    with pytest.raises(ValueError):
        ds.X[0, 0] = 9
    assert ds.matrix(["x1_accel"]).tolist() == [[2.0], [4.0]]
