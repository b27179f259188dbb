import numpy as np
import pytest

from infantmotor.core import Dataset, FeatureSchema, Label, SampleRecord

ACCEPTANCE_LINES: list[str] = []


def make_dataset(X, y, names=None, ids=None):
    """Dataset over generic accel-kind columns; values are not range-checked here."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    names = names or [f"x{j}_accel" for j in range(X.shape[1])]
    schema = FeatureSchema(tuple(names), ("accel_g",) * len(names))
    ids = ids or [f"r{i:03d}" for i in range(len(X))]
    records = tuple(
        SampleRecord(ids[i], 1, 3.0, Label(int(y[i])), tuple(X[i])) for i in range(len(X))
    )
    return Dataset(records, schema)


def blobs(n_td, n_ar, d=2, gap=4.0, sd=1.0, seed=0):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(0.0, sd, (n_td, d)), rng.normal(gap, sd, (n_ar, d))])
    y = np.array([0] * n_td + [1] * n_ar)
    return X, y


@pytest.fixture
def make():
    return make_dataset


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
