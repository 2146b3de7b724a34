import numpy as np
import pytest

from nnsurv.data import Dataset


def make_dataset(times, events, X=None):
    times = np.asarray(times, dtype=float)
    if X is None:
        X = np.zeros((len(times), 1))
    return Dataset(X, times, events)


@pytest.fixture
def small_data():
    # three subjects from the worked KM example
    return make_dataset([1.0, 2.0, 3.0], [1, 0, 1], X=[[0.0], [1.0], [2.0]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# (criterion, passed, detail) lines filled in by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
