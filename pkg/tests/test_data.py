import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nnsurv.data import L1, L2, Dataset, Metric, distance, fit_standardizer, load_csv, write_csv
from nnsurv.errors import (DimensionMismatch, EmptyDataset, EventNotBinary, MissingColumn,
                           NegativeTime, NonNumericValue)


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_load_three_rows(tmp_path):
    p = _write(tmp_path, "age,time,event\n50,1.5,1\n61,2.0,0\n45,0.5,1\n")
    d = load_csv(p)
    assert len(d) == 3 and d.dim == 1
    assert d.feature_names == ("age",)
    np.testing.assert_array_equal(d.times, [1.5, 2.0, 0.5])
    np.testing.assert_array_equal(d.events, [1, 0, 1])
    assert d.n_dropped == 0


def test_missing_feature_row_dropped(tmp_path):
    p = _write(tmp_path, "a,b,time,event\n1,2,1.0,1\n3,,2.0,0\n5,6,3.0,1\n")
    d = load_csv(p)
    assert len(d) == 2 and d.n_dropped == 1


def test_event_two_rejected(tmp_path):
    p = _write(tmp_path, "a,time,event\n1,1.0,2\n")
    with pytest.raises(EventNotBinary):
        load_csv(p)


def test_missing_column(tmp_path):
    p = _write(tmp_path, "a,t,event\n1,1.0,1\n")
    with pytest.raises(MissingColumn):
        load_csv(p)


def test_negative_time(tmp_path):
    with pytest.raises(NegativeTime):
        load_csv(_write(tmp_path, "a,time,event\n1,-1.0,1\n"))


def test_non_numeric_time(tmp_path):
    with pytest.raises(NonNumericValue):
        load_csv(_write(tmp_path, "a,time,event\n1,soon,1\n"))


def test_text_feature_column_skipped(tmp_path):
    d = load_csv(_write(tmp_path, "sex,age,time,event\nm,1,1.0,1\nf,2,2.0,0\n"))
    assert d.feature_names == ("age",)


def test_custom_column_names(tmp_path):
    d = load_csv(_write(tmp_path, "x,futime,status\n1,3.0,1\n"), "futime", "status")
    assert d.times[0] == 3.0 and d.events[0] == 1


def test_empty_file(tmp_path):
    with pytest.raises(EmptyDataset):
        load_csv(_write(tmp_path, ""))


def test_round_trip(tmp_path, rng):
    X = rng.normal(size=(20, 3))
    d = Dataset(X, rng.exponential(size=20), rng.integers(0, 2, 20))
    p = tmp_path / "rt.csv"
    write_csv(d, p)
    back = load_csv(p)
    np.testing.assert_array_equal(back.times, d.times)
    np.testing.assert_array_equal(back.events, d.events)
    np.testing.assert_allclose(back.features, d.features, atol=1e-12)


def test_dataset_immutable(small_data):
    with pytest.raises(ValueError):
        small_data.times[0] = 5.0


def test_flipped(small_data):
    np.testing.assert_array_equal(small_data.flipped().events, [0, 1, 0])


def test_standardizer_examples():
    s = fit_standardizer(Dataset([[0.0], [2.0]], [1, 2], [1, 1]))
    assert s.mean[0] == 1.0 and s.scale[0] == 1.0
    s = fit_standardizer(Dataset([[5.0], [5.0]], [1, 2], [1, 1]))
    assert s.mean[0] == 5.0 and s.scale[0] == 1.0


def test_standardizer_idempotent(rng):
    d = Dataset(rng.normal(3, 7, size=(50, 2)), rng.exponential(size=50), np.ones(50))
    z = fit_standardizer(d).apply(d)
    s2 = fit_standardizer(z)
    np.testing.assert_allclose(s2.mean, 0.0, atol=1e-12)
    np.testing.assert_allclose(s2.scale, 1.0, atol=1e-12)


def test_standardizer_empty():
    with pytest.raises(EmptyDataset):
        fit_standardizer(Dataset(np.zeros((0, 1)), [], []))


def test_standardizer_dimension():
    s = fit_standardizer(Dataset([[0.0], [2.0]], [1, 2], [1, 1]))
    with pytest.raises(DimensionMismatch):
        s.transform(np.zeros((1, 2)))


def test_distance_examples():
    assert distance(L2, [0, 0], [3, 4]) == 5.0
    assert distance(L1, [0, 0], [3, 4]) == 7.0
    with pytest.raises(DimensionMismatch):
        distance(L2, [0, 0], [1, 2, 3])


vec = st.lists(st.floats(-100, 100), min_size=3, max_size=3)


@settings(max_examples=200, deadline=None)
@given(vec, vec, vec, st.sampled_from(["l1", "l2"]))
def test_metric_axioms(a, b, c, kind):
    m = Metric(kind)
    assert m(a, a) == 0
    assert m(a, b) == m(b, a)
    assert m(a, c) <= m(a, b) + m(b, c) + 1e-9


def test_pairwise_matches_scalar(rng):
    A, B = rng.normal(size=(4, 3)), rng.normal(size=(5, 3))
    for m in (L1, L2):
        D = m.pairwise(A, B)
        for i in range(4):
            for j in range(5):
                assert D[i, j] == pytest.approx(m(A[i], B[j]), abs=1e-12)
