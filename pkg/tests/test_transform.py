import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose, assert_array_equal

from tail_angular.simgen import SimMargins
from tail_angular.transform import (
    CdfMargins,
    Dataset,
    UnitParetoMargins,
    fit_ranks,
    read_dataset,
    transform_hat,
    transform_oracle,
    write_dataset,
)


def test_cdf_examples():
    m = fit_ranks(np.array([[5.1], [2.3], [9.9]]))
    assert_allclose(m.cdf([[5.1], [2.2], [10.0]]).ravel(), [2 / 3, 0.0, 1.0])
    assert fit_ranks(np.array([[4.0, 7.0]])).cdf([[4.0, 7.0]]).tolist() == [[1.0, 1.0]]
    assert fit_ranks(np.array([[1.0], [1.0], [2.0]])).cdf([[1.0]])[0, 0] == pytest.approx(2 / 3)


def test_transform_examples():
    m = fit_ranks(np.array([[5.1], [2.3], [9.9]]))
    assert_allclose(transform_hat(m, [[5.1], [2.3], [9.9]]).ravel(), [2.0, 4 / 3, 4.0])
    assert transform_hat(m, [[0.0]])[0, 0] == 1.0
    assert transform_hat(m, [[9.9]])[0, 0] == 4.0


def test_empty_dataset_rejected():
    with pytest.raises(ValueError):
        fit_ranks(np.empty((0, 2)))


def test_training_rows_match_rank_sort(rng):
    X = rng.standard_normal((300, 4))
    n = X.shape[0]
    ranks = np.argsort(np.argsort(X, axis=0), axis=0) + 1
    expect = 1.0 / (1.0 - ranks / (n + 1))
    assert_allclose(fit_ranks(X).transform(X), expect, rtol=1e-13)


def test_ties_share_maximal_rank():
    X = np.array([[1.0], [1.0], [2.0], [3.0]])
    V = fit_ranks(X).transform(X).ravel()
    assert V[0] == V[1] == 5 / 3


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 30), st.integers(2, 4)), elements=st.floats(-1e6, 1e6)),
       arrays(np.float64, st.tuples(st.integers(1, 10), st.just(1)), elements=st.floats(-1e7, 1e7)))
def test_range_and_monotonicity(X, t):
    m = fit_ranks(X)
    probe = np.repeat(np.sort(t, axis=0), X.shape[1], axis=1)
    V = m.transform(probe)
    assert np.all(V >= 1.0) and np.all(V <= m.n + 1)
    assert np.all(np.diff(V, axis=0) >= 0)


@pytest.mark.parametrize("g", [np.exp, lambda x: x**3, lambda x: 2 * x + 1, np.arctan])
def test_monotone_invariance(rng, g):
    X = rng.standard_normal((200, 3))
    a = fit_ranks(X).transform(X)
    b = fit_ranks(g(X)).transform(g(X))
    assert_array_equal(a, b)


def test_oracle_unit_pareto_identity():
    X = np.array([[1.0, 3.0], [2.5, 100.0]])
    assert_array_equal(transform_oracle(X, UnitParetoMargins()), X)


def test_oracle_simgen_margins():
    m = SimMargins(3, [(1.0, 2.0)])
    assert_allclose(transform_oracle([[1.0, 2.0, 4.0]], m), [[3.0, 6.0, 12.0]])
    assert_allclose(transform_oracle([[1.0, 1.0]], SimMargins(2, [(1.0, 5.0)])), [[2.0, 2.0]])


def test_oracle_cdf_one_is_infinite():
    m = CdfMargins([lambda x: np.clip(x, 0.0, 1.0)])
    V = transform_oracle([[0.5], [1.0]], m)
    assert V[0, 0] == 2.0 and np.isinf(V[1, 0])


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.ones((3, 2)), np.array([1, 0, -1]))
    with pytest.raises(ValueError):
        Dataset(np.ones((3, 2)), np.array([1, -1]))


def test_csv_round_trip(tmp_path, rng):
    data = Dataset(rng.pareto(1.0, size=(20, 3)), rng.choice([-1, 1], size=20))
    p = tmp_path / "d.csv"
    write_dataset(data, p)
    back = read_dataset(p, labeled=True)
    assert_array_equal(back.X, data.X)
    assert_array_equal(back.y, data.y)
    assert read_dataset(p).d == 4


def test_csv_bad_label(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1.0,2.0,+1\n")
    with pytest.raises(ValueError):
        read_dataset(p, labeled=True)
