import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expframe import InputSeries, TimeSeries, build_input_matrices, build_matrices, delay_vector


def test_delay_vector_enumeration():
    y = TimeSeries([1.0, 2.0, 3.0, 4.0])
    np.testing.assert_array_equal(delay_vector(y, 3, 2), [4.0, 3.0])


def test_delay_vector_order_one():
    y = TimeSeries([5.0, -1.0, 2.0])
    for n in range(3):
        np.testing.assert_array_equal(delay_vector(y, n, 1), [y.samples[n]])


def test_delay_vector_bounds():
    y = TimeSeries([1.0, 2.0, 3.0, 4.0])
    with pytest.raises(ValueError):
        delay_vector(y, 1, 3)
    with pytest.raises(ValueError):
        delay_vector(y, 4, 1)


def test_build_matrices_enumeration():
    m = build_matrices(TimeSeries([1.0, 2, 3, 4, 5]), 2, 2, 5)
    np.testing.assert_array_equal(m.x_matrix.T, [[2, 1], [3, 2], [4, 3]])
    np.testing.assert_array_equal(m.y_matrix.T, [[3, 2], [4, 3], [5, 4]])


def test_build_matrices_single_column():
    m = build_matrices(TimeSeries(np.arange(10.0)), 3, 4, 5)
    assert m.x_matrix.shape == (3, 1)
    np.testing.assert_array_equal(m.x_matrix[:, 0], [3, 2, 1])


def test_build_matrices_default_range_and_errors():
    y = TimeSeries(np.arange(6.0))
    m = build_matrices(y, 2)
    assert (m.m1, m.m2) == (2, 6)
    with pytest.raises(ValueError):
        build_matrices(y, 6)
    with pytest.raises(ValueError):
        build_matrices(y, 3, 2, 5)


def _brute_x(y, d, m1, m2):
    cols = []
    for n in range(m1 - 1, m2 - 1):
        cols.append([y[n - r] for r in range(d)])
    return np.array(cols).T


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_hankel_structure_properties(data):
    n_total = data.draw(st.integers(4, 40))
    y = np.array(data.draw(st.lists(st.floats(-10, 10), min_size=n_total, max_size=n_total)))
    d = data.draw(st.integers(1, n_total - 1))
    m1 = data.draw(st.integers(d, n_total - 1))
    m2 = data.draw(st.integers(m1 + 1, n_total))
    m = build_matrices(TimeSeries(y), d, m1, m2)
    x, yy = m.x_matrix, m.y_matrix
    assert x.shape == (d, m2 - m1)
    np.testing.assert_array_equal(x, _brute_x(y, d, m1, m2))
    # shift consistency
    np.testing.assert_array_equal(yy[:, :-1], x[:, 1:])
    # anti-diagonal constancy: entry depends only on m1-1+j-r
    r, j = np.indices(x.shape)
    np.testing.assert_array_equal(x, y[m1 - 1 + j - r])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(10, 30))
def test_y_matrix_equals_advanced_x_matrix(d, n_total):
    y = TimeSeries(np.random.default_rng(n_total).normal(size=n_total))
    a = build_matrices(y, d, d, n_total)
    b = build_matrices(y, d, d + 1, n_total)
    np.testing.assert_array_equal(a.y_matrix[:, :-1], b.x_matrix)


def test_input_matrices_constant():
    u = InputSeries(np.full(8, 2.5))
    um = build_input_matrices(u, 3, 3, 8)
    assert np.all(um.u_matrix == 2.5)


def test_input_matrices_enumeration():
    u = InputSeries([0.0, 1, 2, 3, 4])
    um = build_input_matrices(u, 2, 2, 4)
    np.testing.assert_array_equal(um.u_matrix.T, [[1, 0], [2, 1]])


def test_input_matrices_two_channels():
    u = InputSeries(np.vstack([np.arange(6.0), 10 + np.arange(6.0)]))
    um = build_input_matrices(u, 3, 3, 6)
    assert um.u_matrix.shape == (6, 3)
    # lag-major blocks: rows (lag0 ch0, lag0 ch1, lag1 ch0, ...)
    np.testing.assert_array_equal(um.u_matrix[:, 0], [2, 12, 1, 11, 0, 10])


def test_input_channels_length_mismatch():
    with pytest.raises(ValueError):
        InputSeries([[1.0, 2.0, 3.0], [1.0, 2.0]])
