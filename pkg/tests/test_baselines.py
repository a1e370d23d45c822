import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from expframe import (
    TimeSeries,
    build_matrices,
    default_dmd_rank,
    dmd_contribution,
    dmd_decompose,
    ssa_decompose,
    ssa_reconstruct,
)
from expframe.baselines import ssa_components, trajectory_matrix


def _diag_average_bruteforce(mat):
    d, k = mat.shape
    n = d + k - 1
    out = np.zeros(n)
    for s in range(n):
        vals = [mat[i, s - i] for i in range(d) if 0 <= s - i < k]
        out[s] = np.mean(vals)
    return out


def test_trajectory_matrix_enumeration():
    x = trajectory_matrix(np.arange(5.0), 3)
    np.testing.assert_array_equal(x, [[0, 1, 2], [1, 2, 3], [2, 3, 4]])


@settings(max_examples=30, deadline=None)
@given(st.integers(8, 40), st.integers(0, 999), st.data())
def test_ssa_full_reconstruction_and_bruteforce(n, seed, data):
    d = data.draw(st.integers(2, n - 1))
    y = np.random.default_rng(seed).normal(size=n)
    dec = ssa_decompose(TimeSeries(y), d)
    full = ssa_reconstruct(dec, range(1, dec.n_components + 1))
    np.testing.assert_allclose(full.samples, y, atol=1e-10)
    rc = ssa_components(dec, [1]).values[0]
    rank1 = dec.singular_values[0] * np.outer(dec.left_vectors[:, 0], dec.right_vectors[:, 0])
    np.testing.assert_allclose(rc, _diag_average_bruteforce(rank1), atol=1e-12)


def test_ssa_sinusoid_pair():
    n = np.arange(500)
    y = np.sin(2 * np.pi * n / 37)
    dec = ssa_decompose(TimeSeries(y), 100)
    assert dec.singular_values[2] < 1e-10 * dec.singular_values[0]
    np.testing.assert_allclose(ssa_reconstruct(dec, [1, 2]).samples, y, atol=1e-10)


def test_ssa_errors():
    y = TimeSeries(np.arange(10.0))
    with pytest.raises(ValueError):
        ssa_decompose(y, 1)
    with pytest.raises(ValueError):
        ssa_decompose(y, 10)
    dec = ssa_decompose(y, 3)
    with pytest.raises(ValueError):
        ssa_reconstruct(dec, [0])
    with pytest.raises(ValueError):
        ssa_reconstruct(dec, [4])
    assert np.all(ssa_reconstruct(dec, []).samples == 0)


def test_dmd_recovers_damped_sinusoid():
    n = np.arange(400)
    period, tau = 25.0, 200.0
    y = np.exp(-n / tau) * np.cos(2 * np.pi * n / period)
    m = build_matrices(TimeSeries(y, dt=0.5), 10)
    dec = dmd_decompose(m, rank=2)
    np.testing.assert_allclose(np.sort(dec.periods), [period * 0.5] * 2, rtol=1e-8)
    np.testing.assert_allclose(dec.nus.real, -1 / (tau * 0.5), rtol=1e-8)
    assert dec.dominant_period() == pytest.approx(12.5, rel=1e-8)


def test_dmd_contribution_bruteforce():
    rng = np.random.default_rng(0)
    y = np.cumsum(rng.normal(size=200))
    m = build_matrices(TimeSeries(y), 6)
    dec = dmd_decompose(m, rank=4)
    x = m.x_matrix
    ref = []
    for i in range(dec.rank):
        phi = dec.modes[:, i:i + 1]
        p = phi @ phi.conj().T / np.vdot(phi, phi).real
        ref.append(np.linalg.norm(p @ x) ** 2 / np.linalg.norm(x) ** 2)
    np.testing.assert_allclose(dmd_contribution(dec, m), ref, atol=1e-12)
    assert np.all((dec.contributions >= 0) & (dec.contributions <= 1))


def test_dmd_non_oscillatory_modes():
    n = np.arange(100)
    y = 0.9 ** n + 0.5 * 0.7 ** n
    dec = dmd_decompose(build_matrices(TimeSeries(y), 4), rank=2)
    assert not np.any(dec.oscillatory)
    assert np.all(np.isinf(dec.periods))
    assert dec.oscillatory_order() == []
    with pytest.raises(ValueError):
        dec.dominant_period()


def test_dmd_oscillatory_order():
    n = np.arange(600)
    y = np.cos(2 * np.pi * n / 40) + 0.2 * np.cos(2 * np.pi * n / 9)
    dec = dmd_decompose(build_matrices(TimeSeries(y), 30), rank=4)
    order = dec.oscillatory_order()
    assert len(order) == 4
    assert dec.periods[order[0]] == pytest.approx(40, rel=1e-8)
    c = dec.contributions[order]
    assert np.all(np.diff(c) <= 1e-15)


def test_default_rank():
    assert default_dmd_rank([10, 1, 0.01]) == 2
    assert default_dmd_rank([1.0]) == 1
    assert default_dmd_rank(np.ones(500)) == 200


def test_dmd_rank_errors():
    m = build_matrices(TimeSeries(0.9 ** np.arange(30)), 3)
    with pytest.raises(ValueError):
        dmd_decompose(m, rank=4)
    with pytest.raises(ValueError, match="numerically zero"):
        dmd_decompose(m, rank=2)
