"""Delay-coordinate vectors and paired snapshot matrices.

Index convention: ``x_d[n] = [y[n], y[n-1], ..., y[n-d+1]]`` and, for a range
``(m1, m2)``, the snapshot matrix ``X`` holds columns ``x_d[m1-1] .. x_d[m2-2]``
while ``Y`` holds the one-step-advanced columns ``x_d[m1] .. x_d[m2-1]``.
The default identification range is ``(d, N)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from expframe.series import InputSeries, TimeSeries


@dataclass(frozen=True)
class DelayMatrices:
    x_matrix: np.ndarray
    y_matrix: np.ndarray
    d: int
    m1: int
    m2: int
    dt: float

    @property
    def n_columns(self) -> int:
        return self.m2 - self.m1


@dataclass(frozen=True)
class InputDelayMatrices:
    u_matrix: np.ndarray
    d: int
    m: int
    m1: int
    m2: int


def _samples(series) -> np.ndarray:
    return series.samples if isinstance(series, TimeSeries) else np.asarray(series, dtype=float)


def _check_range(n_total: int, d: int, m1: int, m2: int) -> None:
    if d < 1:
        raise ValueError(f"delay order must be >= 1, got d={d}")
    if not (d <= m1 < m2 <= n_total):
        raise ValueError(
            f"invalid range: need d <= m1 < m2 <= N, got d={d}, m1={m1}, m2={m2}, N={n_total}"
        )


def delay_index(d: int, first: int, count: int) -> np.ndarray:
    """Index array whose column ``j`` is ``[first+j, first+j-1, ..., first+j-d+1]``."""
    return first + np.arange(count)[None, :] - np.arange(d)[:, None]


def delay_vector(series: TimeSeries, n: int, d: int) -> np.ndarray:
    y = _samples(series)
    if d < 1:
        raise ValueError(f"delay order must be >= 1, got d={d}")
    if n < d - 1 or n >= y.size:
        raise ValueError(f"index n={n} out of range for d={d} and N={y.size} (need d-1 <= n < N)")
    return y[n - np.arange(d)].copy()


def build_matrices(series: TimeSeries, d: int, m1: int | None = None,
                   m2: int | None = None) -> DelayMatrices:
    """Dense ``X``/``Y`` snapshot pair of delay order ``d`` over ``(m1, m2)``.

    ``m1`` defaults to ``d`` and ``m2`` to ``N``.
    """
    y = _samples(series)
    m1 = d if m1 is None else m1
    m2 = y.size if m2 is None else m2
    _check_range(y.size, d, m1, m2)
    idx = delay_index(d, m1 - 1, m2 - m1)
    x_mat = y[idx]
    y_mat = y[idx + 1]
    dt = series.dt if isinstance(series, TimeSeries) else 1.0
    return DelayMatrices(x_mat, y_mat, d, m1, m2, dt)


def build_input_matrices(inputs: InputSeries, d: int, m1: int | None = None,
                         m2: int | None = None) -> InputDelayMatrices:
    """Input-lag matrix ``U`` with ``d*m`` rows; block ``r`` holds the lag-``r`` channels."""
    u = inputs.channels
    m, n_total = u.shape
    m1 = d if m1 is None else m1
    m2 = n_total if m2 is None else m2
    _check_range(n_total, d, m1, m2)
    idx = delay_index(d, m1 - 1, m2 - m1)          # (d, cols)
    # (m, d, cols) -> (d, m, cols): lag-major so rows r*m .. r*m+m-1 are lag r
    blocks = u[:, idx].transpose(1, 0, 2)
    return InputDelayMatrices(blocks.reshape(d * m, m2 - m1), d, m, m1, m2)
