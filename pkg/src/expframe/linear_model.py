"""Least-squares identification of the delay operator and AIC order selection."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from expframe.hankel import (
    DelayMatrices,
    InputDelayMatrices,
    build_input_matrices,
    build_matrices,
    delay_index,
)
from expframe.series import InputSeries, TimeSeries, json_real, make_meta

DEFAULT_HORIZON = 5


class RankDeficiencyWarning(UserWarning):
    """The regressor was numerically rank deficient; a minimum-norm fit was used."""


@dataclass(frozen=True)
class IdentifiedModel:
    a_tilde: np.ndarray
    d: int
    dt: float
    fit_error: float
    rank: int
    n_samples: int | None = None

    @property
    def rank_deficient(self) -> bool:
        return self.rank < self.d


@dataclass(frozen=True)
class ForcedModel:
    a_tilde: np.ndarray
    b_tilde: np.ndarray
    d: int
    m: int
    dt: float
    fit_error: float
    rank: int
    n_samples: int | None = None


@dataclass(frozen=True)
class OrderSelection:
    candidates: np.ndarray
    aic_values: np.ndarray
    d_star: int
    l_horizon: int
    sigma2: float
    dt: float = 1.0
    n_samples: int | None = None
    excluded: tuple = field(default_factory=tuple)

    def meta(self) -> dict:
        return make_meta(d_star=int(self.d_star), L=self.l_horizon, sigma2=self.sigma2,
                         dt=self.dt, N=self.n_samples)

    def to_payload(self) -> dict:
        return {
            "candidates": [int(d) for d in self.candidates],
            "aic": [json_real(a) for a in self.aic_values],
            "excluded": [int(d) for d in self.excluded],
        }


def _lstsq(regressor: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, int]:
    """Solve ``W @ regressor ~= target`` through the transposed system.

    Uses an SVD-based solve; singular values below ``max_dim * eps * s_max``
    count as zero and yield the minimum-norm solution.
    """
    sol, _, rank, _ = np.linalg.lstsq(regressor.T, target.T, rcond=None)
    rank = int(rank)
    if rank < regressor.shape[0]:
        warnings.warn(
            f"regressor has rank {rank} < {regressor.shape[0]}; using the minimum-norm "
            "solution (add data or reduce d)",
            RankDeficiencyWarning,
            stacklevel=3,
        )
    return sol.T, rank


def identify(matrices: DelayMatrices, n_samples: int | None = None) -> IdentifiedModel:
    """Fit the one-step operator minimizing ``||Y - A X||_F^2``."""
    a, rank = _lstsq(matrices.x_matrix, matrices.y_matrix)
    resid = matrices.y_matrix - a @ matrices.x_matrix
    return IdentifiedModel(a, matrices.d, matrices.dt, float(np.sum(resid * resid)), rank,
                           n_samples)


def identify_series(series: TimeSeries, d: int) -> IdentifiedModel:
    """:func:`identify` over the default range ``(d, N)``."""
    return identify(build_matrices(series, d), n_samples=series.n)


def identify_forced(matrices: DelayMatrices, inputs: InputDelayMatrices,
                    n_samples: int | None = None) -> ForcedModel:
    """Jointly fit ``(A, B)`` minimizing ``||Y - A X - B U||_F^2``."""
    if inputs.u_matrix.shape[1] != matrices.x_matrix.shape[1] or inputs.d != matrices.d \
            or (inputs.m1, inputs.m2) != (matrices.m1, matrices.m2):
        raise ValueError("input-lag matrix does not match the snapshot matrices "
                         f"(d={inputs.d} vs {matrices.d}, range {(inputs.m1, inputs.m2)} "
                         f"vs {(matrices.m1, matrices.m2)})")
    d = matrices.d
    z = np.vstack([matrices.x_matrix, inputs.u_matrix])
    ab, rank = _lstsq(z, matrices.y_matrix)
    resid = matrices.y_matrix - ab @ z
    return ForcedModel(ab[:, :d], ab[:, d:], d, inputs.m, matrices.dt,
                       float(np.sum(resid * resid)), rank, n_samples)


def identify_forced_series(series: TimeSeries, inputs: InputSeries, d: int) -> ForcedModel:
    if inputs.n != series.n:
        raise ValueError(f"input length {inputs.n} does not match series length {series.n}")
    return identify_forced(build_matrices(series, d), build_input_matrices(inputs, d),
                           n_samples=series.n)


def predict(model: IdentifiedModel, x0, steps: int) -> np.ndarray:
    """``A^steps @ x0`` by repeated application."""
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")
    x = np.asarray(x0, dtype=float)
    if x.shape != (model.d,):
        raise ValueError(f"x0 must have shape ({model.d},), got {x.shape}")
    for _ in range(steps):
        x = model.a_tilde @ x
    return x


def predict_forced(model: ForcedModel, x0, input_cols, steps: int) -> np.ndarray:
    """``A^L x0 + sum_i A^(L-i) B u_(i-1)`` for ``L = steps``."""
    if len(input_cols) != steps:
        raise ValueError(f"need {steps} input-lag vectors, got {len(input_cols)}")
    x = np.asarray(x0, dtype=float)
    if x.shape != (model.d,):
        raise ValueError(f"x0 must have shape ({model.d},), got {x.shape}")
    for u in input_cols:
        u = np.asarray(u, dtype=float)
        if u.shape != (model.d * model.m,):
            raise ValueError(f"input-lag vector must have length {model.d * model.m}")
        x = model.a_tilde @ x + model.b_tilde @ u
    return x


def output_powers(a_tilde: np.ndarray, steps: int) -> list[np.ndarray]:
    """Rows ``C A^j`` for ``j = 0..steps`` with ``C = [1, 0, ..., 0]``."""
    c = np.zeros(a_tilde.shape[0])
    c[0] = 1.0
    rows = [c]
    for _ in range(steps):
        c = c @ a_tilde
        rows.append(c)
    return rows


def _check_aic_args(n_total: int, d: int, l_horizon: int, sigma2: float) -> int:
    if l_horizon < 1:
        raise ValueError(f"horizon L must be >= 1, got {l_horizon}")
    if sigma2 < 0:
        raise ValueError(f"sigma2 must be >= 0, got {sigma2}")
    dof = n_total - d - l_horizon
    if dof <= 0:
        raise ValueError(f"insufficient samples: N - d - L = {dof} <= 0 (N={n_total}, d={d}, "
                         f"L={l_horizon})")
    return dof


def aic_residual(y: np.ndarray, a_tilde: np.ndarray, l_horizon: int) -> float:
    """Squared L-ahead output error ``||C Y^(d+L-1,N) - C A^L X^(d,N-L+1)||^2``."""
    d = a_tilde.shape[0]
    n_total = y.size
    cols = n_total - l_horizon - d + 1
    x = y[delay_index(d, d - 1, cols)]
    pred = output_powers(a_tilde, l_horizon)[-1] @ x
    resid = y[d + l_horizon - 1:n_total] - pred
    return float(resid @ resid)


def aic_from_model(series: TimeSeries, model: IdentifiedModel, l_horizon: int,
                   sigma2: float) -> float:
    dof = _check_aic_args(series.n, model.d, l_horizon, sigma2)
    return aic_residual(series.samples, model.a_tilde, l_horizon) / dof + 2 * model.d * sigma2 / dof


def aic(series: TimeSeries, d: int, l_horizon: int = DEFAULT_HORIZON, sigma2: float = 0.0) -> float:
    """L-ahead information criterion of the order-``d`` delay model.

    The operator is identified on ``(d, N)``; the error term compares the
    newest-sample row of the ``L``-step prediction with the observed output,
    normalized by ``N - d - L``, and ``2 d sigma2 / (N - d - L)`` is added.
    """
    _check_aic_args(series.n, d, l_horizon, sigma2)
    return aic_from_model(series, identify_series(series, d), l_horizon, sigma2)


def aic_forced(series: TimeSeries, inputs: InputSeries, d: int,
               l_horizon: int = DEFAULT_HORIZON, sigma2: float = 0.0) -> float:
    dof = _check_aic_args(series.n, d, l_horizon, sigma2)
    model = identify_forced_series(series, inputs, d)
    y = series.samples
    n_total = series.n
    cols = n_total - l_horizon - d + 1
    rows = output_powers(model.a_tilde, l_horizon)
    pred = rows[l_horizon] @ y[delay_index(d, d - 1, cols)]
    for i in range(1, l_horizon + 1):
        u = build_input_matrices(inputs, d, d + i - 1, n_total - l_horizon + i).u_matrix
        pred = pred + (rows[l_horizon - i] @ model.b_tilde) @ u
    resid = y[d + l_horizon - 1:n_total] - pred
    return float(resid @ resid) / dof + 2 * d * sigma2 / dof


def _feasible(candidates, n_total: int, l_horizon: int) -> tuple[list[int], list[int]]:
    ok, bad = [], []
    for d in candidates:
        d = int(d)
        (ok if d >= 1 and n_total - d - l_horizon > 0 else bad).append(d)
    for d in bad:
        warnings.warn(f"candidate d={d} infeasible (N - d - L <= 0); excluded", stacklevel=3)
    return ok, bad


def _argmin_smallest(values) -> int:
    values = np.asarray(values)
    # first occurrence of the minimum; candidates are kept in ascending order
    return int(np.flatnonzero(values == values.min())[0])


def select_order(series: TimeSeries, candidates, l_horizon: int = DEFAULT_HORIZON,
                 sigma2: float = 0.0, progress=None) -> OrderSelection:
    """Evaluate the criterion on every candidate order and return the minimizer.

    Ties go to the smallest ``d``.  Infeasible candidates are dropped with a
    warning.  ``progress`` is called as ``progress(d, value)`` after each one.
    """
    candidates = sorted(set(int(d) for d in candidates))
    if not candidates:
        raise ValueError("candidate set is empty")
    ok, bad = _feasible(candidates, series.n, l_horizon)
    if not ok:
        raise ValueError("no feasible candidate order")
    values = []
    for d in ok:
        values.append(aic(series, d, l_horizon, sigma2))
        if progress is not None:
            progress(d, values[-1])
    k = _argmin_smallest(values)
    return OrderSelection(np.array(ok), np.array(values), ok[k], l_horizon, float(sigma2),
                          series.dt, series.n, tuple(bad))


def relative_aic_curves(series: TimeSeries, d_grid, l_list, sigma2: float = 0.0,
                        progress=None) -> dict[int, list[tuple[int, float]]]:
    """Criterion curves shifted so each horizon's minimum is zero.

    The operator for each ``d`` is identified once and reused for every horizon.
    """
    d_grid = sorted(set(int(d) for d in d_grid))
    l_list = sorted(set(int(L) for L in l_list))
    if not d_grid or not l_list:
        raise ValueError("d_grid and l_list must be non-empty")
    for L in l_list:
        for d in d_grid:
            _check_aic_args(series.n, d, L, sigma2)
    raw = {L: [] for L in l_list}
    for d in d_grid:
        model = identify_series(series, d)
        for L in l_list:
            raw[L].append(aic_from_model(series, model, L, sigma2))
        if progress is not None:
            progress(d, None)
    curves = {}
    for L, vals in raw.items():
        vals = np.array(vals)
        rel = vals - vals.min()
        curves[L] = [(d, float(r)) for d, r in zip(d_grid, rel)]
    return curves
