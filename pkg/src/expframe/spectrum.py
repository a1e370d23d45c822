"""Exponential mode decomposition of an identified delay operator.

Each eigenvector of the operator is fitted by a discrete exponential
``b * exp(nu * (d-1-k) * dt)``; the reciprocal magnitude of ``Re(nu)`` is the
mode's time constant.  Mode amplitudes at a time index ``n`` project the
delay window ending at ``n`` onto each mode.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from expframe.hankel import delay_vector
from expframe.linear_model import (
    DEFAULT_HORIZON,
    IdentifiedModel,
    OrderSelection,
    identify_series,
    select_order,
)
from expframe.series import InputSeries, TimeSeries, json_real, make_meta

FIT_RESIDUAL_THRESHOLD = 1e-3
DISTINCT_TOL = 1e-12
ESTIMATORS = ("exponential", "eigenvector")


class NonDistinctEigenvaluesWarning(UserWarning):
    pass


class PipelineError(RuntimeError):
    """An analysis stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class ModeSet:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray          # (d, n_modes), column i is mode i
    d: int
    dt: float
    nus: np.ndarray | None = None
    scales: np.ndarray | None = None
    fit_residuals: np.ndarray | None = None
    time_constants: np.ndarray | None = None
    decay_signs: np.ndarray | None = None
    flagged: np.ndarray | None = None
    n_samples: int | None = None

    def __len__(self) -> int:
        return self.eigenvalues.size

    @classmethod
    def empty(cls, d: int, dt: float, n_samples: int | None = None) -> "ModeSet":
        z = np.zeros(0)
        return cls(z.astype(complex), np.zeros((d, 0), complex), d, dt, z.astype(complex),
                   z.astype(complex), z, z, z, z.astype(bool), n_samples)

    def meta(self) -> dict:
        return make_meta(d_star=self.d, dt=self.dt, N=self.n_samples)

    def to_payload(self) -> dict:
        modes = []
        for i in range(len(self)):
            lam, nu = self.eigenvalues[i], self.nus[i]
            modes.append({
                "mode": i,
                "re_lambda": float(lam.real), "im_lambda": float(lam.imag),
                "re_nu": float(nu.real), "im_nu": float(nu.imag),
                "time_constant": json_real(self.time_constants[i]),
                "fit_residual": float(self.fit_residuals[i]),
            })
        return {"d": self.d, "modes": modes}


@dataclass(frozen=True)
class AmplitudeSpectrum:
    """Per-mode amplitudes at one time index, sorted by time constant ascending."""

    time_index: int
    time_constants: np.ndarray
    amplitudes: np.ndarray
    mode_indices: np.ndarray
    d_star: int | None = None
    estimator: str = "exponential"

    def __post_init__(self):
        t = np.asarray(self.time_constants, dtype=float)
        a = np.asarray(self.amplitudes, dtype=complex)
        idx = np.asarray(self.mode_indices, dtype=int)
        order = np.argsort(t, kind="stable")
        object.__setattr__(self, "time_constants", t[order])
        object.__setattr__(self, "amplitudes", a[order])
        object.__setattr__(self, "mode_indices", idx[order])

    def __len__(self) -> int:
        return self.time_constants.size

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.amplitudes)

    def finite(self) -> "AmplitudeSpectrum":
        keep = np.isfinite(self.time_constants)
        return AmplitudeSpectrum(self.time_index, self.time_constants[keep],
                                 self.amplitudes[keep], self.mode_indices[keep],
                                 self.d_star, self.estimator)

    def argmax_time_constant(self) -> float:
        """Finite time constant of the largest-magnitude mode."""
        fin = self.finite()
        if len(fin) == 0:
            raise ValueError("spectrum has no finite time constants")
        return float(fin.time_constants[int(np.argmax(fin.magnitudes))])

    def meta(self) -> dict:
        return make_meta(d_star=self.d_star)

    def to_payload(self) -> dict:
        return {
            "n": int(self.time_index),
            "estimator": self.estimator,
            "entries": [
                {"mode": int(i), "time_constant": json_real(t), "amplitude_abs": float(abs(a)),
                 "amplitude_re": float(a.real), "amplitude_im": float(a.imag)}
                for t, a, i in zip(self.time_constants, self.amplitudes, self.mode_indices)
            ],
        }


# ---------------------------------------------------------------------------
# eigen-structure
# ---------------------------------------------------------------------------

def min_pairwise_distance(eigenvalues) -> float:
    lam = np.asarray(eigenvalues, dtype=complex)
    if lam.size < 2:
        return math.inf
    dist = np.abs(lam[:, None] - lam[None, :])
    np.fill_diagonal(dist, np.inf)
    return float(dist.min())


def _normalize_columns(vecs: np.ndarray) -> np.ndarray:
    vecs = vecs / np.linalg.norm(vecs, axis=0, keepdims=True)
    lead = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(vecs.shape[1])]
    return vecs * (np.abs(lead) / lead)[None, :]


def eigendecompose(model: IdentifiedModel) -> ModeSet:
    """Eigenpairs of the operator with unit-norm, phase-fixed eigenvectors.

    Modes are ordered by modulus descending, then by angle ascending.  The
    largest-magnitude component of each eigenvector is made real-positive.
    """
    a = np.asarray(model.a_tilde)
    if not np.all(np.isfinite(a)):
        raise ValueError("operator contains non-finite entries")
    try:
        lam, vecs = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        cond = np.linalg.cond(a)
        raise np.linalg.LinAlgError(f"eigensolver did not converge (cond ~ {cond:.3g})") from exc
    lam = lam.astype(complex)
    vecs = _normalize_columns(vecs.astype(complex))
    # rounding keeps conjugate pairs adjacent despite last-bit modulus noise
    order = np.lexsort((np.angle(lam), -np.round(np.abs(lam), 12)))
    lam, vecs = lam[order], vecs[:, order]
    if min_pairwise_distance(lam) < DISTINCT_TOL:
        warnings.warn("operator has non-distinct eigenvalues (within 1e-12); the eigenvector "
                      "basis may be defective", NonDistinctEigenvaluesWarning, stacklevel=2)
    return ModeSet(lam, vecs, model.d, model.dt, n_samples=model.n_samples)


# ---------------------------------------------------------------------------
# exponential fit
# ---------------------------------------------------------------------------

def _basis(nu: complex, d: int, dt: float) -> tuple[np.ndarray, float]:
    """``exp(nu (d-1-k) dt)`` scaled by ``exp(-shift)`` to stay in range."""
    z = nu * (d - 1 - np.arange(d)) * dt
    shift = float(np.max(z.real))
    return np.exp(z - shift), shift


def _scale_and_residual(v: np.ndarray, nu: complex, dt: float) -> tuple[complex, float]:
    e, shift = _basis(nu, v.size, dt)
    scaled_b = np.vdot(e, v) / np.vdot(e, e)
    resid = float(np.sum(np.abs(v - scaled_b * e) ** 2) / np.sum(np.abs(v) ** 2))
    with np.errstate(over="ignore", under="ignore"):
        b = complex(scaled_b * np.exp(-shift))
    return b, resid


def _ratio_estimate(v: np.ndarray, dt: float) -> complex:
    """Mean log of consecutive ratios ``v[k] / v[k+1]`` with phase unwrapping."""
    num, den = v[:-1], v[1:]
    ok = (num != 0) & (den != 0)
    if not np.any(ok):
        return 0j
    r = num[ok] / den[ok]
    ok_r = np.isfinite(r) & (r != 0)
    r = r[ok_r]
    if r.size == 0:
        return 0j
    phase = np.angle(r)
    ref = np.angle(np.sum(r / np.abs(r)))
    # each increment takes the 2*pi branch nearest the mean direction
    phase = ref + np.mod(phase - ref + np.pi, 2 * np.pi) - np.pi
    return complex(np.mean(np.log(np.abs(r))), np.mean(phase)) / dt


def _refine(v: np.ndarray, nu0: complex, dt: float) -> complex:
    def resid(p):
        e, _ = _basis(complex(p[0], p[1]), v.size, dt)
        b = np.vdot(e, v) / np.vdot(e, e)
        r = v - b * e
        return np.concatenate([r.real, r.imag])

    sol = least_squares(resid, [nu0.real, nu0.imag], method="lm", xtol=1e-15, ftol=1e-15)
    return complex(sol.x[0], sol.x[1])


def fit_exponential(eigenvector, dt: float = 1.0) -> tuple[complex, complex, float]:
    """Fit ``V[k] ~ b * exp(nu * (d-1-k) * dt)``.

    Returns ``(nu, b, residual)`` where ``residual`` is the squared fit error
    normalized by ``||V||^2``.  The consecutive-ratio estimate is used
    directly unless the vector has zero entries or its residual exceeds
    ``1e-3``, in which case a nonlinear least-squares refinement runs from it.
    """
    v = np.asarray(eigenvector, dtype=complex).ravel()
    if v.size < 2:
        raise ValueError("need at least two components to fit an exponential")
    if not np.any(v != 0):
        raise ValueError("cannot fit an exponential to an all-zero vector")
    nu = _ratio_estimate(v, dt)
    b, resid = _scale_and_residual(v, nu, dt)
    if np.all(v != 0) and resid <= FIT_RESIDUAL_THRESHOLD:
        return nu, b, resid
    nu_ref = _refine(v, nu, dt)
    b_ref, resid_ref = _scale_and_residual(v, nu_ref, dt)
    if resid_ref < resid:
        return nu_ref, b_ref, resid_ref
    return nu, b, resid


def decay_floor(n_samples: int, dt: float) -> float:
    """Decay rates below ``1 / (100 N dt)`` are treated as non-decaying."""
    return 1.0 / (100.0 * n_samples * dt)


def time_constants_from(nus, n_samples: int, dt: float) -> np.ndarray:
    rate = np.abs(np.real(nus))
    with np.errstate(divide="ignore"):
        t = 1.0 / rate
    t[rate < decay_floor(n_samples, dt)] = np.inf
    return t


def build_mode_set(model: IdentifiedModel, residual_threshold: float = FIT_RESIDUAL_THRESHOLD,
                   n_samples: int | None = None) -> ModeSet:
    """Eigendecompose ``model`` and fit an exponential to every eigenvector."""
    base = eigendecompose(model)
    n_samples = n_samples or model.n_samples or model.d
    fits = [fit_exponential(base.eigenvectors[:, i], model.dt) for i in range(len(base))]
    nus = np.array([f[0] for f in fits], dtype=complex)
    scales = np.array([f[1] for f in fits], dtype=complex)
    resid = np.array([f[2] for f in fits], dtype=float)
    return ModeSet(
        base.eigenvalues, base.eigenvectors, model.d, model.dt,
        nus=nus, scales=scales, fit_residuals=resid,
        time_constants=time_constants_from(nus, n_samples, model.dt),
        decay_signs=np.sign(nus.real),
        flagged=resid > residual_threshold,
        n_samples=n_samples,
    )


# ---------------------------------------------------------------------------
# amplitudes
# ---------------------------------------------------------------------------

def _window_matrix(y: np.ndarray, d: int, indices) -> np.ndarray:
    indices = np.asarray(indices, dtype=int)
    if indices.size and (indices.min() < d - 1 or indices.max() >= y.size):
        raise ValueError(f"time index out of range: need {d - 1} <= n < {y.size}")
    return y[indices[None, :] - np.arange(d)[:, None]]      # (d, n_queries)


def amplitude_matrix(series: TimeSeries, modes: ModeSet, indices,
                     estimator: str = "exponential") -> np.ndarray:
    """Amplitudes for several indices at once, shape ``(n_modes, n_queries)``.

    ``exponential``: ``sum_k y[n-k] exp(nu k dt)``.
    ``eigenvector``: ``x_d[n]^T V_i``.
    """
    if estimator not in ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator!r}; choose from {ESTIMATORS}")
    windows = _window_matrix(series.samples, modes.d, indices)
    if len(modes) == 0:
        return np.zeros((0, windows.shape[1]), complex)
    if estimator == "eigenvector":
        return modes.eigenvectors.T @ windows
    lags = np.arange(modes.d) * modes.dt
    with np.errstate(over="ignore"):
        weights = np.exp(np.outer(modes.nus, lags))
    return weights @ windows


def _spectrum(modes: ModeSet, n: int, amps, estimator: str) -> AmplitudeSpectrum:
    return AmplitudeSpectrum(n, modes.time_constants, amps, np.arange(len(modes)), modes.d,
                             estimator)


def amplitude_at(series: TimeSeries, modes: ModeSet, n: int,
                 estimator: str = "exponential") -> AmplitudeSpectrum:
    amps = amplitude_matrix(series, modes, [n], estimator)[:, 0]
    return _spectrum(modes, n, amps, estimator)


def amplitude_forced(series: TimeSeries, inputs: InputSeries, forced_model, modes: ModeSet,
                     n: int) -> AmplitudeSpectrum:
    """Eigenvector projection of ``x_d[n+1] - B u_d[n]``."""
    d = forced_model.d
    if inputs.n != series.n:
        raise ValueError(f"input length {inputs.n} does not match series length {series.n}")
    if n < d - 1 or n + 1 >= series.n:
        raise ValueError(f"time index n={n} out of range: need {d - 1} <= n < {series.n - 1}")
    u_lags = inputs.channels[:, n - np.arange(d)].T.reshape(-1)    # lag-major blocks
    target = delay_vector(series, n + 1, d) - forced_model.b_tilde @ u_lags
    return _spectrum(modes, n, modes.eigenvectors.T @ target, "eigenvector")


# ---------------------------------------------------------------------------
# end-to-end
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DefResult:
    selection: OrderSelection | None
    model: IdentifiedModel
    modes: ModeSet
    spectra: dict = field(default_factory=dict)
    degenerate: bool = False

    @property
    def d_star(self) -> int:
        return self.model.d

    def meta(self) -> dict:
        sel = self.selection
        return make_meta(d_star=self.d_star, L=sel.l_horizon if sel else None,
                         sigma2=sel.sigma2 if sel else None, dt=self.model.dt,
                         N=self.model.n_samples)

    def to_payload(self) -> dict:
        return {
            "degenerate": self.degenerate,
            "selection": self.selection.to_payload() if self.selection else None,
            "modes": self.modes.to_payload()["modes"],
            "spectra": [self.spectra[n].to_payload() for n in sorted(self.spectra)],
        }


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ValueError, np.linalg.LinAlgError, FloatingPointError) as exc:
        raise PipelineError(name, exc) from exc


def analyze(series: TimeSeries, omega=None, l_horizon: int = DEFAULT_HORIZON,
            sigma2: float = 0.0, query_indices=(), d: int | None = None,
            estimator: str = "exponential") -> DefResult:
    """Order selection, identification, mode fitting, and amplitudes in one pass.

    Pass ``d`` to skip order selection.  A rank-deficient identification is
    reported with a warning and yields an empty mode set, since its
    eigenstructure is not determined by the data.
    """
    if (omega is None) == (d is None):
        raise ValueError("give exactly one of omega (candidate orders) or d")
    selection = None
    if d is None:
        selection = _stage("select_order", select_order, series, omega, l_horizon, sigma2)
        d = selection.d_star
    model = _stage("identify", identify_series, series, d)
    degenerate = model.rank_deficient
    if degenerate:
        warnings.warn(f"degenerate input: rank {model.rank} < d={d}; mode spectrum left empty",
                      stacklevel=2)
        modes = ModeSet.empty(d, series.dt, series.n)
    else:
        modes = _stage("modes", build_mode_set, model, n_samples=series.n)
    indices = sorted(set(int(n) for n in query_indices))
    amps = _stage("amplitudes", amplitude_matrix, series, modes, indices, estimator)
    spectra = {n: _spectrum(modes, n, amps[:, j], estimator) for j, n in enumerate(indices)}
    return DefResult(selection, model, modes, spectra, degenerate)
