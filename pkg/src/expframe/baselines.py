"""Hankel-structured comparison methods: SSA and delay-embedded DMD."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from expframe.hankel import DelayMatrices
from expframe.series import TimeSeries, json_real, make_meta

DMD_ENERGY = 0.999
DMD_MAX_RANK = 200
OMEGA_ZERO = 1e-10          # |omega| * dt below this counts as non-oscillatory


@dataclass(frozen=True)
class SsaDecomposition:
    window: int
    singular_values: np.ndarray
    left_vectors: np.ndarray      # (d, r)
    right_vectors: np.ndarray     # (K, r)
    n_samples: int
    dt: float = 1.0

    @property
    def k_columns(self) -> int:
        return self.n_samples - self.window + 1

    @property
    def n_components(self) -> int:
        return self.singular_values.size


@dataclass(frozen=True)
class SsaReconstruction:
    """Individual reconstructed components, 1-based ``components`` labels."""

    components: tuple
    values: tuple
    dt: float = 1.0

    def meta(self) -> dict:
        n = len(self.values[0]) if self.values else None
        return make_meta(dt=self.dt, N=n)

    def to_payload(self) -> dict:
        return {"components": {str(c): [float(v) for v in vals]
                               for c, vals in zip(self.components, self.values)}}


def trajectory_matrix(y: np.ndarray, window: int) -> np.ndarray:
    """Hankel matrix with ``X[i, j] = y[i + j]``, shape ``(window, N - window + 1)``."""
    k = y.size - window + 1
    return y[np.arange(window)[:, None] + np.arange(k)[None, :]]


def ssa_decompose(series: TimeSeries, window: int) -> SsaDecomposition:
    n = series.n
    if not 2 <= window <= n - 1:
        raise ValueError(f"SSA window must satisfy 2 <= d <= N-1, got d={window}, N={n}")
    u, s, vt = np.linalg.svd(trajectory_matrix(series.samples, window), full_matrices=False)
    return SsaDecomposition(window, s, u, vt.T, n, series.dt)


def _diagonal_average_rank1(u: np.ndarray, v: np.ndarray, counts: np.ndarray) -> np.ndarray:
    # anti-diagonal sums of u v^T are the full convolution of u and v
    return np.convolve(u, v) / counts


def _anti_diagonal_counts(d: int, k: int) -> np.ndarray:
    return np.convolve(np.ones(d), np.ones(k))


def _check_components(decomp: SsaDecomposition, indices) -> list[int]:
    idx = sorted(set(int(i) for i in indices))
    bad = [i for i in idx if not 1 <= i <= decomp.n_components]
    if bad:
        raise ValueError(f"component indices {bad} out of range 1..{decomp.n_components}")
    return idx


def ssa_components(decomp: SsaDecomposition, indices) -> SsaReconstruction:
    """Each selected ``RC_i`` separately (indices are 1-based, ``RC_1`` leading)."""
    idx = _check_components(decomp, indices)
    counts = _anti_diagonal_counts(decomp.window, decomp.k_columns)
    values = tuple(
        decomp.singular_values[i - 1] * _diagonal_average_rank1(
            decomp.left_vectors[:, i - 1], decomp.right_vectors[:, i - 1], counts)
        for i in idx
    )
    return SsaReconstruction(tuple(idx), values, decomp.dt)


def ssa_reconstruct(decomp: SsaDecomposition, component_indices) -> TimeSeries:
    """Diagonal average of the summed rank-1 terms for the 1-based ``component_indices``."""
    idx = _check_components(decomp, component_indices)
    total = np.zeros(decomp.n_samples)
    if idx:
        sel = np.array(idx) - 1
        counts = _anti_diagonal_counts(decomp.window, decomp.k_columns)
        for i in sel:
            total += decomp.singular_values[i] * _diagonal_average_rank1(
                decomp.left_vectors[:, i], decomp.right_vectors[:, i], counts)
    return TimeSeries(total, dt=decomp.dt, name="rc")


@dataclass(frozen=True)
class DmdDecomposition:
    rank: int
    eigenvalues: np.ndarray
    modes: np.ndarray             # (d, r), column i is phi_i
    nus: np.ndarray
    periods: np.ndarray           # inf for non-oscillatory modes
    oscillatory: np.ndarray
    contributions: np.ndarray
    dt: float = 1.0
    d: int | None = None

    def oscillatory_order(self) -> list[int]:
        """Oscillatory modes by contribution descending, then period ascending."""
        idx = np.flatnonzero(self.oscillatory)
        order = np.lexsort((self.periods[idx], -self.contributions[idx]))
        return [int(i) for i in idx[order]]

    def dominant_period(self) -> float:
        order = self.oscillatory_order()
        if not order:
            raise ValueError("no oscillatory DMD modes")
        return float(self.periods[order[0]])

    def meta(self) -> dict:
        return make_meta(d_star=self.d, dt=self.dt)

    def to_payload(self) -> dict:
        return {
            "rank": self.rank,
            "modes": [
                {"re_lambda": float(l.real), "im_lambda": float(l.imag),
                 "alpha": float(nu.real), "omega": float(nu.imag),
                 "period": json_real(p), "contribution": float(c), "oscillatory": bool(o)}
                for l, nu, p, c, o in zip(self.eigenvalues, self.nus, self.periods,
                                          self.contributions, self.oscillatory)
            ],
        }


def default_dmd_rank(singular_values, energy: float = DMD_ENERGY,
                     cap: int = DMD_MAX_RANK) -> int:
    """Smallest rank whose squared singular values hold ``energy`` of the total, capped."""
    s2 = np.asarray(singular_values, dtype=float) ** 2
    frac = np.cumsum(s2) / s2.sum()
    r = int(np.searchsorted(frac, energy) + 1)
    return max(1, min(r, cap, s2.size))


def dmd_contribution(decomp: DmdDecomposition, matrices: DelayMatrices) -> np.ndarray:
    """``||P_i X||_F^2 / ||X||_F^2`` with ``P_i`` the orthogonal projector onto ``phi_i``."""
    x = matrices.x_matrix
    return _contributions(decomp.modes, x)


def _contributions(phi: np.ndarray, x: np.ndarray) -> np.ndarray:
    norms = np.sum(np.abs(phi) ** 2, axis=0)
    if np.any(norms == 0):
        raise ValueError("zero-norm DMD mode")
    total = float(np.sum(x * x))
    if total == 0:
        return np.zeros(phi.shape[1])
    proj = np.sum(np.abs(phi.conj().T @ x) ** 2, axis=1)
    return np.clip(proj / (norms * total), 0.0, 1.0)


def dmd_decompose(matrices: DelayMatrices, rank: int | None = None) -> DmdDecomposition:
    """Projected DMD of the snapshot pair with a rank-``r`` truncated SVD of ``X``.

    ``rank=None`` picks the smallest rank holding 99.9% of the squared
    singular-value energy, capped at 200.
    """
    x, y = matrices.x_matrix, matrices.y_matrix
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    max_rank = min(x.shape)
    if rank is None:
        rank = default_dmd_rank(s)
    if not 1 <= rank <= max_rank:
        raise ValueError(f"rank must satisfy 1 <= r <= {max_rank}, got {rank}")
    tol = max(x.shape) * np.finfo(float).eps * s[0]
    if s[rank - 1] <= tol:
        raise ValueError(f"singular value {rank} is numerically zero ({s[rank - 1]:.3g})")
    ur, sr, vr = u[:, :rank], s[:rank], vt[:rank].T
    yv = y @ vr / sr[None, :]
    a_red = ur.T @ yv
    lam, w = np.linalg.eig(a_red)
    lam = lam.astype(complex)
    order = np.lexsort((np.angle(lam), -np.round(np.abs(lam), 12)))
    lam, w = lam[order], w[:, order]
    phi = yv @ w
    dt = matrices.dt
    nus = np.log(lam) / dt
    oscillatory = np.abs(nus.imag) * dt >= OMEGA_ZERO
    with np.errstate(divide="ignore"):
        periods = np.where(oscillatory, 2 * np.pi / np.abs(nus.imag), np.inf)
    return DmdDecomposition(rank, lam, phi, nus, periods, oscillatory,
                            _contributions(phi, x), dt, matrices.d)
