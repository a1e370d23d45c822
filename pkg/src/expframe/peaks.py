"""Dominant-peak extraction on a (time constant, amplitude) spectrum.

Each mode is scored by its prominence over a running-median baseline in
log-time-constant, multiplied by its isolation relative to the RMS amplitude
of a surrounding annulus.  Local score maxima are the candidates; the top-K
candidates are reported.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from expframe.series import json_real, make_meta
from expframe.spectrum import AmplitudeSpectrum

DEFAULT_WIDTH = 0.25
DEFAULT_K = 6
REL_EPS = 1e-12
TIE_RTOL = 1e-9


@dataclass(frozen=True)
class PeakParams:
    """Extraction settings.

    ``w`` is the log-period window width (natural log).  ``eps=None`` resolves
    to ``1e-12 * max amplitude`` at extraction time.  With
    ``theta_filters_reported`` the threshold also applies before the top-K cut.
    """

    w: float = DEFAULT_WIDTH
    eps: float | None = None
    theta: float = 0.0
    k_top: int = DEFAULT_K
    theta_filters_reported: bool = False

    def __post_init__(self):
        if not self.w > 0:
            raise ValueError(f"window width w must be > 0, got {self.w}")
        if self.eps is not None and self.eps < 0:
            raise ValueError(f"eps must be >= 0, got {self.eps}")
        if self.theta < 0:
            raise ValueError(f"theta must be >= 0, got {self.theta}")
        if self.k_top < 1:
            raise ValueError(f"k_top must be >= 1, got {self.k_top}")


@dataclass(frozen=True)
class Peak:
    mode: int
    time_constant: float
    amplitude: float
    score: float

    def to_dict(self) -> dict:
        return {"mode": self.mode, "time_constant": json_real(self.time_constant),
                "amplitude": json_real(self.amplitude), "score": json_real(self.score)}


@dataclass(frozen=True)
class PeakReport:
    n: int
    params: PeakParams
    eps: float
    candidates: list
    all_peaks: list
    reported: list
    modes: np.ndarray
    time_constants: np.ndarray
    log_t: np.ndarray
    amplitude: np.ndarray
    baseline: np.ndarray
    prominence: np.ndarray
    background: np.ndarray
    isolation: np.ndarray
    score: np.ndarray
    d_star: int | None = None

    def meta(self) -> dict:
        return make_meta(d_star=self.d_star)

    def to_payload(self) -> dict:
        params = asdict(self.params)
        params["eps"] = self.eps
        return {
            "n": int(self.n),
            "params": params,
            "candidates": [p.to_dict() for p in self.candidates],
            "all_peaks": [p.to_dict() for p in self.all_peaks],
            "reported": [p.to_dict() for p in self.reported],
        }


def _lower_median(vals: np.ndarray) -> float:
    k = (vals.size - 1) // 2
    return float(np.partition(vals, k)[k])


def running_median(values, keys, window: float) -> np.ndarray:
    """Lower median of ``values`` whose key lies within ``window/2`` of each key."""
    values = np.asarray(values, dtype=float)
    keys = np.asarray(keys, dtype=float)
    if values.shape != keys.shape:
        raise ValueError(f"length mismatch: {values.size} values vs {keys.size} keys")
    if np.any(np.diff(keys) < 0):
        raise ValueError("keys must be sorted ascending")
    dist = np.abs(keys[:, None] - keys[None, :])
    inside = dist <= window / 2
    return np.array([_lower_median(values[row]) for row in inside])


def _merge_ties(t: np.ndarray, a: np.ndarray, modes: np.ndarray):
    """Collapse runs of equal time constants, keeping the largest magnitude."""
    keep = []
    i = 0
    while i < t.size:
        j = i + 1
        while j < t.size and math.isclose(t[j], t[i], rel_tol=TIE_RTOL):
            j += 1
        run = np.arange(i, j)
        keep.append(run[int(np.argmax(a[run]))])
        i = j
    keep = np.array(keep, dtype=int)
    return t[keep], a[keep], modes[keep]


def extract_peaks(spectrum: AmplitudeSpectrum, params: PeakParams | None = None) -> PeakReport:
    params = params or PeakParams()
    fin = spectrum.finite()
    if len(fin) == 0:
        raise ValueError("spectrum has no finite time constants")
    if np.any(fin.time_constants <= 0):
        raise ValueError("time constants must be positive")
    order = np.argsort(fin.time_constants, kind="stable")
    t, a, modes = _merge_ties(fin.time_constants[order], fin.magnitudes[order],
                              fin.mode_indices[order])
    x = np.log(t)
    w = params.w
    eps = REL_EPS * float(a.max()) if params.eps is None else float(params.eps)

    dist = np.abs(x[:, None] - x[None, :])
    baseline = np.array([_lower_median(a[row]) for row in dist <= w / 2])
    prominence = np.maximum(0.0, a - baseline)

    annulus = (dist >= w / 2) & (dist <= w)
    np.fill_diagonal(annulus, False)
    counts = annulus.sum(axis=1)
    sq = (annulus * (a * a)[None, :]).sum(axis=1)
    background = np.sqrt(np.divide(sq, counts, out=np.zeros_like(sq), where=counts > 0))

    denom = eps + background
    with np.errstate(divide="ignore", invalid="ignore"):
        isolation = np.where(prominence > 0, prominence / denom, 0.0)
    score = prominence * isolation

    local_max = np.array([score[i] >= score[row].max() for i, row in enumerate(dist <= w)])
    cand_idx = np.flatnonzero(local_max & (score > 0))
    # descending score; equal scores keep ascending log-T order
    cand_idx = cand_idx[np.argsort(-score[cand_idx], kind="stable")]

    def peak(i):
        return Peak(int(modes[i]), float(t[i]), float(a[i]), float(score[i]))

    candidates = [peak(i) for i in cand_idx]
    all_peaks = [p for p in candidates if p.score >= params.theta]
    pool = all_peaks if params.theta_filters_reported else candidates
    return PeakReport(
        n=spectrum.time_index, params=params, eps=eps, candidates=candidates,
        all_peaks=all_peaks, reported=pool[:params.k_top], modes=modes, time_constants=t,
        log_t=x, amplitude=a, baseline=baseline, prominence=prominence, background=background,
        isolation=isolation, score=score, d_star=spectrum.d_star,
    )
