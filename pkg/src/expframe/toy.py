"""Switched-mass oscillator driven by a five-level piecewise-constant force.

The force steps ``0 -> kA/2 -> kA -> kA/2 -> 0`` so that the position rises
along a half sine to ``A`` (mass ``m0``), holds a plateau, and returns along
a half sine to zero (mass ``m1``).  Each constant segment is integrated in
closed form.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from expframe.series import TimeSeries, add_gaussian_noise


@dataclass(frozen=True)
class ToyConfig:
    k: float = 1.0
    m0: float = (1000.0 / math.pi) ** 2
    m1: float = (100.0 / math.pi) ** 2
    amplitude_A: float = 1.0
    t0: float = 5000.0
    t1: float = 10000.0
    n_samples: int = 15000
    dt: float = 1.0
    noise_variance: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.k <= 0 or self.m0 <= 0 or self.m1 <= 0:
            raise ValueError("k, m0 and m1 must be positive")
        if self.dt <= 0 or self.n_samples < 2:
            raise ValueError("need dt > 0 and n_samples >= 2")
        if self.noise_variance < 0:
            raise ValueError("noise_variance must be >= 0")
        if self.t0 < 0 or self.t0 + self.tau0 > self.t1:
            raise ValueError(f"need 0 <= T0 and T0 + tau0 <= T1 (tau0={self.tau0:.6g})")
        if self.t1 + self.tau1 > self.n_samples * self.dt:
            raise ValueError(f"need T1 + tau1 <= N dt (tau1={self.tau1:.6g})")

    @property
    def tau0(self) -> float:
        """Rise half-period ``pi sqrt(m0/k)``."""
        return math.pi * math.sqrt(self.m0 / self.k)

    @property
    def tau1(self) -> float:
        """Fall half-period ``pi sqrt(m1/k)``."""
        return math.pi * math.sqrt(self.m1 / self.k)

    @classmethod
    def from_half_periods(cls, tau0: float, tau1: float, k: float = 1.0, **kwargs) -> "ToyConfig":
        return cls(k=k, m0=k * (tau0 / math.pi) ** 2, m1=k * (tau1 / math.pi) ** 2, **kwargs)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["tau0"] = self.tau0
        out["tau1"] = self.tau1
        return out


PRESETS = {
    "toy-sec3": dict(tau0=1000.0, tau1=100.0, k=1.0, amplitude_A=1.0, t0=5000.0, t1=10000.0,
                     n_samples=15000, dt=1.0, noise_variance=1e-6, seed=0),
}


def preset(name: str, **overrides) -> ToyConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    params = {**PRESETS[name], **overrides}
    return ToyConfig.from_half_periods(params.pop("tau0"), params.pop("tau1"), **params)


def segments(cfg: ToyConfig) -> list[tuple[float, float, float, float]]:
    """``(start, end, force, mass)`` for each constant piece; the mass switches at ``T1``."""
    ka = cfg.k * cfg.amplitude_A
    rise_end = cfg.t0 + cfg.tau0
    fall_end = cfg.t1 + cfg.tau1
    return [
        (0.0, cfg.t0, 0.0, cfg.m0),
        (cfg.t0, rise_end, ka / 2, cfg.m0),
        (rise_end, cfg.t1, ka, cfg.m0),
        (cfg.t1, fall_end, ka / 2, cfg.m1),
        (fall_end, math.inf, 0.0, cfg.m1),
    ]


def designed_input(cfg: ToyConfig, t: float) -> float:
    if t < 0:
        raise ValueError("t must be >= 0")
    for start, end, force, _ in segments(cfg):
        if start <= t < end:
            return force
    return 0.0


def mass_at(cfg: ToyConfig, t: float) -> float:
    return cfg.m0 if t < cfg.t1 else cfg.m1


def _propagate(x0, v0, force, mass, k, tau):
    """State after ``tau`` on a segment with constant force and mass (vectorized in ``tau``)."""
    w = math.sqrt(k / mass)
    xe = force / k
    c, s = np.cos(w * tau), np.sin(w * tau)
    return xe + (x0 - xe) * c + v0 / w * s, -(x0 - xe) * w * s + v0 * c


def simulate_clean(cfg: ToyConfig) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free position and velocity at ``t = n dt`` from rest."""
    t = np.arange(cfg.n_samples) * cfg.dt
    x = np.zeros_like(t)
    v = np.zeros_like(t)
    x0 = v0 = 0.0
    for start, end, force, mass in segments(cfg):
        sel = (t >= start) & (t < end)
        if np.any(sel):
            x[sel], v[sel] = _propagate(x0, v0, force, mass, cfg.k, t[sel] - start)
        if math.isfinite(end):
            x0, v0 = _propagate(x0, v0, force, mass, cfg.k, end - start)
    return x, v


def simulate(cfg: ToyConfig) -> tuple[TimeSeries, TimeSeries]:
    """Position (with observation noise) and velocity series."""
    x, v = simulate_clean(cfg)
    position = add_gaussian_noise(TimeSeries(x, cfg.dt, "x_osc"), cfg.noise_variance, cfg.seed)
    return position, TimeSeries(v, cfg.dt, "v_osc")


def input_series(cfg: ToyConfig) -> TimeSeries:
    t = np.arange(cfg.n_samples) * cfg.dt
    return TimeSeries(np.array([designed_input(cfg, ti) for ti in t]), cfg.dt, "u")
