"""Scalar time series containers, CSV loading, noise injection, and result I/O.

File formats
------------
Series CSV
    Optional single header line, then one sample per line.  Multi-column
    files are accepted when a column selector is given.
Spectrum CSV
    ``time_constant,amplitude_abs,amplitude_re,amplitude_im``, one mode per
    row, sorted by time constant ascending.
AIC-curve CSV
    ``d,aic``.
JSON results
    ``{"meta": {"d_star", "L", "sigma2", "dt", "N"}, "payload": {...}}``.

Reals are written with ``repr`` so every value round-trips exactly.
Infinite time constants are written as ``inf`` in CSV and ``null`` in JSON.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

NOISE_BIT_GENERATOR = "PCG64"

SPECTRUM_HEADER = ["time_constant", "amplitude_abs", "amplitude_re", "amplitude_im"]
AIC_HEADER = ["d", "aic"]
META_KEYS = ("d_star", "L", "sigma2", "dt", "N")


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Uniformly sampled scalar series ``y[0..N-1]`` with sampling period ``dt``."""

    samples: np.ndarray
    dt: float = 1.0
    name: str = "y"

    def __post_init__(self):
        arr = _frozen_array(self.samples)
        if arr.ndim != 1:
            raise ValueError(f"samples must be one-dimensional, got shape {arr.shape}")
        if arr.size < 2:
            raise ValueError(f"N < 2: a series needs at least two samples, got {arr.size}")
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise ValueError(f"non-finite sample at index {bad}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        object.__setattr__(self, "samples", arr)
        object.__setattr__(self, "dt", float(self.dt))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def n(self) -> int:
        return self.samples.size


@dataclass(frozen=True)
class InputSeries:
    """Exogenous input with ``m`` channels, each of length ``N``."""

    channels: np.ndarray
    dt: float = 1.0

    def __post_init__(self):
        arr = np.array(self.channels, dtype=float)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ValueError(f"channels must be (m, N) with m >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("input channels contain non-finite values")
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        arr.setflags(write=False)
        object.__setattr__(self, "channels", arr)
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def m(self) -> int:
        return self.channels.shape[0]

    @property
    def n(self) -> int:
        return self.channels.shape[1]


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def load_series(path, column: str | int | None = None, dt: float | None = None,
                name: str | None = None) -> TimeSeries:
    """Read a series from a CSV file.

    Parameters
    ----------
    path : path-like
        CSV with an optional single header line.
    column : str or int, optional
        Header name or zero-based column index.  Defaults to the first column.
    dt : float, optional
        Sampling period.  When omitted, a leading comment line such as
        ``# dt=0.5`` supplies it; otherwise ``1.0``.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"series file not found: {path}")
    with path.open(newline="") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]

    header_dt = None
    while rows and rows[0][0].lstrip().startswith("#"):
        comment = ",".join(rows.pop(0)).lstrip("# ")
        for item in comment.replace(",", " ").split():
            key, _, value = item.partition("=")
            if key.strip() == "dt" and value:
                header_dt = float(value)

    header = None
    if rows and not all(_is_number(c.strip()) for c in rows[0]):
        header = [c.strip() for c in rows.pop(0)]

    if column is None:
        col = 0
    elif isinstance(column, int) or (isinstance(column, str) and column.isdigit()
                                     and (header is None or column not in header)):
        col = int(column)
    else:
        if header is None or column not in header:
            raise ValueError(f"column {column!r} not found in header {header}")
        col = header.index(column)

    values = []
    # reported row indices are zero-based data rows, header excluded
    for i, row in enumerate(rows):
        if col >= len(row):
            raise ValueError(f"row {i}: missing column {col}")
        cell = row[col].strip()
        try:
            v = float(cell)
        except ValueError:
            raise ValueError(f"row {i}: non-numeric cell {cell!r}") from None
        if not math.isfinite(v):
            raise ValueError(f"row {i}: non-finite value {cell!r}")
        values.append(v)
    if len(values) < 2:
        raise ValueError(f"N < 2: {path} holds {len(values)} sample(s)")

    if dt is None:
        dt = header_dt if header_dt is not None else 1.0
    label = name or (header[col] if header else path.stem)
    return TimeSeries(np.array(values), dt=dt, name=label)


def add_gaussian_noise(series: TimeSeries, variance: float, seed: int) -> TimeSeries:
    """Return ``series`` plus i.i.d. zero-mean Gaussian noise.

    Draws come from numpy's ``Generator(PCG64(seed)).standard_normal`` so the
    same (series, variance, seed) reproduces bitwise across platforms.
    """
    if variance < 0:
        raise ValueError(f"noise variance must be >= 0, got {variance}")
    if variance == 0:
        return series
    rng = np.random.Generator(np.random.PCG64(seed))
    noise = rng.standard_normal(series.n) * math.sqrt(variance)
    return TimeSeries(series.samples + noise, dt=series.dt, name=series.name)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def fmt_real(x) -> str:
    """Shortest exact decimal rendering of a real (``inf``/``nan`` spelled out)."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return repr(x)


def json_real(x):
    x = float(x)
    return x if math.isfinite(x) else None


def make_meta(d_star=None, L=None, sigma2=None, dt=None, N=None) -> dict:
    return {"d_star": d_star, "L": L, "sigma2": sigma2, "dt": dt, "N": N}


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with path.open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(c if isinstance(c, str) else fmt_real(c) if isinstance(c, float)
                              else str(c) for c in row) + "\n")


def _csv_table(result) -> tuple[list[str], list[list]]:
    from expframe.baselines import DmdDecomposition, SsaReconstruction
    from expframe.linear_model import OrderSelection
    from expframe.spectrum import AmplitudeSpectrum, ModeSet

    if isinstance(result, TimeSeries):
        return [result.name or "y"], [[float(v)] for v in result.samples]
    if isinstance(result, AmplitudeSpectrum):
        rows = [[float(t), float(abs(a)), float(a.real), float(a.imag)]
                for t, a in zip(result.time_constants, result.amplitudes)]
        return SPECTRUM_HEADER, rows
    if isinstance(result, OrderSelection):
        return AIC_HEADER, [[int(d), float(a)] for d, a in zip(result.candidates, result.aic_values)]
    if isinstance(result, ModeSet):
        return (["mode", "re_lambda", "im_lambda", "re_nu", "im_nu", "time_constant", "fit_residual"],
                [[i, float(l.real), float(l.imag), float(v.real), float(v.imag), float(t), float(r)]
                 for i, (l, v, t, r) in enumerate(zip(result.eigenvalues, result.nus,
                                                       result.time_constants, result.fit_residuals))])
    if isinstance(result, SsaReconstruction):
        rows = [[int(c), float(v)] for c, comp in zip(result.components, result.values) for v in comp]
        return ["component", "value"], rows
    if isinstance(result, DmdDecomposition):
        return (["period", "contribution", "re_lambda", "im_lambda", "alpha", "omega"],
                [[float(result.periods[i]), float(result.contributions[i]),
                  float(result.eigenvalues[i].real), float(result.eigenvalues[i].imag),
                  float(result.nus[i].real), float(result.nus[i].imag)]
                 for i in result.oscillatory_order()])
    if isinstance(result, dict) and all(isinstance(k, (int, np.integer)) for k in result):
        # relative AIC curves keyed by horizon
        return ["L", "d", "aic_rel"], [[int(L), int(d), float(a)]
                                       for L in sorted(result) for d, a in result[L]]
    raise TypeError(f"no CSV schema for {type(result).__name__}")


def _json_payload(result) -> Any:
    if hasattr(result, "to_payload"):
        return result.to_payload()
    if isinstance(result, TimeSeries):
        return {"name": result.name, "samples": [float(v) for v in result.samples]}
    if isinstance(result, dict):
        return {str(k): [[int(d), json_real(a)] for d, a in v] for k, v in sorted(result.items())}
    raise TypeError(f"no JSON schema for {type(result).__name__}")


def _default_meta(result) -> dict:
    meta = getattr(result, "meta", None)
    if callable(meta):
        return meta()
    if isinstance(result, TimeSeries):
        return make_meta(dt=result.dt, N=result.n)
    return make_meta()


def write_result(result, path, format: str = "csv", meta: dict | None = None) -> None:
    """Persist an analysis product as CSV or JSON.

    ``meta`` entries override the result's own metadata in the JSON ``meta``
    block; they are ignored for CSV.
    """
    if format not in ("csv", "json"):
        raise ValueError(f"unsupported format {format!r}; expected 'csv' or 'json'")
    path = Path(path)
    if not path.parent.is_dir():
        raise FileNotFoundError(f"output directory does not exist: {path.parent}")
    if format == "csv":
        header, rows = _csv_table(result)
        _write_csv(path, header, rows)
        return
    full_meta = _default_meta(result)
    if meta:
        full_meta.update({k: v for k, v in meta.items() if k in META_KEYS})
    doc = {"meta": {k: full_meta.get(k) for k in META_KEYS}, "payload": _json_payload(result)}
    write_json(doc, path)


def write_json(doc, path) -> None:
    with Path(path).open("w") as fh:
        json.dump(doc, fh, indent=2, allow_nan=False)
        fh.write("\n")


def read_json(path) -> dict:
    with Path(path).open() as fh:
        return json.load(fh)


def _read_table(path, header: Sequence[str]) -> list[list[float]]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        got = next(reader, None)
        if got != list(header):
            raise ValueError(f"{path}: expected header {','.join(header)}, got {got}")
        return [[float(c) for c in row] for row in reader if row]


def read_spectrum(path, time_index: int = -1, d_star: int | None = None):
    """Load a spectrum CSV written by :func:`write_result`."""
    from expframe.spectrum import AmplitudeSpectrum

    rows = _read_table(path, SPECTRUM_HEADER)
    if not rows:
        raise ValueError(f"{path}: empty spectrum")
    arr = np.array(rows)
    return AmplitudeSpectrum(
        time_index=time_index,
        time_constants=arr[:, 0],
        amplitudes=arr[:, 2] + 1j * arr[:, 3],
        mode_indices=np.arange(len(arr)),
        d_star=d_star,
    )


def read_aic_curve(path) -> tuple[np.ndarray, np.ndarray]:
    """Load a ``d,aic`` CSV as ``(d_values, aic_values)``."""
    rows = _read_table(path, AIC_HEADER)
    arr = np.array(rows).reshape(-1, 2)
    return arr[:, 0].astype(int), arr[:, 1]
