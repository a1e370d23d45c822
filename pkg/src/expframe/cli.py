"""Command-line front end.

Every subcommand writes plot-ready CSV/JSON files into ``--out`` (default:
``$EXPFRAME_OUT`` or the current directory) together with ``run_config.json``
holding the resolved flags.  Exit codes: 0 success, 1 usage error, 2 numeric
failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from expframe.baselines import dmd_decompose, ssa_components, ssa_decompose, ssa_reconstruct
from expframe.hankel import build_matrices
from expframe.linear_model import DEFAULT_HORIZON, relative_aic_curves, select_order
from expframe.peaks import DEFAULT_K, DEFAULT_WIDTH, PeakParams, extract_peaks
from expframe.series import (
    TimeSeries,
    json_real,
    load_series,
    make_meta,
    read_spectrum,
    write_json,
    write_result,
)
from expframe.spectrum import ESTIMATORS, PipelineError, analyze
from expframe.toy import PRESETS, input_series, preset, simulate

OUT_ENV = "EXPFRAME_OUT"
DEFAULT_OMEGA = "100:2000:100"
DEFAULT_SIGMA2 = 5e-6


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def parse_omega(text: str) -> list[int]:
    """``start:stop:step`` (stop included when on the grid) or a comma list."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"bad range {text!r}; expected start:stop:step")
        start, stop, step = (int(p) for p in parts)
        if step <= 0 or start > stop:
            raise UsageError(f"bad range {text!r}")
        return list(range(start, stop + 1, step))
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"bad candidate list {text!r}") from None


def parse_int_list(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"bad integer list {text!r}") from None


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_dict(args) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    cfg["out"] = str(cfg["out"])
    return cfg


def _load(args) -> TimeSeries:
    try:
        return load_series(args.input, column=args.column, dt=args.dt)
    except (FileNotFoundError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _peak_params(args) -> PeakParams:
    try:
        return PeakParams(w=args.w, eps=args.eps, theta=args.theta, k_top=args.K,
                          theta_filters_reported=args.theta_filters_reported)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _write_selection(sel, out: Path) -> None:
    write_result(sel, out / "aic.csv", "csv")
    write_result(sel, out / "selection.json", "json")


def _order(args, series: TimeSeries, out: Path):
    """``--d`` if given, else the criterion minimizer over ``--omega``."""
    if args.d is not None:
        return args.d, None
    sel = select_order(series, parse_omega(args.omega), args.L, args.sigma2)
    _write_selection(sel, out)
    return sel.d_star, sel


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_generate(args) -> dict:
    out = _out_dir(args)
    overrides = {k: v for k, v in dict(
        tau0=args.tau0, tau1=args.tau1, k=args.k, amplitude_A=args.A, t0=args.t0, t1=args.t1,
        n_samples=args.n, dt=args.dt, noise_variance=args.noise_variance, seed=args.seed,
    ).items() if v is not None}
    cfg = preset(args.preset, **overrides)
    position, velocity = simulate(cfg)
    write_result(position, out / "position.csv", "csv")
    if args.with_velocity:
        write_result(velocity, out / "velocity.csv", "csv")
    if args.with_input:
        write_result(input_series(cfg), out / "input.csv", "csv")
    write_json({"meta": make_meta(dt=cfg.dt, N=cfg.n_samples),
                "payload": {"preset": args.preset, "config": cfg.to_dict()}},
               out / "config.json")
    return {"N": cfg.n_samples}


def cmd_select_order(args) -> dict:
    out = _out_dir(args)
    series = _load(args)
    sel = select_order(series, parse_omega(args.omega), args.L, args.sigma2)
    _write_selection(sel, out)
    return {"d_star": sel.d_star}


def _run_analyze(args, series: TimeSeries, out: Path):
    if not args.at:
        raise UsageError("analyze needs at least one --at index")
    params = _peak_params(args)
    if args.d is not None:
        result = analyze(series, d=args.d, query_indices=args.at, estimator=args.estimator)
    else:
        result = analyze(series, omega=parse_omega(args.omega), l_horizon=args.L,
                         sigma2=args.sigma2, query_indices=args.at, estimator=args.estimator)
        _write_selection(result.selection, out)
    write_result(result.modes, out / "modes.json", "json")
    peaks = {}
    for n, spec in sorted(result.spectra.items()):
        write_result(spec, out / f"spectrum_n{n}.csv", "csv")
        if len(spec.finite()):
            report = extract_peaks(spec, params)
            peaks[n] = report
            write_result(report, out / f"peaks_n{n}.json", "json",
                         meta={"L": args.L, "sigma2": args.sigma2, "dt": series.dt,
                               "N": series.n})
    return result, peaks


def cmd_analyze(args) -> dict:
    out = _out_dir(args)
    series = _load(args)
    result, _ = _run_analyze(args, series, out)
    return {"d_star": result.d_star}


def cmd_peaks(args) -> dict:
    out = _out_dir(args)
    try:
        spec = read_spectrum(args.spectrum, time_index=args.n)
    except (FileNotFoundError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    report = extract_peaks(spec, _peak_params(args))
    name = f"peaks_n{args.n}.json" if args.n >= 0 else "peaks.json"
    write_result(report, out / name, "json")
    return {"reported": len(report.reported)}


def _run_ssa(args, series: TimeSeries, d: int, out: Path):
    decomp = ssa_decompose(series, d)
    comps = [c for c in parse_int_list(args.components) if c <= decomp.n_components]
    rcs = ssa_components(decomp, comps)
    write_result(rcs, out / "ssa_rc.csv", "csv")
    with (out / "ssa_singular_values.csv").open("w") as fh:
        fh.write("component,singular_value\n")
        for i, s in enumerate(decomp.singular_values, start=1):
            fh.write(f"{i},{float(s)!r}\n")
    rc1 = ssa_reconstruct(decomp, [1]).samples
    rel = float(np.linalg.norm(rc1 - series.samples) / np.linalg.norm(series.samples))
    return decomp, rel


def cmd_ssa(args) -> dict:
    out = _out_dir(args)
    series = _load(args)
    d, _ = _order(args, series, out)
    _, rel = _run_ssa(args, series, d, out)
    return {"window": d, "rc1_relative_error": rel}


def _run_dmd(args, series: TimeSeries, d: int, out: Path):
    dmd = dmd_decompose(build_matrices(series, d), args.rank)
    write_result(dmd, out / "dmd.csv", "csv")
    write_result(dmd, out / "dmd.json", "json", meta={"dt": series.dt, "N": series.n})
    return dmd


def cmd_dmd(args) -> dict:
    out = _out_dir(args)
    series = _load(args)
    d, _ = _order(args, series, out)
    dmd = _run_dmd(args, series, d, out)
    return {"rank": dmd.rank}


def cmd_aic_curves(args) -> dict:
    out = _out_dir(args)
    series = _load(args)
    curves = relative_aic_curves(series, parse_omega(args.omega), parse_int_list(args.L_list),
                                 args.sigma2)
    write_result(curves, out / "aic_rel.csv", "csv")
    return {"curves": len(curves)}


def cmd_compare(args) -> dict:
    out = _out_dir(args)
    series = _load(args)
    result, peaks = _run_analyze(args, series, out)
    d = result.d_star
    ssa_dir = out / "ssa"
    ssa_dir.mkdir(exist_ok=True)
    decomp, rel = _run_ssa(args, series, d, ssa_dir)
    dmd_dir = out / "dmd"
    dmd_dir.mkdir(exist_ok=True)
    dmd = _run_dmd(args, series, d, dmd_dir)
    osc = dmd.oscillatory_order()
    report = {
        "meta": make_meta(d_star=d, L=args.L, sigma2=args.sigma2, dt=series.dt, N=series.n),
        "payload": {
            "def": {
                str(n): {"argmax_time_constant": json_real(spec.argmax_time_constant())
                         if len(spec.finite()) else None,
                         "reported": [p.to_dict() for p in peaks[n].reported] if n in peaks else []}
                for n, spec in sorted(result.spectra.items())
            },
            "ssa": {"window": d, "leading_singular_values":
                    [float(s) for s in decomp.singular_values[:10]],
                    "rc1_relative_error": rel},
            "dmd": {"rank": dmd.rank,
                    "oscillatory": [{"period": float(dmd.periods[i]),
                                     "contribution": float(dmd.contributions[i])} for i in osc]},
        },
    }
    write_json(report, out / "compare.json")
    return {"d_star": d}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--out", default=os.environ.get(OUT_ENV, "."),
                   help=f"output directory (env {OUT_ENV})")


def _add_input(p):
    p.add_argument("--in", dest="input", required=True, help="series CSV")
    p.add_argument("--column", default=None, help="column name or index (default: first)")
    p.add_argument("--dt", type=float, default=None,
                   help="sampling period (default: '# dt=' header comment, else 1.0)")


def _add_order(p, with_d=True):
    if with_d:
        p.add_argument("--d", type=int, default=None,
                       help="fixed delay order; skips order selection")
    p.add_argument("--omega", default=DEFAULT_OMEGA,
                   help="candidate orders, start:stop:step (inclusive) or comma list")
    p.add_argument("--L", type=int, default=DEFAULT_HORIZON, help="prediction horizon")
    p.add_argument("--sigma2", type=float, default=DEFAULT_SIGMA2,
                   help="noise-variance estimate in the criterion penalty")


def _add_peaks(p):
    p.add_argument("--w", type=float, default=DEFAULT_WIDTH, help="log-period window width")
    p.add_argument("--eps", type=float, default=None,
                   help="isolation stabilizer (default: 1e-12 * max amplitude)")
    p.add_argument("--theta", type=float, default=0.0, help="dominance threshold")
    p.add_argument("--K", type=int, default=DEFAULT_K, help="number of peaks to report")
    p.add_argument("--theta-filters-reported", action="store_true",
                   help="apply theta before the top-K cut")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="expframe", description=__doc__.split("\n")[0], formatter_class=fmt)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="simulate the oscillator benchmark", formatter_class=fmt)
    _add_common(p)
    p.add_argument("--preset", default="toy-sec3", choices=sorted(PRESETS))
    p.add_argument("--seed", type=int, default=None, help="noise seed (preset: 0)")
    p.add_argument("--noise-variance", type=float, default=None, help="preset: 1e-6")
    p.add_argument("--tau0", type=float, default=None, help="rise half-period (preset: 1000)")
    p.add_argument("--tau1", type=float, default=None, help="fall half-period (preset: 100)")
    p.add_argument("--k", type=float, default=None, help="spring constant (preset: 1)")
    p.add_argument("--A", type=float, default=None, help="plateau displacement (preset: 1)")
    p.add_argument("--t0", type=float, default=None, help="rise start time (preset: 5000)")
    p.add_argument("--t1", type=float, default=None, help="fall start time (preset: 10000)")
    p.add_argument("--n", type=int, default=None, help="number of samples (preset: 15000)")
    p.add_argument("--dt", type=float, default=None, help="sampling period (preset: 1)")
    p.add_argument("--with-velocity", action="store_true", help="also write velocity.csv")
    p.add_argument("--with-input", action="store_true", help="also write input.csv")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("select-order", help="criterion curve and optimal delay order",
                       formatter_class=fmt)
    _add_common(p)
    _add_input(p)
    _add_order(p, with_d=False)
    p.set_defaults(func=cmd_select_order)

    p = sub.add_parser("analyze", help="mode spectra at query indices", formatter_class=fmt)
    _add_common(p)
    _add_input(p)
    _add_order(p)
    p.add_argument("--at", type=int, action="append", default=[], help="query index (repeat)")
    p.add_argument("--estimator", choices=ESTIMATORS, default="exponential",
                   help="amplitude estimator")
    _add_peaks(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("peaks", help="peak extraction on a stored spectrum", formatter_class=fmt)
    _add_common(p)
    p.add_argument("--spectrum", required=True, help="spectrum CSV")
    p.add_argument("--n", type=int, default=-1, help="time index label for the report")
    _add_peaks(p)
    p.set_defaults(func=cmd_peaks)

    p = sub.add_parser("ssa", help="singular spectrum analysis", formatter_class=fmt)
    _add_common(p)
    _add_input(p)
    _add_order(p)
    p.add_argument("--components", default="1,2", help="1-based RC indices to write")
    p.set_defaults(func=cmd_ssa)

    p = sub.add_parser("dmd", help="delay-embedded DMD", formatter_class=fmt)
    _add_common(p)
    _add_input(p)
    _add_order(p)
    p.add_argument("--rank", type=int, default=None,
                   help="truncation rank (default: 99.9%% energy, capped at 200)")
    p.set_defaults(func=cmd_dmd)

    p = sub.add_parser("aic-curves", help="relative criterion curves for several horizons",
                       formatter_class=fmt)
    _add_common(p)
    _add_input(p)
    _add_order(p, with_d=False)
    p.add_argument("--L-list", default="1,5,20", help="comma-separated horizons")
    p.set_defaults(func=cmd_aic_curves)

    p = sub.add_parser("compare", help="analyze + ssa + dmd with a joined report",
                       formatter_class=fmt)
    _add_common(p)
    _add_input(p)
    _add_order(p)
    p.add_argument("--at", type=int, action="append", default=[], help="query index (repeat)")
    p.add_argument("--estimator", choices=ESTIMATORS, default="exponential")
    p.add_argument("--components", default="1,2", help="1-based RC indices to write")
    p.add_argument("--rank", type=int, default=None, help="DMD truncation rank")
    _add_peaks(p)
    p.set_defaults(func=cmd_compare)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        summary = args.func(args)
        write_json(_config_dict(args), Path(args.out) / "run_config.json")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (PipelineError, np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 2
    for key, value in summary.items():
        print(f"{key}: {value}")
    return 0


def main() -> None:
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        sys.exit(run())


if __name__ == "__main__":
    main()
