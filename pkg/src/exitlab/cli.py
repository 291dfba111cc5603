"""Command-line entry point ``exitlab``.

Every subcommand prints CSV or JSON to standard output; with ``--out DIR``
the same data goes to files in ``DIR`` together with a ``manifest.json``
recording the full configuration and seed.
"""

from __future__ import annotations

import argparse
import io
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import decomp, empirical, firstexit, laplace, mc, specfun
from .emit import dumps, emit, fmt
from .exceptions import ExitLabError, TrivialExit
from .grids import Grid
from .levy import ModelParams, laplace_exponent, parse_model, parse_spec

__all__ = ["main", "build_parser"]

logger = logging.getLogger(__name__)


def _u64(text):
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog="exitlab", description="First-exit-time distributions of Levy subordinators.")
    parser.add_argument("--seed", type=_u64, default=0, help="run seed (unsigned 64-bit)")
    parser.add_argument("--out", type=Path, default=None, help="output directory; stdout when omitted")
    parser.add_argument("--threads", type=_positive_int, default=1, help="worker threads for Monte Carlo")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", help="exit-time density h(x, level) on a grid of x")
    p.add_argument("--spec", required=True)
    p.add_argument("--level", type=float, required=True)
    p.add_argument("--grid", required=True, help="start:step:count")
    p.add_argument("--path", choices=("closed", "numeric", "both"), default="numeric")
    p.add_argument("--as-printed", action="store_true", help="use the formula exactly as tabulated")
    p.add_argument("--method", choices=("talbot", "gs"), default="talbot")
    p.add_argument("--order", type=int, default=None)

    p = sub.add_parser("invert", help="numerically invert the level transform of the exit density")
    p.add_argument("--psi", required=True, help="subordinator spec")
    p.add_argument("--x", type=float, required=True, help="elapsed time")
    p.add_argument("--grid", required=True, help="start:step:count of levels (start > 0)")
    p.add_argument("--method", choices=("talbot", "gs"), default="talbot")
    p.add_argument("--order", type=int, default=None)

    p = sub.add_parser("decompose", help="truncated decomposition integral")
    p.add_argument("--variant", choices=("basic", "general"), default="basic")
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--mu", type=float, default=0.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=-1.0)
    p.add_argument("--time-box", type=float, default=5.0)
    p.add_argument("--eps-window", type=float, default=10.0)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--mc-check", type=int, default=0, metavar="PATHS", help="add a coupled-noise Monte Carlo report")
    p.add_argument("--mc-dt", type=float, default=1e-3)

    p = sub.add_parser("simulate", help="Monte Carlo log-return paths or exit times")
    p.add_argument("--model", required=True, help="mu=..,sigma=..,rho=..,lambda=..")
    p.add_argument("--spec", required=True)
    p.add_argument("--paths", type=_positive_int, required=True)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--exit-level", type=float, default=None)
    p.add_argument("--mode", choices=("up", "down"), default="down")

    p = sub.add_parser("empirical", help="rolling exit times and summary statistics of a price file")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--prices", type=Path, help="CSV with header date,close")
    src.add_argument("--synthetic", type=_positive_int, metavar="DAYS", help="use the built-in synthetic fixture")
    p.add_argument("--threshold", type=float, action="append", required=True, help="log-return threshold; repeatable")
    p.add_argument("--mode", choices=("up", "down"), default="up")
    p.add_argument("--stride", type=_positive_int, default=1)
    p.add_argument("--estimate-gamma", action="store_true")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)

    p = sub.add_parser("specfun-eval", help="evaluate one special function")
    p.add_argument("--fn", required=True, choices=sorted(_SPECFUN))
    p.add_argument("--args", required=True, help="comma-separated arguments; lists use ';', groups '|'")
    return parser


# ---------------------------------------------------------------------------
# specfun-eval

def _floats(text):
    return [float(v) for v in text.split(";") if v.strip()]


def _pfq(text):
    upper, lower, z = text.split("|")
    return specfun.pfq(specfun.PFQParams(_floats(upper), _floats(lower), float(z))).value


def _macrobert(text):
    parts = text.split("|")
    if len(parts) == 2:
        a, x = parts
        b = ""
    else:
        a, b, x = parts
    return specfun.macrobert_e(_floats(a), float(x), _floats(b)).value


_SPECFUN = {
    "erf": lambda args: specfun.erf(*_nums(args, 1)),
    "erfc": lambda args: specfun.erfc(*_nums(args, 1)),
    "gamma_upper": lambda args: specfun.gamma_upper(*_nums(args, 2)),
    "bessel_i0": lambda args: specfun.bessel_i0(*_nums(args, 1)),
    "bessel_i0e": lambda args: specfun.bessel_i0e(*_nums(args, 1)),
    "bessel_i1e": lambda args: specfun.bessel_i1e(*_nums(args, 1)),
    "bessel_i1": lambda args: specfun.bessel_i0_prime(*_nums(args, 1)),
    "hyp2f1_terminating": lambda args: _hyp2f1(args),
    "pfq": _pfq,
    "macrobert_e": _macrobert,
}


def _nums(text, count):
    values = [float(v) for v in text.split(",")]
    if len(values) != count:
        raise ValueError(f"expected {count} argument(s), got {len(values)}")
    return values


def _hyp2f1(text):
    n, c, x = text.split(",")
    return specfun.hyp2f1_terminating(int(n), float(c), float(x))


def _run_specfun(args, out):
    value = _SPECFUN[args.fn](args.args)
    value = np.asarray(value).item()
    if isinstance(value, complex) and value.imag == 0.0:
        value = value.real
    if isinstance(value, complex):
        text = f"{fmt(value.real)},{fmt(value.imag)}"
    else:
        text = fmt(value)
    out.write(text + "\n")
    return 0


# ---------------------------------------------------------------------------
# subcommands

def _settings(args):
    return laplace.InversionSettings(method=args.method, order=args.order)


def _emit_or_print(args, out, *, name, header, columns, config, results=None):
    if args.out is None:
        buf = io.StringIO()
        buf.write(",".join(header) + "\n")
        for row in zip(*columns):
            buf.write(",".join(fmt(v) for v in row) + "\n")
        out.write(buf.getvalue())
    else:
        emit(args.out, tables={name: (header, columns)}, config=config, seed=args.seed, results=results)


def _run_density(args, out):
    spec = parse_spec(args.spec)
    grid = Grid.parse(args.grid)
    settings = _settings(args)
    config = {"command": "density", "spec": spec.to_string(), "level": args.level, "grid": args.grid,
              "path": args.path, "as_printed": args.as_printed, "method": settings.method.value,
              "order": settings.order}
    kwargs = {"settings": settings}
    if args.as_printed:
        kwargs["as_printed"] = True
    result = firstexit.exit_density(spec, args.level, grid, args.path, **kwargs)
    x = grid.points()
    if args.path == "both":
        closed, numeric = result
        header, columns = ("x", "h_closed", "h_numeric"), [x, closed.values, numeric.values]
        results = {"tail_mass_closed": closed.tail_mass, "tail_mass_numeric": numeric.tail_mass}
    else:
        header, columns = ("x", "h"), [x, result.values]
        results = {"tail_mass": result.tail_mass, "atom": result.atom}
    _emit_or_print(args, out, name="density", header=header, columns=columns, config=config, results=results)
    return 0


def _run_invert(args, out):
    spec = parse_spec(args.psi)
    grid = Grid.parse(args.grid)
    settings = _settings(args)
    transform = laplace.exit_density_transform(laplace_exponent(spec), args.x)
    values = laplace.invert_values(transform, grid.points(), settings.method, settings.order)
    config = {"command": "invert", "psi": spec.to_string(), "x": args.x, "grid": args.grid,
              "method": settings.method.value, "order": settings.order}
    _emit_or_print(args, out, name="inversion", header=("t", "density"), columns=[grid.points(), values], config=config)
    return 0


def _run_decompose(args, out):
    spec = parse_spec(args.spec)
    model = ModelParams(mu=args.mu, sigma=args.sigma, rho=args.rho)
    inp = decomp.DecompositionInput(args.variant, args.a, args.b, spec,
                                    model if args.variant == "general" else None,
                                    epsilon_window=args.eps_window, time_box=args.time_box)
    result = decomp.decomposition_probability(inp, tol=args.tol)
    report = {
        "value": result.value,
        "quadrature_error": result.quadrature_error,
        "truncation_bound": result.truncation_bound,
        "evaluations": result.evaluations,
    }
    if args.mc_check:
        query = firstexit.ExitTimeQuery(args.a, args.b, model, spec)
        check = mc.decomposition_check(query, args.mc_check, args.seed, dt=args.mc_dt, threads=args.threads)
        report["mc_check"] = check.summary()
    config = {"command": "decompose", "variant": args.variant, "a": args.a, "b": args.b, "spec": spec.to_string(),
              "mu": args.mu, "sigma": args.sigma, "rho": args.rho, "time_box": args.time_box,
              "eps_window": args.eps_window, "tol": args.tol, "mc_check": args.mc_check, "mc_dt": args.mc_dt}
    if args.out is None:
        out.write(dumps(report))
    else:
        emit(args.out, config=config, seed=args.seed, results=report)
    return 0


def _run_simulate(args, out):
    model = parse_model(args.model)
    spec = parse_spec(args.spec)
    config = {"command": "simulate", "model": {"mu": model.mu, "sigma": model.sigma, "rho": model.rho,
                                               "lambda": model.lam, "r": model.r},
              "spec": spec.to_string(), "paths": args.paths, "dt": args.dt, "horizon": args.horizon,
              "exit_level": args.exit_level, "mode": args.mode, "threads": args.threads}

    def worker(i):
        return mc.simulate_logreturn(model, spec, args.horizon, args.dt, (args.seed, i))

    paths = mc._run_paths(worker, args.paths, args.threads)
    index = np.arange(args.paths)
    if args.exit_level is not None:
        times = []
        for path in paths:
            sample = mc.empirical_exit(path, args.exit_level, args.mode)
            times.append(sample.exit_times[0] if sample.exit_times.size else math.nan)
        times = np.array(times)
        censored = np.isnan(times).astype(np.int64)
        header, columns = ("path", "exit_time", "censored"), [index, np.nan_to_num(times, nan=args.horizon), censored]
        results = {"censored": int(censored.sum()), "exits": int(args.paths - censored.sum())}
        name = "exit_times"
    else:
        final = np.array([p.values[-1] for p in paths])
        low = np.array([p.values.min() for p in paths])
        high = np.array([p.values.max() for p in paths])
        header, columns = ("path", "final", "min", "max"), [index, final, low, high]
        results = {"mean_final": float(np.mean(final))}
        name = "paths"
    _emit_or_print(args, out, name=name, header=header, columns=columns, config=config, results=results)
    return 0


def _run_empirical(args, out):
    if args.prices is not None:
        series = empirical.load_prices(args.prices)
        source = str(args.prices)
    else:
        series = empirical.fixture_prices(args.synthetic, args.seed)
        source = series.source_id
    stats = empirical.summary_statistics(series)
    results = {"summary": stats, "thresholds": {}}
    histograms = {}
    for threshold in args.threshold:
        exits = empirical.rolling_exit_times(series, threshold, args.mode, args.stride)
        key = f"exit_hist_{args.mode}_{threshold!r}"
        histograms[key] = exits.histogram()
        results["thresholds"][repr(threshold)] = {
            "windows": exits.window_count,
            "exits": int(exits.exit_times.size),
            "censored": exits.censored_count,
        }
    if args.estimate_gamma:
        nu, alpha, diag = empirical.estimate_gamma_params(series, args.lam)
        results["gamma_fit"] = {"nu": nu, "alpha": alpha, "diagnostics": diag}
    config = {"command": "empirical", "source": source, "thresholds": args.threshold, "mode": args.mode,
              "stride": args.stride, "estimate_gamma": args.estimate_gamma, "lambda": args.lam}
    if args.out is None:
        out.write(dumps({"config": config, "results": results}))
    else:
        emit(args.out, histograms=histograms, config=config, seed=args.seed, results=results)
    return 0


_COMMANDS = {
    "density": _run_density,
    "invert": _run_invert,
    "decompose": _run_decompose,
    "simulate": _run_simulate,
    "empirical": _run_empirical,
    "specfun-eval": _run_specfun,
}


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return _COMMANDS[args.command](args, out)
    except TrivialExit as exc:
        print(f"exitlab: trivial exit: {exc}", file=sys.stderr)
        return 3
    except (ExitLabError, ValueError) as exc:
        print(f"exitlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"exitlab: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
