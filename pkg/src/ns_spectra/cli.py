"""Command-line front end.

Every command resolves its configuration as defaults, then the ``--config``
JSON file (a plain config object or a previous run's manifest), then explicit
flags.  The resolved configuration is stored in the run manifest, so passing
that manifest back via ``--config`` reproduces the outputs byte for byte.

Exit codes: 0 success, 2 usage/config error, 3 I/O error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigurationError, DegenerateInputError, DimensionError, NumericalError
from .experiments import (
    SweepConfig,
    fit_power_law,
    median_sval_per_size,
    min_iterations_for_band,
    run_sweep,
)
from .gaussian import GaussianSpec, Shape, derive_trial_seed, generate
from .mp_law import MpParams, mp_density
from .newton_schulz import DEFAULT_COEFFICIENTS, DEFAULT_TAIL_THRESHOLD, NsCoefficients, NsSchedule, ns_run
from .linalg import normalize_frobenius, singular_values
from .output import render_csv, render_json, write_outputs

EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 2, 3, 4
THREADS_ENV = "NS_SPECTRA_THREADS"

_DEFAULT_COEFFS = [list(DEFAULT_COEFFICIENTS.as_tuple())]

DEFAULTS = {
    "mp-density": {"gamma": 1.0, "sigma_bar": 1.0, "points": 512},
    "spectrum": {
        "in_d": 256,
        "out_d": None,
        "trials": 1,
        "seed": 0,
        "iters": 5,
        "coeffs": _DEFAULT_COEFFS,
        "threshold": DEFAULT_TAIL_THRESHOLD,
        "full_trace": False,
    },
    "sweep": {
        "sizes": [64, 128, 256, 512, 1024],
        "gamma": 1.0,
        "trials": 32,
        "seed": 0,
        "iters": 5,
        "coeffs": _DEFAULT_COEFFS,
        "threshold": DEFAULT_TAIL_THRESHOLD,
    },
    "min-iters": {
        "sizes": [128, 256, 512, 1024],
        "coeffs": _DEFAULT_COEFFS,
        "epsilon": 0.35,
        "quantile": 0.99,
        "seed": 0,
        "max_iters": 20,
        "trials": 4,
    },
    "fit": {"input": None, "x": "size", "y": "median_sval", "iteration": 0},
}

SWEEP_HEADER = ("size", "trial", "iteration", "tail_fraction", "ortho_residual", "median_sval", "min_sval", "max_sval")


# -- config resolution ------------------------------------------------------


def _int_list(text):
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _coeff_arg(text):
    try:
        return list(NsCoefficients.parse(text).as_tuple())
    except ConfigurationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON ({exc})", field="config") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path}: expected a JSON object", field="config")
    if "checksums" in data and isinstance(data.get("config"), dict):
        data = data["config"]
    return data


def resolve(command: str, args: argparse.Namespace) -> dict:
    config = dict(DEFAULTS[command])
    if getattr(args, "config", None):
        for key, value in _load_config_file(args.config).items():
            if key not in config:
                raise ConfigurationError(f"unknown config field {key!r} for {command}", field=key)
            config[key] = value
    for key in config:
        value = getattr(args, key, None)
        if value is not None:
            config[key] = value
    return config


def _field(config, key, kind):
    value = config[key]
    ok = {
        "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
        "float": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
        "bool": lambda v: isinstance(v, bool),
    }[kind](value)
    if not ok:
        raise ConfigurationError(f"{key} must be {kind}, got {value!r}", field=key)
    return float(value) if kind == "float" else value


def _schedule(config, iterations) -> NsSchedule:
    raw = config["coeffs"]
    if not isinstance(raw, list) or not raw or not all(isinstance(t, list) and len(t) == 3 for t in raw):
        raise ConfigurationError(f"coeffs must be a list of [a, b, c] triples, got {raw!r}", field="coeffs")
    try:
        triples = tuple(NsCoefficients(*(float(v) for v in t)) for t in raw)
    except (TypeError, ValueError):
        raise ConfigurationError(f"coeffs must be numeric, got {raw!r}", field="coeffs") from None
    return NsSchedule(triples, iterations)


def _threads(args) -> int:
    if args.threads is not None:
        value, source = args.threads, "--threads"
    else:
        value, source = os.environ.get(THREADS_ENV, "1"), THREADS_ENV
    try:
        n = int(value)
    except ValueError:
        n = 0
    if n < 1:
        raise ConfigurationError(f"{source} must be a positive integer, got {value!r}", field="threads")
    return n


# -- commands ---------------------------------------------------------------


def cmd_mp_density(config) -> dict[str, bytes]:
    points = _field(config, "points", "int")
    if points < 2:
        raise ConfigurationError("points must be >= 2", field="points")
    p = MpParams(_field(config, "gamma", "float"), _field(config, "sigma_bar", "float"))
    s = np.linspace(0.0, p.upper * 1.05, points)
    rho = mp_density(s, p)
    return {"csv": render_csv(("s", "rho"), zip(s.tolist(), rho.tolist()))}


def _spectrum_rows(config):
    in_d = _field(config, "in_d", "int")
    out_d = in_d if config["out_d"] is None else _field(config, "out_d", "int")
    shape = Shape.tall(in_d, out_d)
    trials = _field(config, "trials", "int")
    if trials < 1:
        raise ConfigurationError("trials must be >= 1", field="trials")
    iters = _field(config, "iters", "int")
    if iters < 0:
        raise ConfigurationError("iters must be >= 0", field="iters")
    threshold = _field(config, "threshold", "float")
    full = _field(config, "full_trace", "bool")
    seed = _field(config, "seed", "int")
    schedule = _schedule(config, iters) if iters else None
    for trial in range(trials):
        g = generate(GaussianSpec(shape, derive_trial_seed(seed, 0, trial)))
        if schedule is None:
            spectra = [(0, singular_values(normalize_frobenius(g)))]
        else:
            _, trace = ns_run(g, schedule, threshold)
            keep = trace.records if full else [trace[0], trace.final]
            spectra = [(r.iteration, r.spectrum) for r in keep]
        for iteration, spectrum in spectra:
            for i, sval in enumerate(spectrum.tolist()):
                yield (shape.in_d, trial, iteration, i, sval)


def cmd_spectrum(config) -> dict[str, bytes]:
    rows = list(_spectrum_rows(config))
    return {"csv": render_csv(("size", "trial", "iteration", "sval_index", "sval"), rows)}


def sweep_config(config) -> SweepConfig:
    sizes = config["sizes"]
    if not isinstance(sizes, list) or not all(isinstance(s, int) and not isinstance(s, bool) for s in sizes):
        raise ConfigurationError(f"sizes must be a list of integers, got {sizes!r}", field="sizes")
    return SweepConfig(
        sizes=tuple(sizes),
        gamma=_field(config, "gamma", "float"),
        trials_per_size=_field(config, "trials", "int"),
        schedule=_schedule(config, _field(config, "iters", "int")),
        tail_threshold=_field(config, "threshold", "float"),
        master_seed=_field(config, "seed", "int"),
    )


def cmd_sweep(config, threads=1) -> dict[str, bytes]:
    result = run_sweep(sweep_config(config), threads=threads)
    rows = []
    for cell in result.trials:
        for r in cell.trace.records:
            rows.append(
                (cell.size, cell.trial, r.iteration, r.tail_fraction, r.ortho_residual, r.median_sval, r.min_sval, r.max_sval)
            )
    medians = median_sval_per_size(result)
    fit = fit_power_law(medians) if len(medians) >= 2 else None
    summary = {
        "config": config,
        "aggregates": {str(size): agg for size, agg in result.aggregates().items()},
        "median_sval_per_size": [[size, med] for size, med in medians],
        "fit": None if fit is None else {
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "points_used": fit.points_used,
        },
    }
    return {"csv": render_csv(SWEEP_HEADER, rows), "json": render_json(summary)}


def cmd_min_iters(config) -> dict[str, bytes]:
    sizes = config["sizes"]
    if not isinstance(sizes, list) or not sizes or not all(isinstance(s, int) for s in sizes):
        raise ConfigurationError(f"sizes must be a non-empty list of integers, got {sizes!r}", field="sizes")
    schedule = _schedule(config, 1)
    k = schedule.coefficients[0]
    entries = []
    for index, size in enumerate(sizes):
        t = min_iterations_for_band(
            Shape(size, size),
            k,
            _field(config, "epsilon", "float"),
            _field(config, "quantile", "float"),
            _field(config, "seed", "int"),
            _field(config, "max_iters", "int"),
            trials=_field(config, "trials", "int"),
            size_index=index,
        )
        entries.append({"in_d": size, "min_iterations": "saturated" if t is None else t})
    return {"json": render_json(entries)}


def _read_sweep_csv(path):
    with open(path, newline="", encoding="ascii") as fh:
        return list(csv.DictReader(fh))


def cmd_fit(config) -> dict[str, bytes]:
    if not config["input"]:
        raise ConfigurationError("fit needs --input", field="input")
    rows = _read_sweep_csv(config["input"])
    x, y = config["x"], config["y"]
    if not rows:
        raise ConfigurationError(f"{config['input']} has no data rows", field="input")
    for col in (x, y):
        if col not in rows[0]:
            raise ConfigurationError(f"column {col!r} not in {config['input']}", field="x" if col == x else "y")
    if config["iteration"] is not None and "iteration" in rows[0]:
        it = _field(config, "iteration", "int")
        rows = [r for r in rows if int(r["iteration"]) == it]
    fit = fit_power_law([(float(r[x]), float(r[y])) for r in rows])
    out = {"x": x, "y": y, "slope": fit.slope, "intercept": fit.intercept, "r_squared": fit.r_squared,
           "points_used": fit.points_used}
    return {"json": render_json(out)}


# -- argument parsing -------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ns-spectra", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--out", type=Path, required=True, help="output file; a .manifest.json is written beside it")
        p.add_argument("--config", type=Path, help="JSON config or manifest; flags override its values")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int, help=f"worker threads (fallback: ${THREADS_ENV}, default 1)")
        return p

    p = command("mp-density", "sample the Marchenko-Pastur singular value density")
    p.add_argument("--gamma", type=float)
    p.add_argument("--sigma-bar", dest="sigma_bar", type=float)
    p.add_argument("--points", type=int)

    p = command("spectrum", "singular values before and after Newton-Schulz")
    p.add_argument("--in-d", dest="in_d", type=int)
    p.add_argument("--out-d", dest="out_d", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--coeffs", type=_coeff_arg, action="append", help="a,b,c (repeat for per-step triples)")
    p.add_argument("--threshold", type=float)
    p.add_argument("--full-trace", dest="full_trace", action=argparse.BooleanOptionalAction, default=None)

    p = command("sweep", "size sweep with tail statistics and a power-law fit")
    p.add_argument("--sizes", type=_int_list)
    p.add_argument("--gamma", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--coeffs", type=_coeff_arg, action="append", help="a,b,c (repeat for per-step triples)")
    p.add_argument("--threshold", type=float)

    p = command("min-iters", "fewest iterations that put a quantile of singular values in a band around 1")
    p.add_argument("--sizes", type=_int_list)
    p.add_argument("--coeffs", type=_coeff_arg, action="append")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--quantile", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--trials", type=int)

    p = command("fit", "power-law fit over two columns of a sweep CSV")
    p.add_argument("--input", type=str)
    p.add_argument("--x", type=str)
    p.add_argument("--y", type=str)
    p.add_argument("--iteration", type=int)
    return parser


def _output_paths(command, out: Path) -> dict[str, Path]:
    if command == "sweep":
        return {"csv": out, "json": out.with_suffix(".summary.json")}
    kind = "csv" if command in ("mp-density", "spectrum") else "json"
    return {kind: out}


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    try:
        config = resolve(command, args)
        if args.seed is not None and "seed" not in config:
            raise ConfigurationError(f"{command} does not take --seed", field="seed")
        threads = _threads(args)
        if command == "sweep":
            outputs = cmd_sweep(config, threads=threads)
        else:
            outputs = {
                "mp-density": cmd_mp_density,
                "spectrum": cmd_spectrum,
                "min-iters": cmd_min_iters,
                "fit": cmd_fit,
            }[command](config)
        paths = _output_paths(command, args.out)
        write_outputs(command, config, {paths[kind]: data for kind, data in outputs.items()})
    except (ConfigurationError, DimensionError, DegenerateInputError) as exc:
        field = getattr(exc, "field", None)
        print(f"ns-spectra {command}: error: {f'{field}: ' if field else ''}{exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"ns-spectra {command}: I/O error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"ns-spectra {command}: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
