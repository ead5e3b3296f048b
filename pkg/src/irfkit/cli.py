"""Command-line interface.

Every command resolves its parameters as flag > ``--config`` file > default,
logs the resolved configuration and, when it writes an output file, echoes
that configuration to ``<out>.json`` next to it.  Outputs depend only on the
resolved configuration and the master seed.

Exit status: 0 success, 1 verification outcome differs from expectation,
2 usage or configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import equivalence as eq
from .errors import ModelError, NumericalError, ValidationError
from .kriging import KrigingProblem, build_system, predict, solve_kkt
from .measure import Measure, construct_allowable, finite_difference_measure, is_allowable
from .process import (
    PolynomialTrend,
    difference,
    empirical_structure_function,
    read_paths_csv,
    write_paths_csv,
)
from .spectral import (
    FrequencyGrid,
    SpectralModel,
    TimeGrid,
    brownian_model,
    simulate_id_paths,
    theoretical_structure_function,
    validate_model,
)

log = logging.getLogger("irfkit")

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULTS = {
    "simulate": {
        "model": None, "n": 1000, "dt": 1.0, "t0": 0.0, "reps": 1, "trend": None,
        "eps": 1e-4, "T": 1e3, "nfreq": 4096, "out": None,
    },
    "difference": {"input": None, "d": 1, "m": 1, "out": None},
    "structfn": {
        "input": None, "model": None, "d": None, "iota": 1.0, "lags": None,
        "eps": 1e-4, "T": 1e3, "nfreq": 4096, "out": None,
    },
    "krige": {"problem": None, "targets": None, "check_kkt": False, "out": None},
    "measure": {
        "action": None, "file": None, "order": None, "d": None, "iota": 1.0, "t": 0.0,
        "points": None, "out": None,
    },
    "verify": {
        "model": None, "shifts": [0.0, 5.0, 20.0], "lags": [0.0, 1.0, 2.0], "iota": 1.0,
        "dt": 1.0, "n": 1000, "shift_reps": 400, "window_reps": 200, "n_windows": 4,
        "z_threshold": eq.Z_THRESHOLD, "bad_measure": [[0.0, 1.0], [1.0, 1.0]], "trend": None,
        "eps": 1e-4, "T": 1e3, "nfreq": 4096, "out": None,
    },
}
GLOBAL_DEFAULTS = {"seed": 0, "jobs": 1}
KKT_TOL = 1e-8


# -- parsing ----------------------------------------------------------------

def _floats(text):
    """Comma-separated floats; empty text gives an empty list."""
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    text = str(text).strip()
    if not text:
        return []
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_globals(p, suppress):
    default = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=int, default=default, help="master seed")
    p.add_argument("--jobs", type=int, default=default, help="worker threads for simulation")
    p.add_argument("--config", default=default, help="JSON configuration file")
    p.add_argument("-v", "--verbose", action="store_true", default=default)


def _grid_flags(p):
    p.add_argument("--eps", type=float, help="lowest positive frequency node")
    p.add_argument("--T", type=float, help="frequency truncation")
    p.add_argument("--nfreq", type=int, help="frequency nodes per side")


def build_parser():
    parser = argparse.ArgumentParser(prog="irfkit", description=__doc__.split("\n")[0])
    _add_globals(parser, False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate I(d) paths from a spectral model")
    _add_globals(p, True)
    p.add_argument("--model", help="spectral model JSON file")
    p.add_argument("--n", type=int, help="samples per path")
    p.add_argument("--dt", type=float, help="grid step")
    p.add_argument("--t0", type=float, help="grid origin")
    p.add_argument("--reps", type=int, help="number of replicates")
    p.add_argument("--trend", type=_floats, help="polynomial trend coefficients a0,a1,...")
    _grid_flags(p)
    p.add_argument("--out", help="output CSV (stdout if omitted)")

    p = sub.add_parser("difference", help="difference paths read from CSV")
    _add_globals(p, True)
    p.add_argument("--input", help="path CSV")
    p.add_argument("--d", type=int, help="difference order")
    p.add_argument("--m", type=int, help="lag in samples")
    p.add_argument("--out", help="output CSV")

    p = sub.add_parser("structfn", help="empirical and/or theoretical structure function")
    _add_globals(p, True)
    p.add_argument("--input", help="path CSV for the empirical column")
    p.add_argument("--model", help="spectral model JSON for the theoretical column")
    p.add_argument("--d", type=int, help="difference order (defaults to the model order)")
    p.add_argument("--iota", type=float, help="difference lag")
    p.add_argument("--lags", type=_floats, help="lags h, comma-separated, in time units")
    _grid_flags(p)
    p.add_argument("--out", help="output CSV")

    p = sub.add_parser("krige", help="universal kriging predictions")
    _add_globals(p, True)
    p.add_argument("--problem", help="problem JSON file")
    p.add_argument("--targets", type=_floats, help="prediction locations, comma-separated")
    p.add_argument("--check-kkt", action="store_true", default=None, help="cross-check against the KKT solve")
    p.add_argument("--out", help="output CSV")

    p = sub.add_parser("measure", help="check, build or construct allowable measures")
    _add_globals(p, True)
    acts = p.add_subparsers(dest="action", required=True)
    a = acts.add_parser("check", help="per-degree annihilation defects")
    _add_globals(a, True)
    a.add_argument("--file", help="measure JSON file")
    a.add_argument("--order", type=int)
    a.add_argument("--out")
    a = acts.add_parser("fd", help="finite-difference measure")
    _add_globals(a, True)
    a.add_argument("--d", type=int)
    a.add_argument("--iota", type=float)
    a.add_argument("--t", type=float)
    a.add_argument("--out")
    a = acts.add_parser("construct", help="allowable measure on given points")
    _add_globals(a, True)
    a.add_argument("--points", type=_floats)
    a.add_argument("--order", type=int)
    a.add_argument("--out")

    p = sub.add_parser("verify", help="run the equivalence harness")
    _add_globals(p, True)
    p.add_argument("--model", help="spectral model JSON (Brownian if omitted)")
    p.add_argument("--shifts", type=_floats)
    p.add_argument("--lags", type=_floats)
    p.add_argument("--iota", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--n", type=int, help="path length for the windowed test")
    p.add_argument("--shift-reps", type=int)
    p.add_argument("--window-reps", type=int)
    p.add_argument("--n-windows", type=int)
    p.add_argument("--z-threshold", type=float)
    p.add_argument("--trend", type=_floats, help="trend for the negative control (auto if omitted)")
    _grid_flags(p)
    p.add_argument("--out", help="report JSON (stdout if omitted)")
    return parser


def resolve_config(args) -> dict:
    """Merge built-in defaults, the ``--config`` file and explicit flags."""
    cmd = args.command
    cfg = dict(GLOBAL_DEFAULTS)
    cfg.update(DEFAULTS[cmd])
    path = getattr(args, "config", None)
    if path:
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"config file {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ValidationError("config file must hold a JSON object")
        for key, value in data.items():
            if key in GLOBAL_DEFAULTS:
                cfg[key] = value
            elif key == cmd and isinstance(value, dict):
                unknown = set(value) - set(DEFAULTS[cmd])
                if unknown:
                    raise ValidationError(f"unknown {cmd} config keys: {sorted(unknown)}")
                cfg.update(value)
            elif key not in DEFAULTS:
                raise ValidationError(f"unknown config key {key!r}")
    for key in list(GLOBAL_DEFAULTS) + list(DEFAULTS[cmd]):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    cfg["command"] = cmd
    return cfg


# -- helpers ----------------------------------------------------------------

def _require(cfg, *keys):
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise ValidationError(f"{cfg['command']}: missing required option(s) {', '.join('--' + k for k in missing)}")


def _load_json(path):
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: {exc}") from None


def _load_model(path):
    if path is None:
        return brownian_model(1.0)
    data = _load_json(path)
    if isinstance(data, dict) and data.get("family") == "brownian":
        return brownian_model(float(data.get("C", 1.0)), float(data.get("cutoff", 1e3)))
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: model must be a JSON object")
    return SpectralModel.from_dict(data)


def _fgrid(cfg):
    return FrequencyGrid(float(cfg["eps"]), float(cfg["T"]), int(cfg["nfreq"]))


def _checked_model(model, fgrid):
    rep = validate_model(model, fgrid)
    if not rep.ok:
        raise ModelError(f"model {model.model_id} fails integrability on the grid: {list(rep.diverging)}")
    return model


def _emit(cfg, text):
    out = cfg.get("out")
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
        with open(out + ".json", "w") as fh:
            fh.write(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(text)


def _fmt(x):
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else format(float(x), ".17g")


# -- commands ---------------------------------------------------------------

def cmd_simulate(cfg):
    _require(cfg, "model")
    if int(cfg["reps"]) < 1:
        raise ValidationError("--reps must be at least 1")
    if int(cfg["n"]) < 1 or not float(cfg["dt"]) > 0:
        raise ValidationError("need --n >= 1 and --dt > 0")
    fgrid = _fgrid(cfg)
    model = _checked_model(_load_model(cfg["model"]), fgrid)
    trend = PolynomialTrend(tuple(cfg["trend"])) if cfg["trend"] else None
    grid = TimeGrid(float(cfg["t0"]), float(cfg["dt"]), int(cfg["n"]))
    seeds = eq.replicate_seeds(int(cfg["seed"]), int(cfg["reps"]))
    paths = simulate_id_paths(model, grid, fgrid, seeds, trend, int(cfg["jobs"]))
    _emit({**cfg, "model_record": model.to_dict()}, write_paths_csv(paths))
    return EXIT_OK


def _read_paths(path):
    with open(path, newline="") as fh:
        return read_paths_csv(fh)


def cmd_difference(cfg):
    _require(cfg, "input")
    paths = [difference(p, int(cfg["d"]), int(cfg["m"])) for p in _read_paths(cfg["input"])]
    _emit(cfg, write_paths_csv(paths))
    return EXIT_OK


def cmd_structfn(cfg):
    lags = cfg["lags"]
    if not lags:
        raise ValidationError("--lags must list at least one lag")
    if cfg["input"] is None and cfg["model"] is None:
        raise ValidationError("structfn needs --input, --model or both")
    iota = float(cfg["iota"])
    lags = np.asarray(lags, dtype=float)
    model = _load_model(cfg["model"]) if cfg["model"] else None
    d = cfg["d"] if cfg["d"] is not None else (model.order_d if model else None)
    if d is None:
        raise ValidationError("--d is required without a model")
    d = int(d)
    emp = se = theo = [None] * lags.size
    if cfg["input"]:
        paths = _read_paths(cfg["input"])
        dt = paths[0].dt
        m = int(round(iota / dt))
        steps = lags / dt
        if m < 1 or abs(m * dt - iota) > 1e-9 * dt or np.any(np.abs(steps - np.round(steps)) > 1e-9):
            raise ValidationError("iota and lags must be multiples of the path grid step")
        est = empirical_structure_function(paths, d, m, np.round(steps).astype(int))
        emp, se = est.estimate.tolist(), est.se.tolist()
    if model is not None:
        if model.order_d != d:
            raise ValidationError(f"--d {d} differs from the model order {model.order_d}")
        theo = np.atleast_1d(theoretical_structure_function(model, iota, iota, lags, _fgrid(cfg))).tolist()
    lines = ["h,empirical,se,theoretical"]
    for row in zip(lags.tolist(), emp, se, theo):
        lines.append(",".join(_fmt(x) for x in row))
    _emit(cfg, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_krige(cfg):
    _require(cfg, "problem", "targets")
    problem = KrigingProblem.from_dict(_load_json(cfg["problem"]))
    lines = ["t0,prediction,kriging_variance"]
    worst = 0.0
    for t0 in cfg["targets"]:
        sol = predict(problem, t0)
        lines.append(f"{_fmt(t0)},{_fmt(sol.prediction)},{_fmt(sol.kriging_variance)}")
        if cfg["check_kkt"]:
            eta, _ = solve_kkt(build_system(problem, t0), problem.nugget)
            gap = float(np.max(np.abs(eta - sol.weights)) / max(np.max(np.abs(eta)), 1e-300))
            worst = max(worst, gap)
    _emit(cfg, "\n".join(lines) + "\n")
    if cfg["check_kkt"]:
        msg = f"kkt check: max relative weight difference {worst:.3e} (tolerance {KKT_TOL:g})"
        print(msg, file=sys.stderr)
        if worst > KKT_TOL:
            raise NumericalError(msg)
    return EXIT_OK


def cmd_measure(cfg):
    action = cfg["action"]
    if action == "check":
        _require(cfg, "file", "order")
        m = Measure.from_dict(_load_json(cfg["file"]))
        rep = is_allowable(m, int(cfg["order"]))
        out = rep.to_dict()
    elif action == "fd":
        _require(cfg, "d")
        out = finite_difference_measure(int(cfg["d"]), float(cfg["iota"]), float(cfg["t"])).to_dict()
    else:
        _require(cfg, "points", "order")
        out = construct_allowable(cfg["points"], int(cfg["order"])).to_dict()
    _emit(cfg, json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def cmd_verify(cfg):
    fgrid = _fgrid(cfg)
    model = _checked_model(_load_model(cfg["model"]), fgrid)
    d = model.order_d
    if d < 1:
        raise ValidationError("verify needs a model of order d >= 1")
    seed, jobs = int(cfg["seed"]), int(cfg["jobs"])
    z, dt, iota = float(cfg["z_threshold"]), float(cfg["dt"]), float(cfg["iota"])
    lam = finite_difference_measure(d, iota)
    bad = Measure.from_atoms(cfg["bad_measure"])
    trend = PolynomialTrend(tuple(cfg["trend"])) if cfg["trend"] else None
    window = dict(
        n_reps=int(cfg["window_reps"]), seed=seed, n=int(cfg["n"]), dt=dt,
        n_windows=int(cfg["n_windows"]), fgrid=fgrid, z_threshold=z, jobs=jobs,
    )
    suite = [
        ("shift_invariance", True, lambda: eq.shift_invariance_test(
            model, lam, cfg["shifts"], cfg["lags"], int(cfg["shift_reps"]), seed, dt, fgrid, z, jobs=jobs)),
        ("differenced_stationarity", True, lambda: eq.differenced_stationarity_test(model, d, iota, **window)),
        ("underdifferenced_control", False, lambda: eq.differenced_stationarity_test(model, d - 1, iota, **window)),
        ("negative_control", False, lambda: eq.negative_control(
            model, bad, cfg["shifts"], int(cfg["shift_reps"]), seed, trend, dt=dt, fgrid=fgrid,
            z_threshold=z, jobs=jobs)),
    ]
    entries, ok = [], True
    for name, expected, run in suite:
        rep = run()
        match = rep.passed == expected
        ok &= match
        log.info("%s: max_z=%.3f pass=%s expected=%s", name, rep.max_z, rep.passed, expected)
        entries.append({"name": name, "expected_pass": expected, "as_expected": match, "report": rep.to_dict()})
    report = {"ok": ok, "seed": seed, "suite": entries}
    _emit({**cfg, "model_record": model.to_dict()}, json.dumps(report, indent=2) + "\n")
    return EXIT_OK if ok else EXIT_VERIFY


COMMANDS = {
    "simulate": cmd_simulate,
    "difference": cmd_difference,
    "structfn": cmd_structfn,
    "krige": cmd_krige,
    "measure": cmd_measure,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        cfg = resolve_config(args)
        log.info("resolved config: %s", json.dumps(cfg, sort_keys=True))
        return COMMANDS[args.command](cfg)
    except NumericalError as exc:
        print(f"irfkit: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValidationError, OSError, ValueError, TypeError) as exc:
        print(f"irfkit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
