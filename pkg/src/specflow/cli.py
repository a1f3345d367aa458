"""``specflow`` command-line front end.

Exit codes: 0 ok, 1 property failure, 2 input error, 3 tracking failure,
4 scattering failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import paths, scatter
from .checks import run_checks
from .errors import DepthExceeded, SamplerInconsistent, SpecflowError
from .lift import ArgumentTrack, lift_path, read_track_csv, write_track_csv
from .matching import distance_d
from .mu import mu_integral, mu_invariant, write_mu_csv
from .rigged import STICKY, RiggedSet
from .unispec import CLUSTER_TOL, matrix_from_json, unitary_path

EXIT_OK, EXIT_PROPERTY, EXIT_INPUT, EXIT_TRACKING, EXIT_SCATTERING = 0, 1, 2, 3, 4

TOLERANCES = {
    "step_tol": 0.1,
    "node_tol": 1e-8,
    "max_depth": 40,
    "min_steps": 8,
    "cluster_tol": CLUSTER_TOL,
    "integer_tol": scatter.INTEGER_TOL,
    "bk_tol": scatter.BK_TOL,
    "unitarity_tol": scatter.UNITARITY_TOL,
}
_INT_TOLERANCES = {"max_depth", "min_steps"}


class InputError(Exception):
    """Malformed input; reported with exit code 2."""


@dataclass
class Context:
    out: Path
    seed: int = 0
    svg: bool = False
    tol: dict = field(default_factory=lambda: dict(TOLERANCES))

    def lift_kwargs(self) -> dict:
        return {k: self.tol[k] for k in ("step_tol", "node_tol", "max_depth", "min_steps")}


def _fmt(x) -> str:
    """Locale-independent shortest round-trip formatting."""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def parse_tol(items) -> dict:
    tol = dict(TOLERANCES)
    for item in items or ():
        name, sep, val = item.partition("=")
        if not sep or name not in TOLERANCES:
            raise InputError(f"--tol expects NAME=VAL with NAME in {sorted(TOLERANCES)}, got {item!r}")
        try:
            v = int(val) if name in _INT_TOLERANCES else float(val)
        except ValueError:
            raise InputError(f"--tol {name}: {val!r} is not a number") from None
        if not v > 0:
            raise InputError(f"--tol {name} must be positive")
        tol[name] = v
    return tol


def _load_json(path) -> object:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None


def _check_keys(doc, allowed, where, required=()):
    if not isinstance(doc, dict):
        raise InputError(f"{where}: expected a JSON object")
    extra = set(doc) - set(allowed)
    if extra:
        raise InputError(f"{where}: unknown key(s) {sorted(extra)}")
    missing = [k for k in required if k not in doc]
    if missing:
        raise InputError(f"{where}: missing key(s) {missing}")


# -- metric -------------------------------------------------------------------


def _rigged(doc, key) -> RiggedSet:
    try:
        return RiggedSet.from_dict(doc[key])
    except (ValueError, TypeError) as exc:
        raise InputError(f"{key}: {exc}") from None


def cmd_metric(args, ctx: Context) -> int:
    doc = _load_json(args.input)
    _check_keys(doc, ("S", "T"), "input", ("S", "T"))
    S, T = _rigged(doc, "S"), _rigged(doc, "T")
    res = distance_d(S, T)
    ctx.out.mkdir(parents=True, exist_ok=True)
    with open(ctx.out / "matching.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["source", "target"])
        for a, b in res.pairs:
            w.writerow(["sticky" if a is STICKY else _fmt(a), "sticky" if b is STICKY else _fmt(b)])
    print(f"{res.cost:.12g}")
    return EXIT_OK


# -- track / mu ---------------------------------------------------------------

_PATH_KEYS = ("builtin", "N", "H", "a", "b", "scale", "samples")


def build_path(doc, ctx: Context) -> paths.MatrixPath:
    """Matrix path from a JSON description.

    ``{"builtin": "loop", "N": 2}``, ``{"builtin": "identity", "N": 3}``,
    ``{"builtin": "exp_irH", "H": [[...]], "a": 0, "b": 1}``,
    ``{"builtin": "random", "N": 4, "scale": 0.5}`` (seeded by ``--seed``), or
    ``{"samples": [{"r": 0, "U": [[...]]}, ...]}`` joined by geodesics.
    """
    _check_keys(doc, _PATH_KEYS, "path")
    try:
        if "samples" in doc:
            rs, mats = [], []
            for i, s in enumerate(doc["samples"]):
                _check_keys(s, ("r", "U"), f"samples[{i}]", ("r", "U"))
                rs.append(float(s["r"]))
                mats.append(matrix_from_json(s["U"]))
            return paths.geodesic_interpolation(rs, mats)
        kind = doc.get("builtin")
        if kind == "loop":
            return paths.loop(_positive_int(doc, "N"))
        if kind == "identity":
            return paths.identity(_positive_int(doc, "N"))
        if kind == "exp_irH":
            H = matrix_from_json(doc["H"])
            if np.max(np.abs(H - H.conj().T)) > 1e-12:
                raise InputError("H: matrix must be Hermitian")
            return paths.exp_irH(H, float(doc.get("a", 0.0)), float(doc.get("b", 1.0)))
        if kind == "random":
            rng = np.random.default_rng(ctx.seed)
            return paths.random_two_generator(_positive_int(doc, "N"), rng, float(doc.get("scale", 0.5)))
        raise InputError(f"builtin: unknown generator {kind!r} (expected loop, identity, exp_irH, random)")
    except KeyError as exc:
        raise InputError(f"path: missing key {exc}") from None
    except (ValueError, TypeError) as exc:
        raise InputError(f"path: {exc}") from None


def _positive_int(doc, key) -> int:
    v = doc.get(key)
    if not isinstance(v, int) or v < 1:
        raise InputError(f"{key}: expected a positive integer, got {v!r}")
    return v


def _track_from_args(args, ctx: Context) -> ArgumentTrack:
    if str(args.input).endswith(".csv"):
        try:
            return read_track_csv(args.input)
        except (OSError, ValueError, KeyError) as exc:
            raise InputError(f"{args.input}: {exc}") from None
    P = build_path(_load_json(args.input), ctx)
    SP = unitary_path(P.U, P.a, P.b, ctx.tol["cluster_tol"], start_at_identity=False)
    return lift_path(SP, **ctx.lift_kwargs())


def cmd_track(args, ctx: Context) -> int:
    track = _track_from_args(args, ctx)
    ctx.out.mkdir(parents=True, exist_ok=True)
    write_track_csv(track, ctx.out / "track.csv")
    if ctx.svg:
        from .plot import plot_track
        plot_track(track, ctx.out / "track.svg")
    print(f"nodes {track.n_nodes} tracks {track.n_tracks}")
    return EXIT_OK


def cmd_mu(args, ctx: Context) -> int:
    track = _track_from_args(args, ctx)
    start, _ = track.endpoint_sets()
    if not start.is_empty():
        raise InputError(f"the mu-invariant needs a path starting at the identity; spec at start is {start}")
    m = mu_invariant(track)
    ctx.out.mkdir(parents=True, exist_ok=True)
    write_mu_csv(m, ctx.out / "mu.csv")
    if ctx.svg:
        from .plot import plot_mu
        plot_mu(m, ctx.out / "mu.svg")
    jumps = " ".join(f"{_fmt(a)}:{s:+d}" for a, s in m.step.jumps) or "none"
    print(f"base {m.base} jumps {jumps} integral {mu_integral(m):.12g}")
    return EXIT_OK


# -- scatter ------------------------------------------------------------------

_CONFIG_KEYS = ("model", "lambda_grid", "r_grid", "tolerances")
_MODEL_KEYS = ("sites", "kappa", "J")
_DEFAULT_MODELS = {"rank1": scatter.default_rank_one, "rank2": scatter.default_rank_two}


@dataclass
class ExperimentConfig:
    model: scatter.ScatteringModel
    lambda_grid: tuple
    r_grid: tuple
    tolerances: dict


def _number_list(doc, key, where):
    v = doc[key]
    if not isinstance(v, list) or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
        raise InputError(f"{where}.{key}: expected a list of numbers")
    return tuple(float(x) for x in v)


def _complex_entry(x, where):
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(t, (int, float)) for t in x):
        return complex(x[0], x[1])
    raise InputError(f"{where}: expected a number or [re, im] pair")


def load_config(doc, tol: dict) -> ExperimentConfig:
    """Validate an experiment document; unknown keys are rejected."""
    _check_keys(doc, _CONFIG_KEYS, "config", ("model",))
    mdoc = doc["model"]
    if isinstance(mdoc, str):
        if mdoc not in _DEFAULT_MODELS:
            raise InputError(f"model: unknown default {mdoc!r} (expected one of {sorted(_DEFAULT_MODELS)})")
        model = _DEFAULT_MODELS[mdoc]()
    else:
        _check_keys(mdoc, _MODEL_KEYS, "model", _MODEL_KEYS)
        sites = mdoc["sites"]
        if not isinstance(sites, list) or not all(isinstance(s, int) for s in sites):
            raise InputError("model.sites: expected a list of integers")
        kappa = _number_list(mdoc, "kappa", "model")
        J = mdoc["J"]
        if not isinstance(J, list) or not all(isinstance(row, list) for row in J):
            raise InputError("model.J: expected a list of rows")
        Jm = [[_complex_entry(x, f"model.J[{i}][{j}]") for j, x in enumerate(row)] for i, row in enumerate(J)]
        try:
            model = scatter.ScatteringModel(tuple(sites), kappa, Jm)
        except ValueError as exc:
            raise InputError(f"model: {exc}") from None
    lam = _number_list(doc, "lambda_grid", "config") if "lambda_grid" in doc else scatter.DEFAULT_LAMBDA_GRID
    rs = _number_list(doc, "r_grid", "config") if "r_grid" in doc else scatter.DEFAULT_R_GRID
    for x in lam:
        if not abs(x) < 2.0:
            raise InputError(f"lambda_grid: {x} lies outside the open band (-2, 2)")
    tol = dict(tol)
    tdoc = doc.get("tolerances", {})
    _check_keys(tdoc, TOLERANCES, "tolerances")
    for k, v in tdoc.items():
        if not isinstance(v, (int, float)) or not v > 0:
            raise InputError(f"tolerances.{k}: must be a positive number")
        tol[k] = int(v) if k in _INT_TOLERANCES else float(v)
    return ExperimentConfig(model, lam, rs, tol)


SCATTER_COLUMNS = ["lambda", "r", "xi", "xi_ac", "xi_s", "mu_s_value", "bk_residual", "min_singval", "flag"]


def cmd_scatter(args, ctx: Context) -> int:
    cfg = load_config(_load_json(args.config), ctx.tol)
    tol = cfg.tolerances
    kw = {"step_tol": tol["step_tol"], "max_depth": tol["max_depth"]}
    failures = []
    try:
        rows = scatter.sweep(cfg.model, cfg.lambda_grid, cfg.r_grid, workers=args.workers, **kw)
    except DepthExceeded as exc:
        print(f"scattering failure: tracking depth exceeded on {exc.interval}", file=sys.stderr)
        return EXIT_SCATTERING
    except SpecflowError as exc:
        print(f"scattering failure: {exc}", file=sys.stderr)
        return EXIT_SCATTERING
    ctx.out.mkdir(parents=True, exist_ok=True)
    max_int, max_bk, n_res = 0.0, 0.0, 0
    with open(ctx.out / "scatter.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SCATTER_COLUMNS)
        for row in rows:
            if row.flagged:
                n_res += 1
                lo, hi = row.resonance
                flag = f"resonance r*=[{_fmt(lo)},{_fmt(hi)}]"
                w.writerow([_fmt(row.lam), _fmt(row.r)] + ["nan"] * 6 + [flag])
                failures.append(f"lambda={_fmt(row.lam)} r={_fmt(row.r)}: {flag}")
                continue
            x = row.result
            dev = abs(x.xi_s - round(x.xi_s))
            max_int, max_bk = max(max_int, dev), max(max_bk, x.bk_residual)
            bad = []
            if dev >= tol["integer_tol"]:
                bad.append("xi_s not integer")
            if x.bk_residual >= tol["bk_tol"]:
                bad.append("Birman-Krein residual")
            if x.unitarity_residual >= tol["unitarity_tol"]:
                bad.append("unitarity residual")
            flag = ";".join(bad) or "ok"
            if bad:
                failures.append(f"lambda={_fmt(row.lam)} r={_fmt(row.r)}: {flag}")
            r = x.row()
            w.writerow([_fmt(r[c]) for c in SCATTER_COLUMNS[:-1]] + [flag])
    print(f"max |xi_s - round| {max_int:.3g}  max BK residual {max_bk:.3g}  resonances {n_res}")
    if failures:
        print(f"first failing grid point: {failures[0]}", file=sys.stderr)
        return EXIT_SCATTERING
    return EXIT_OK


# -- verify / plot ------------------------------------------------------------


def cmd_verify(args, ctx: Context) -> int:
    results = run_checks(ctx.seed, args.inject_fault or (), args.only)
    width = max(len(n) for n, _, _ in results)
    for name, ok, detail in results:
        print(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  {detail}")
    failed = [n for n, ok, _ in results if not ok]
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


def cmd_plot(args, ctx: Context) -> int:
    from .plot import plot_csv
    ctx.out.mkdir(parents=True, exist_ok=True)
    target = ctx.out / (Path(args.input).stem + ".svg")
    try:
        plot_csv(args.input, target)
    except (OSError, ValueError, KeyError) as exc:
        raise InputError(f"{args.input}: {exc}") from None
    print(target)
    return EXIT_OK


# -- entry point --------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    def global_flags(parser, suppress):
        # subcommand copies must not overwrite values given before the command
        dflt = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        parser.add_argument("--out", default=dflt("."), help="output directory")
        parser.add_argument("--seed", type=int, default=dflt(0))
        parser.add_argument("--tol", action="append", default=dflt(None), metavar="NAME=VAL",
                            help="override a tolerance")
        parser.add_argument("--svg", action="store_true", default=dflt(False), help="also write SVG plots")

    common = argparse.ArgumentParser(add_help=False)
    global_flags(common, suppress=True)
    p = argparse.ArgumentParser(prog="specflow", description=__doc__.splitlines()[0])
    global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("metric", parents=[common], help="distance between two rigged sets")
    s.add_argument("input")
    s = sub.add_parser("track", parents=[common], help="lift a unitary path to continuous phases")
    s.add_argument("input", help="path JSON or track CSV")
    s = sub.add_parser("mu", parents=[common], help="mu-invariant of a path from the identity")
    s.add_argument("input", help="path JSON or track CSV")
    s = sub.add_parser("scatter", parents=[common], help="xi decomposition sweep")
    s.add_argument("config")
    s.add_argument("--workers", type=int, default=1, help="threads for the grid sweep")
    s = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    s.add_argument("--inject-fault", action="append", choices=["metric"])
    s.add_argument("--only", action="append", metavar="CHECK")
    s = sub.add_parser("plot", parents=[common], help="SVG from a track, mu or scatter CSV")
    s.add_argument("input")
    return p


_COMMANDS = {"metric": cmd_metric, "track": cmd_track, "mu": cmd_mu, "scatter": cmd_scatter,
             "verify": cmd_verify, "plot": cmd_plot}


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        ctx = Context(Path(args.out), args.seed, args.svg, parse_tol(args.tol))
        return _COMMANDS[args.command](args, ctx)
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DepthExceeded as exc:
        lo, hi = exc.interval
        print(f"tracking failure: depth exceeded on r in [{_fmt(lo)}, {_fmt(hi)}]", file=sys.stderr)
        return EXIT_TRACKING
    except SamplerInconsistent as exc:
        print(f"tracking failure: {exc}", file=sys.stderr)
        return EXIT_TRACKING


if __name__ == "__main__":
    sys.exit(main())
