"""Command-line front end: ``nijtoep {generate,check,transform} --config FILE``.

Reports are JSON written to stdout (or ``--output``).  Exit codes: 0 when all
checks pass, 1 for input errors (config, expression syntax, preconditions),
2 when a mathematical check fails.
"""

from __future__ import annotations

import argparse
import json
import re
import sys

import numpy as np

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .chart import Grid
from .conditions import DEFAULT_TOLERANCE, FORMS, classify, condition_residuals
from .errors import (
    ArityMismatch,
    ClosednessViolation,
    DimensionMismatch,
    ExpressionSyntaxError,
    GridEvaluationError,
    InconsistentSystem,
    NijtoepError,
    PreconditionViolation,
    RegularityViolation,
    SingularJacobian,
    UnknownFunction,
    UnknownVariable,
)
from .expressions import parse
from .field import OperatorFieldSpec, haantjes_norm, local_data
from .generator import generate_operator, sample_points
from .toeplitz import REGULARITY_THRESHOLD
from .transform import SYS_TOLERANCE, pushforward_check, run_algorithm

EXIT_OK, EXIT_INPUT, EXIT_MATH = 0, 1, 2

_MATH_ERRORS = (RegularityViolation, ClosednessViolation, InconsistentSystem, SingularJacobian)


class ConfigError(NijtoepError, ValueError):
    """Bad configuration; ``where`` is ``path:line [section] key`` when known."""

    def __init__(self, message, where=""):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)


class Config:
    """Parsed TOML plus enough of the source text to point at offending keys."""

    def __init__(self, path):
        self.path = str(path)
        try:
            with open(path, "rb") as fh:
                raw = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", self.path) from exc
        self.text = raw.decode("utf-8", errors="replace")
        try:
            self.data = tomllib.loads(self.text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(str(exc), self.path) from exc

    def where(self, section, key=None):
        line = self._line(section, key)
        loc = f"{self.path}:{line}" if line else self.path
        return f"{loc} [{section}]" + (f" {key}" if key else "")

    def _line(self, section, key):
        current = None
        for no, text in enumerate(self.text.splitlines(), start=1):
            s = text.strip()
            m = re.match(r"\[\s*([^\]]+?)\s*\]", s)
            if m:
                current = m.group(1)
                if key is None and current == section:
                    return no
                continue
            if current == section and key is not None and re.match(rf"{re.escape(key)}\s*=", s):
                return no
        return None

    def section(self, name, required=True):
        sec = self.data.get(name)
        if sec is None:
            if required:
                raise ConfigError("missing section", f"{self.path} [{name}]")
            return {}
        if not isinstance(sec, dict):
            raise ConfigError("must be a table", self.where(name))
        return sec

    def get(self, section, key, kind, default=None, required=False):
        sec = self.section(section, required=required)
        if key not in sec:
            if required:
                raise ConfigError("missing key", self.where(section) + f" {key}")
            return default
        value = sec[key]
        ok = isinstance(value, kind) and not (kind in (int, (int, float)) and isinstance(value, bool))
        if not ok:
            raise ConfigError(f"expected {_kind_name(kind)}, got {value!r}", self.where(section, key))
        return value

    def expression_error(self, section, key, exc):
        return ConfigError(str(exc), self.where(section, key))


def _kind_name(kind):
    names = {int: "integer", str: "string", list: "array", (int, float): "number", bool: "boolean"}
    return names.get(kind, str(kind))


_EXPRESSION_ERRORS = (ExpressionSyntaxError, UnknownVariable, UnknownFunction, ArityMismatch, DimensionMismatch)


def _problem(cfg, args):
    n = cfg.get("problem", "n", int, required=True)
    if n < 2:
        raise ConfigError("n must be at least 2", cfg.where("problem", "n"))
    p = {
        "n": n,
        "delta": float(cfg.get("problem", "delta", (int, float), 0.5)),
        "degree": cfg.get("problem", "degree", int, 16),
        "seed": cfg.get("problem", "seed", int, 0),
        "samples": cfg.get("problem", "samples", int, 100),
        "regularity_threshold": float(cfg.get("problem", "regularity_threshold", (int, float), REGULARITY_THRESHOLD)),
        "tolerance": cfg.get("problem", "tolerance", (int, float), None),
    }
    if p["delta"] <= 0:
        raise ConfigError("delta must be positive", cfg.where("problem", "delta"))
    if p["samples"] < 1:
        raise ConfigError("samples must be positive", cfg.where("problem", "samples"))
    if args.seed is not None:
        p["seed"] = args.seed
    if args.tolerance is not None:
        p["tolerance"] = args.tolerance
    return p


def _spec(cfg, n):
    """Operator from ``[functions]``: ``f1..f(n-1)`` (+ optional ``fn``) or ``g1..gn``."""
    sec = cfg.section("functions")
    has_f = any(re.fullmatch(r"f\d+", k) for k in sec)
    has_g = any(re.fullmatch(r"g\d+", k) for k in sec)
    if has_f == has_g:
        raise ConfigError("give either f1..fn or g1..gn", cfg.where("functions"))
    prefix = "f" if has_f else "g"
    for k in sec:
        if not re.fullmatch(rf"{prefix}\d+", k) or not 1 <= int(k[1:]) <= n:
            raise ConfigError(f"unexpected key for n={n}", cfg.where("functions", k))
    needed = n - 1 if has_f else n
    texts = []
    for i in range(1, needed + 1):
        texts.append(cfg.get("functions", f"{prefix}{i}", str, required=True))
    if has_f:
        fn = cfg.get("functions", f"f{n}", str)
        names = [f"f{i}" for i in range(1, n)]
        try:
            f = [_parse_one(cfg, "functions", k, t, ("p", "q")) for k, t in zip(names, texts)]
            f_n = None if fn is None else _parse_one(cfg, "functions", f"f{n}", fn, ("x",))
            return generate_operator(n, f + ([f_n] if f_n is not None else []), include_f_n=f_n is not None)
        except _EXPRESSION_ERRORS as exc:
            raise ConfigError(str(exc), cfg.where("functions")) from exc
    names = [f"u{i}" for i in range(1, n + 1)]
    g = [_parse_one(cfg, "functions", f"g{i}", t, names) for i, t in enumerate(texts, start=1)]
    return OperatorFieldSpec.direct(g)


def _parse_one(cfg, section, key, text, variables):
    try:
        return parse(text, variables)
    except _EXPRESSION_ERRORS as exc:
        raise cfg.expression_error(section, key, exc) from exc


def _points(cfg, p):
    pts = cfg.get("problem", "points", list)
    if pts is None:
        return sample_points(p["n"], p["samples"], seed=p["seed"], delta=p["delta"])
    try:
        arr = np.asarray(pts, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError("points must be an array of numeric arrays", cfg.where("problem", "points")) from exc
    if arr.ndim != 2 or arr.shape[1] != p["n"] or arr.shape[0] == 0:
        raise ConfigError(f"points must have shape (m, {p['n']})", cfg.where("problem", "points"))
    return arr


def _f(x):
    return float(x)


def _classification_report(spec, pts, tol, p, with_haantjes):
    summary = classify(spec, pts, tol, regularity_threshold=p["regularity_threshold"])
    report = {
        "tolerance": tol,
        "n": spec.n,
        "field": spec.describe(),
        "seed": p["seed"],
        "points": int(pts.shape[0]),
        "max_torsion": _f(np.max(summary.torsion)),
        "nijenhuis_by_torsion": summary.nijenhuis_by_torsion,
        "conditions": {
            form: {"passed": summary.passes[form], "max_residual": _f(np.max(summary.residuals[form]))}
            for form in FORMS
        },
        "gl_regularity": {
            "threshold": p["regularity_threshold"],
            "regular_everywhere": summary.gl_regular_everywhere,
            "regular_points": int(np.sum(summary.regular)),
            "min_abs_g_next_to_diagonal": _f(np.min(np.abs(summary.g_next_to_diagonal))),
        },
        "nijenhuis_outside_conditions": summary.nijenhuis_outside_conditions,
    }
    haantjes = haantjes_norm(spec, pts) if with_haantjes else None
    if with_haantjes:
        report["max_haantjes"] = _f(np.max(haantjes))
    per_point = []
    for k, u in enumerate(pts):
        entry = {
            "u": [_f(x) for x in u],
            "torsion": _f(summary.torsion[k]),
        }
        if with_haantjes:
            entry["haantjes"] = _f(haantjes[k])
        entry["verdicts"] = {form: bool(summary.residuals[form][k] <= tol) for form in FORMS}
        entry["gl_regular"] = bool(summary.regular[k])
        per_point.append(entry)
    report["per_point"] = per_point
    passed = summary.nijenhuis_by_torsion and all(summary.passes.values())
    return report, passed


def cmd_generate(cfg, args):
    p = _problem(cfg, args)
    tol = DEFAULT_TOLERANCE if p["tolerance"] is None else float(p["tolerance"])
    spec = _spec(cfg, p["n"])
    pts = _points(cfg, p)
    body, passed = _classification_report(spec, pts, tol, p, with_haantjes=False)
    return {"command": "generate", "certified": passed, **body}, passed


def cmd_check(cfg, args):
    p = _problem(cfg, args)
    tol = DEFAULT_TOLERANCE if p["tolerance"] is None else float(p["tolerance"])
    spec = _spec(cfg, p["n"])
    pts = _points(cfg, p)
    body, passed = _classification_report(spec, pts, tol, p, with_haantjes=True)
    G = local_data(spec, pts).G
    body["condition_reports"] = {}
    for form in FORMS:
        res = np.max(condition_residuals(G, form), axis=0)
        worst = _f(np.max(res))
        body["condition_reports"][form] = {
            "form": form,
            "per_equation_residuals": [_f(r) for r in res],
            "max_residual": worst,
            "passed": worst <= tol,
            "tolerance": tol,
        }
    return {"command": "check", "passed": passed, **body}, passed


def cmd_transform(cfg, args):
    p = _problem(cfg, args)
    n = p["n"]
    tol = SYS_TOLERANCE if p["tolerance"] is None else float(p["tolerance"])
    cfg.section("transform")
    push_tol = float(cfg.get("transform", "pushforward_tolerance", (int, float), 1e-6))
    M = _spec(cfg, n)
    q = _parse_one(cfg, "transform", "q", cfg.get("transform", "q", str, required=True), ("x",))
    r = []
    for k in range(1, n):
        text = cfg.get("transform", f"r{k}", str)
        r.append(None if text is None else _parse_one(cfg, "transform", f"r{k}", text, ("x",)))
    L_list = cfg.get("transform", "L", list, [])
    Ls = []
    names = [f"u{i}" for i in range(1, n + 1)]
    for j, entry in enumerate(L_list):
        if not isinstance(entry, list) or len(entry) != n or not all(isinstance(s, str) for s in entry):
            raise ConfigError(f"L[{j}] must be an array of {n} strings", cfg.where("transform", "L"))
        try:
            Ls.append(OperatorFieldSpec.direct([parse(s, names) for s in entry]))
        except _EXPRESSION_ERRORS as exc:
            raise ConfigError(f"L[{j}]: {exc}", cfg.where("transform", "L")) from exc
    grid = Grid(n, p["degree"], p["delta"])
    try:
        res = run_algorithm(M, q, r, grid, sys_tolerance=tol)
    except GridEvaluationError as exc:
        raise ConfigError(str(exc), cfg.where("transform")) from exc
    push = {"M": pushforward_check(res.v, M, grid, tolerance=push_tol)}
    for j, L in enumerate(Ls):
        push[f"L[{j}]"] = pushforward_check(res.v, L, grid, tolerance=push_tol)
    push_out = {}
    for name, rep in push.items():
        d = rep.as_dict()
        d["passed"] = rep.equals_j_after if name == "M" else rep.is_toeplitz_after
        push_out[name] = d
    passed = res.sys.passed and all(d["passed"] for d in push_out.values())
    report = {
        "command": "transform",
        "passed": passed,
        "tolerance": tol,
        "pushforward_tolerance": push_tol,
        "n": n,
        "grid": {"degree": p["degree"], "delta": p["delta"]},
        "field": M.describe(),
        **res.as_dict(),
        "pushforward": push_out,
    }
    if args.dump:
        _dump(args.dump, grid, res.v)
        report["dump"] = str(args.dump)
    return report, passed


def _dump(path, grid, v):
    """Write the nodes and ``v^1..v^n`` as JSON (one flat array per function)."""
    data = {
        "n": grid.n,
        "degree": grid.degree,
        "delta": grid.delta,
        "nodes": [float(x) for x in grid.nodes],
        "layout": "C-order over (u1, ..., un)",
        "v": {f"v{k}": [float(x) for x in vk.flat] for k, vk in enumerate(v, start=1)},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")


_COMMANDS = {"generate": cmd_generate, "check": cmd_check, "transform": cmd_transform}


def build_parser():
    parser = argparse.ArgumentParser(prog="nijtoep", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "generate": "build a field from generating functions and certify it",
        "check": "run every condition form and torsion check on a field",
        "transform": "compute coordinates bringing M to J and verify them",
    }
    for name, text in helps.items():
        s = sub.add_parser(name, help=text)
        s.add_argument("--config", required=True, help="TOML configuration file")
        s.add_argument("--tolerance", type=float, help="override [problem].tolerance")
        s.add_argument("--seed", type=_u64, help="override [problem].seed")
        s.add_argument("--output", help="write the JSON report here instead of stdout")
        if name == "transform":
            s.add_argument("--dump", help="write grid values of v^1..v^n to this JSON file")
    return parser


def _u64(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _emit(report, output):
    text = json.dumps(report, indent=2) + "\n"
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _fail(kind, exc, output):
    err = {"error": kind, "message": str(exc)}
    node = getattr(exc, "node", None)
    if node is not None:
        err["node"] = [float(x) for x in node]
    offset = getattr(exc, "offset", None)
    if offset is None and isinstance(exc.__cause__, ExpressionSyntaxError):
        offset = exc.__cause__.offset
    if offset is not None:
        err["offset"] = offset
    print(f"nijtoep: {kind}: {exc}", file=sys.stderr)
    _emit(err, output)


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.tolerance is not None and not args.tolerance > 0:
        print("nijtoep: --tolerance must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        cfg = Config(args.config)
        report, passed = _COMMANDS[args.command](cfg, args)
    except _MATH_ERRORS as exc:
        _fail(type(exc).__name__, exc, args.output)
        return EXIT_MATH
    except (ConfigError, PreconditionViolation, *_EXPRESSION_ERRORS) as exc:
        _fail(type(exc).__name__, exc, args.output)
        return EXIT_INPUT
    except NijtoepError as exc:
        _fail(type(exc).__name__, exc, args.output)
        return EXIT_MATH
    _emit(report, args.output)
    return EXIT_OK if passed else EXIT_MATH


if __name__ == "__main__":
    sys.exit(main())
