"""Command-line front end.

Exit status: 0 when every verdict passes, 1 on a failed verdict or a
numerical error (reported as JSON on stderr), 2 on a configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .errors import ConfigError, HyperfundError
from .kernels import OperatorFamily
from .quadrature import QuadratureSpec
from .tails import TLinConfig, example_bound, tail_eval, tlin_bound_check
from .transform import solve_desitter_cauchy, solve_edes_weighted, solve_source_problem
from .verify import ODECoefficients, identity_residual, ode_pair_solve, pde_residual
from .wavecore import Profile, SourceFamily

COMMANDS = ("solve", "identities", "residual", "tail", "tlin")
FAMILY_NAMES = ("kg", "kg-imag", "tricomi", "desitter", "anti-desitter", "edes", "desitter-kg")
SOURCES = {
    "zero": lambda x, t: np.zeros_like(x),
    "const1": lambda x, t: np.ones_like(x),
    "t": lambda x, t: t * np.ones_like(x),
    "sin": lambda x, t: np.sin(t) * np.ones_like(x),
    "gaussian": lambda x, t: np.exp(-x * x),
    "gaussian-sin": lambda x, t: np.exp(-x * x) * (1.0 + 0.5 * np.sin(t)),
}
DEFAULTS = {
    "command": None,
    "family": "desitter",
    "mass": 1.0,
    "k": 1.0,
    "m_int": 1,
    "mass_sign": "large",
    "source": "const1",
    "equation": "principal",
    "phi0": None,
    "phi1": "zero",
    "grid": {"x_min": 0.0, "x_max": 0.0, "nx": 2, "t_min": 0.5, "t_max": 1.0, "nt": 2},
    "quad": {"rel_tol": 1e-10, "abs_tol": 1e-13, "max_depth": 40,
             "endpoint_mode": "singular-endpoint-substitution"},
    "n_identity": 10,
    "identity_tol": 1e-6,
    "stencil": [0.1, 0.05, 0.025],
    "a": 0.75,
    "b": 0.75,
    "C0": 1.0,
    "C1": 0.0,
    "threads": None,
    "output": {"path": None, "format": "csv"},
}


# -- configuration -------------------------------------------------------------


def _load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def _merge(base, update, where="config"):
    out = json.loads(json.dumps(base))
    for key, val in update.items():
        if key not in base:
            raise ConfigError(f"{where}: unknown field {key!r}")
        if isinstance(base[key], dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{where}: field {key!r} must be an object")
            out[key] = _merge(base[key], val, f"{where}.{key}")
        else:
            out[key] = val
    return out


def build_config(args) -> dict:
    cfg = json.loads(json.dumps(DEFAULTS))
    if args.config:
        cfg = _merge(cfg, _load_config(args.config))
    flags = {}
    for key in ("family", "mass", "k", "m_int", "mass_sign", "source", "equation", "phi0", "phi1",
                "a", "b", "C0", "C1", "threads", "n_identity", "identity_tol"):
        val = getattr(args, key, None)
        if val is not None:
            flags[key] = val
    if getattr(args, "stencil", None):
        flags["stencil"] = args.stencil
    grid = {k: getattr(args, k) for k in DEFAULTS["grid"] if getattr(args, k, None) is not None}
    quad = {k: getattr(args, k) for k in ("rel_tol", "abs_tol") if getattr(args, k, None) is not None}
    out = {k: v for k, v in (("path", args.out), ("format", args.format)) if v is not None}
    cfg = _merge(cfg, flags, "flags")
    cfg["grid"].update(grid)
    cfg["quad"].update(quad)
    cfg["output"].update(out)
    cfg["command"] = args.command
    if args.command == "identities" and args.t_max is None and "t_max" not in (
            _load_config(args.config).get("grid", {}) if args.config else {}):
        cfg["grid"]["t_max"] = 3.0
    validate(cfg)
    return cfg


def validate(cfg):
    if cfg["command"] not in COMMANDS:
        raise ConfigError(f"field 'command': expected one of {COMMANDS}")
    if cfg["family"] not in FAMILY_NAMES:
        raise ConfigError(f"field 'family': unknown family {cfg['family']!r}; expected one of {FAMILY_NAMES}")
    g = cfg["grid"]
    for key in ("nx", "nt"):
        if not isinstance(g[key], int) or g[key] < 1:
            raise ConfigError(f"field 'grid.{key}': must be a positive integer")
    if g["x_max"] < g["x_min"] or g["t_max"] < g["t_min"]:
        raise ConfigError("field 'grid': max must not be below min")
    if cfg["output"]["format"] not in ("csv", "json"):
        raise ConfigError("field 'output.format': must be 'csv' or 'json'")
    if cfg["source"] not in SOURCES:
        raise ConfigError(f"field 'source': unknown source {cfg['source']!r}; expected one of {tuple(SOURCES)}")
    if cfg["equation"] not in ("principal", "weighted"):
        raise ConfigError("field 'equation': must be 'principal' or 'weighted'")
    for key in ("phi0", "phi1"):
        if cfg[key] is not None:
            parse_profile(cfg[key], key)
    try:
        quad_spec(cfg)
        family(cfg)
    except (ValueError, HyperfundError) as exc:
        raise ConfigError(str(exc)) from exc
    path = cfg["output"]["path"]
    if path and not os.access(os.path.dirname(os.path.abspath(path)) or ".", os.W_OK):
        raise ConfigError(f"field 'output.path': directory of {path!r} is not writable")


def parse_profile(spec: str, field="profile") -> Profile:
    """``zero``, ``heaviside``, ``gaussian[:center[:width]]``, ``power:a[:C]``."""
    parts = str(spec).split(":")
    try:
        nums = [float(p) for p in parts[1:]]
    except ValueError as exc:
        raise ConfigError(f"field {field!r}: bad number in {spec!r}") from exc
    kind = parts[0]
    try:
        if kind == "zero":
            return Profile.zero()
        if kind == "heaviside":
            return Profile.heaviside()
        if kind == "gaussian":
            return Profile.gaussian(*nums)
        if kind == "power":
            return Profile.power_law(*nums)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"field {field!r}: {exc}") from exc
    raise ConfigError(f"field {field!r}: unknown profile {spec!r}")


def family(cfg) -> OperatorFamily:
    name = cfg["family"]
    if name == "kg":
        return OperatorFamily.klein_gordon(cfg["mass"])
    if name == "kg-imag":
        return OperatorFamily.klein_gordon(cfg["mass"], imaginary=True)
    if name == "tricomi":
        return OperatorFamily.tricomi(cfg["k"])
    if name == "desitter":
        return OperatorFamily.de_sitter()
    if name == "anti-desitter":
        return OperatorFamily.anti_de_sitter()
    if name == "edes":
        return OperatorFamily.einstein_de_sitter(cfg["m_int"])
    return OperatorFamily.de_sitter_kg(cfg["mass"], cfg["mass_sign"])


def quad_spec(cfg) -> QuadratureSpec:
    return QuadratureSpec(**cfg["quad"])


def threads(cfg) -> int:
    env = os.environ.get("HYPERFUND_THREADS")
    if env:
        return max(1, int(env))
    if cfg["threads"]:
        return max(1, int(cfg["threads"]))
    return os.cpu_count() or 1


def grid(cfg):
    g = cfg["grid"]
    return np.linspace(g["x_min"], g["x_max"], g["nx"]), np.linspace(g["t_min"], g["t_max"], g["nt"])


# -- commands ----------------------------------------------------------------


def cmd_solve(cfg):
    xs, ts = grid(cfg)
    quad = quad_spec(cfg)
    src = SourceFamily(SOURCES[cfg["source"]], name=cfg["source"])
    if cfg["phi0"] is not None:
        field = solve_desitter_cauchy(parse_profile(cfg["phi0"], "phi0"), parse_profile(cfg["phi1"], "phi1"),
                                      xs, ts, quad)
    elif cfg["equation"] == "weighted":
        field = solve_edes_weighted(src, xs, ts, quad, workers=threads(cfg))
    else:
        field = solve_source_problem(family(cfg), src, xs, ts, quad, workers=threads(cfg))
    rows = [{"x": x, "t": t, "u": complex(v).real, "error": e} for x, t, v, e in field.rows()]
    ok = field.realness_ok()
    return ("x", "t", "u", "error"), rows, ok, {"max_imag": field.max_imag}


def _identity_nodes(t_max, n):
    """Pairs ``b_i < t_j`` on the 10x10-style grid ``b_i = i h``, ``t_j = j h``."""
    h = t_max / n
    return [(i * h, j * h) for j in range(1, n + 1) for i in range(n) if i < j]


def cmd_identities(cfg):
    fam = family(cfg)
    t_max = cfg["grid"]["t_max"]
    pair = ode_pair_solve(ODECoefficients.for_family(fam), (0.0, t_max))
    quad = QuadratureSpec(rel_tol=min(1e-12, cfg["quad"]["rel_tol"]), abs_tol=1e-15)
    rows = []
    ok = True
    for b, t in _identity_nodes(t_max, cfg["n_identity"]):
        rep = identity_residual(fam, pair, t, b, quad, cfg["identity_tol"])
        ok &= rep.passed
        rows.append({"b": b, "t": t, "lhs": rep.extra["lhs"], "rhs": rep.extra["rhs"],
                     "residual": rep.max_abs, "verdict": rep.verdict})
    return ("b", "t", "lhs", "rhs", "residual", "verdict"), rows, ok, {"family": fam.label()}


def cmd_residual(cfg):
    fam = family(cfg)
    xs, ts = grid(cfg)
    quad = quad_spec(cfg)
    src = SourceFamily(SOURCES[cfg["source"]], name=cfg["source"])
    if cfg["equation"] == "weighted":
        field = solve_edes_weighted(src, xs, ts, quad)
    else:
        field = solve_source_problem(fam, src, xs, ts, quad)
    rows = []
    reports = []
    for h in cfg["stencil"]:
        rep = pde_residual(field, src, float(h))
        reports.append(rep)
        rows.append({"h": float(h), "max_abs": rep.max_abs, "l2": rep.l2,
                     "tolerance": rep.tolerance_used, "verdict": rep.verdict})
    for prev, cur in zip(rows, rows[1:]):
        cur["factor"] = prev["max_abs"] / cur["max_abs"] if cur["max_abs"] else math.inf
    ok = reports[-1].passed
    return ("h", "max_abs", "l2", "factor", "tolerance", "verdict"), rows, ok, {"family": fam.label()}


def cmd_tail(cfg):
    xs, ts = grid(cfg)
    quad = quad_spec(cfg)
    p0 = parse_profile(cfg["phi0"] or "heaviside", "phi0")
    p1 = parse_profile(cfg["phi1"], "phi1")
    rows = []
    ok = True
    for t in ts:
        if t <= 0:
            raise ConfigError("field 'grid.t_min': tail needs t > 0")
        for x in xs:
            d = tail_eval(p0, p1, float(x), float(t), quad)
            bound = example_bound(t) if p0.kind == "heaviside" and p1.is_zero else math.nan
            row = {"x": d.x, "t": d.t, "u": d.u, "huygensian": d.huygensian, "tail": d.tail,
                   "ratio": d.ratio, "bound": bound, "quotient": d.ratio / bound if bound else math.nan}
            if not math.isnan(bound) and abs(x) < -math.expm1(-t):
                ok &= d.ratio <= bound * (1.0 + 1e-9)
            rows.append(row)
    return ("x", "t", "u", "huygensian", "tail", "ratio", "bound", "quotient"), rows, ok, {}


def cmd_tlin(cfg):
    tc = TLinConfig(cfg["a"], cfg["b"], cfg["C0"], cfg["C1"])
    rep = tlin_bound_check(tc, quad=quad_spec(cfg))
    row = {"a": tc.a, "b": tc.b, "C0": tc.C0, "C1": tc.C1, "C_short": rep.extra["C_short"],
           "C_long": rep.extra["C_long"], "growth": rep.extra["growth"],
           "held_out": rep.extra["held_out_max_quotient"], "verdict": rep.verdict}
    return tuple(row), [row], rep.passed, {}


HANDLERS = {"solve": cmd_solve, "identities": cmd_identities, "residual": cmd_residual,
            "tail": cmd_tail, "tlin": cmd_tlin}


# -- output ----------------------------------------------------------------------


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return str(v)


def render(cfg, columns, rows, ok, info) -> str:
    meta = {"version": __version__, "command": cfg["command"], "config": cfg,
            "verdict": "pass" if ok else "fail", **info}
    if cfg["output"]["format"] == "json":
        clean = [{k: (float(v) if isinstance(v, np.floating) else v) for k, v in r.items()} for r in rows]
        return json.dumps({"schema": f"hyperfund-{cfg['command']}/1", "metadata": meta, "rows": clean},
                          sort_keys=True, indent=1, default=float) + "\n"
    buf = io.StringIO()
    buf.write(f"# schema: hyperfund-{cfg['command']}/1\n")
    buf.write("# metadata: " + json.dumps(meta, sort_keys=True, default=float) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_cell(r.get(c, "")) for c in columns])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hyperfund", description="Integral-transform solvers for hyperbolic equations.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config")
        s.add_argument("--out")
        s.add_argument("--format", choices=("csv", "json"))
        s.add_argument("--family")
        s.add_argument("--mass", type=float)
        s.add_argument("--k", type=float)
        s.add_argument("--m-int", dest="m_int", type=int)
        s.add_argument("--mass-sign", dest="mass_sign")
        s.add_argument("--source")
        s.add_argument("--equation")
        s.add_argument("--phi0")
        s.add_argument("--phi1")
        s.add_argument("--a", type=float)
        s.add_argument("--b", type=float)
        s.add_argument("--C0", type=float)
        s.add_argument("--C1", type=float)
        s.add_argument("--threads", type=int)
        s.add_argument("--n-identity", dest="n_identity", type=int)
        s.add_argument("--identity-tol", dest="identity_tol", type=float)
        s.add_argument("--stencil", type=float, nargs="+")
        s.add_argument("--rel-tol", dest="rel_tol", type=float)
        s.add_argument("--abs-tol", dest="abs_tol", type=float)
        for key in DEFAULTS["grid"]:
            typ = int if key in ("nx", "nt") else float
            s.add_argument("--" + key.replace("_", "-"), dest=key, type=typ)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        print(json.dumps({"error": "ConfigError", "message": str(exc)}), file=sys.stderr)
        return 2
    try:
        columns, rows, ok, info = HANDLERS[cfg["command"]](cfg)
    except ConfigError as exc:
        print(json.dumps({"error": "ConfigError", "message": str(exc)}), file=sys.stderr)
        return 2
    except (HyperfundError, ArithmeticError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc),
                          "node": getattr(exc, "node", None)}, default=str), file=sys.stderr)
        return 1
    text = render(cfg, columns, rows, ok, info)
    path = cfg["output"]["path"]
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
