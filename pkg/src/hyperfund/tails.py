"""Tails of de Sitter waves.

The Cauchy solution splits into the part carried by the light-cone front,
``e^{t/2} v_phi0(x, 1 - e^{-t})``, and the tail living inside the cone.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DomainError
from .quadrature import QuadratureSpec
from .transform import desitter_decomposition
from .verify import ResidualReport
from .wavecore import Profile

CSV_SCHEMA = "hyperfund-tails/1"
CSV_COLUMNS = ("x", "t", "u", "huygensian", "tail", "ratio", "bound", "quotient")


@dataclass
class TailDecomposition:
    x: float
    t: float
    huygensian: float
    tail: float
    error: float = 0.0

    @property
    def u(self) -> float:
        return self.huygensian + self.tail

    @property
    def ratio(self) -> float:
        if self.huygensian == 0.0:
            return math.inf if self.tail != 0.0 else 0.0
        return abs(self.tail) / abs(self.huygensian)


def tail_eval(phi0: Profile, phi1: Profile, x: float, t: float,
              quad: QuadratureSpec = QuadratureSpec()) -> TailDecomposition:
    if not t > 0:
        raise DomainError("tail needs t > 0")
    h, tail, err = desitter_decomposition(phi0, phi1, float(x), float(t), quad)
    return TailDecomposition(float(x), float(t), float(h), float(tail), float(err))


def example_bound(t) -> float:
    """Upper bound ``2 (1 - e^{-t/2})`` of the Heaviside ratio."""
    return -2.0 * math.expm1(-0.5 * t)


@dataclass
class RatioLimitResult:
    limit: float
    per_t: dict
    rows: list
    bound_ok: bool

    def __float__(self):
        return self.limit


def _aitken(seq):
    s0, s1, s2 = seq[-3:]
    den = s2 - 2.0 * s1 + s0
    if den == 0.0:
        return s2
    return s2 - (s2 - s1) ** 2 / den


def example_ratio_limit(t_list, eps_list=(1e-2, 1e-3, 1e-4),
                        quad: QuadratureSpec = QuadratureSpec(), *, relative: bool = True) -> RatioLimitResult:
    """Heaviside data: the ratio ``|T| / |u - T|`` as ``x -> (1 - e^{-t})^-``
    and then ``t -> infinity``.

    For each ``t`` the ``eps`` sequence is extrapolated linearly in
    ``eps`` (the ratio is smooth up to the front); the per-``t`` limits
    are then accelerated with Aitken's process, which needs ``t_list``
    equally spaced.

    Near the front the kernel varies on the scale ``e^{-t}``, so with
    ``relative`` (the default) the offset from the front is
    ``eps * e^{-t}``; otherwise it is ``eps`` itself.
    """
    t_list = [float(t) for t in t_list]
    eps_list = sorted((float(e) for e in eps_list), reverse=True)
    if any(b <= a for a, b in zip(t_list, t_list[1:])):
        raise ValueError("t_list must be increasing")
    heav, zero = Profile.heaviside(), Profile.zero()
    rows, per_t = [], {}
    bound_ok = True
    for t in t_list:
        front = -math.expm1(-t)
        ratios = []
        for eps in eps_list:
            x = front - (eps * math.exp(-t) if relative else eps)
            if x < 0:
                raise DomainError(f"eps={eps} leaves the cone at t={t}")
            d = tail_eval(heav, zero, x, t, quad)
            bound = example_bound(t)
            bound_ok &= d.ratio <= bound * (1.0 + 1e-9)
            rows.append({"t": t, "eps": eps, "x": x, "u": d.u, "huygensian": d.huygensian,
                         "tail": d.tail, "ratio": d.ratio, "bound": bound})
            ratios.append(d.ratio)
        if len(ratios) >= 2:
            e1, e2 = eps_list[-2], eps_list[-1]
            r1, r2 = ratios[-2], ratios[-1]
            per_t[t] = (r2 * e1 - r1 * e2) / (e1 - e2)
        else:
            per_t[t] = ratios[-1]
    seq = [per_t[t] for t in t_list]
    limit = _aitken(seq) if len(seq) >= 3 else seq[-1]
    return RatioLimitResult(float(limit), per_t, rows, bool(bound_ok))


# -- power-law data ----------------------------------------------------------


@dataclass(frozen=True)
class TLinConfig:
    a: float
    b: float
    C0: float = 1.0
    C1: float = 0.0

    def __post_init__(self):
        for name in ("a", "b"):
            v = getattr(self, name)
            if not 0.5 < v < 1.0:
                raise DomainError(f"exponent {name}={v} must lie in (1/2, 1)")

    def profiles(self):
        return (Profile.power_law(self.a, self.C0), Profile.power_law(self.b, self.C1))


def tlin_envelope(cfg: TLinConfig, x, t):
    """Bound envelope without its constant."""
    x, t = np.asarray(x, dtype=float), np.asarray(t, dtype=float)
    w = 1.0 + np.exp(t) * (1.0 - np.abs(x))
    e0 = abs(cfg.C0) * (1.0 + t) * np.exp((0.5 + cfg.a) * t) * w ** (0.5 - cfg.a)
    e1 = abs(cfg.C1) * (1.0 + t) * np.exp((cfg.b - 0.5) * t) * w ** (0.5 - cfg.b)
    return e0 + e1


def tlin_grid(t_max: float, nt: int = 8, nx: int = 8, t_min: float = 0.5, gap: float = 1e-3,
              offset: float = 0.0):
    """Nodes ``(x, t)`` with ``0 <= x <= 1 - e^{-t} - gap``, clustered at the front.

    ``offset`` in (0, 1) shifts both sequences to produce a held-out grid.
    """
    nodes = []
    ts = np.linspace(t_min, t_max, nt)
    if offset:
        ts = ts[:-1] + offset * (ts[1] - ts[0])
    for t in ts:
        front = -math.expm1(-t)
        ds = np.geomspace(gap, 0.9 * front, nx - 1)
        if offset:
            ds = ds * (ds[1] / ds[0]) ** offset
            ds = ds[ds < front]
        xs = np.concatenate([[offset * 0.1 * front], front - ds])
        nodes.extend((float(x), float(t)) for x in xs)
    return nodes


def tail_components(nodes, exponent: float, which: int, quad: QuadratureSpec = QuadratureSpec(),
                    cache: dict | None = None):
    """Tails of unit power-law data in the first (``which = 0``) or second datum."""
    key = (which, float(exponent), tuple(nodes), quad)
    if cache is not None and key in cache:
        return cache[key]
    p = Profile.power_law(exponent, 1.0)
    z = Profile.zero()
    data = (p, z) if which == 0 else (z, p)
    out = np.array([tail_eval(*data, x, t, quad).tail for x, t in nodes])
    if cache is not None:
        cache[key] = out
    return out


def tlin_quotients(cfg: TLinConfig, nodes, quad: QuadratureSpec = QuadratureSpec(), cache=None):
    nodes = list(nodes)
    tail = np.zeros(len(nodes))
    if cfg.C0:
        tail = tail + cfg.C0 * tail_components(nodes, cfg.a, 0, quad, cache)
    if cfg.C1:
        tail = tail + cfg.C1 * tail_components(nodes, cfg.b, 1, quad, cache)
    xs = np.array([n[0] for n in nodes])
    ts = np.array([n[1] for n in nodes])
    env = tlin_envelope(cfg, xs, ts)
    with np.errstate(invalid="ignore", divide="ignore"):
        q = np.where(env > 0, np.abs(tail) / env, 0.0)
    return tail, env, q


def tlin_bound_check(cfg: TLinConfig, t_short: float = 2.0, t_long: float = 4.0, nt: int = 8,
                     nx: int = 8, quad: QuadratureSpec = QuadratureSpec(), cache=None,
                     growth_limit: float = 0.1) -> ResidualReport:
    """Fit the bound constant on ``t <= t_short`` and ``t <= t_long`` and test it.

    The report's ``max_abs`` is ``max(growth / growth_limit, held-out
    quotient / fitted C)``, so the verdict passes with tolerance 1 exactly
    when the constant grows by less than ``growth_limit`` and the fitted
    envelope covers a held-out grid.
    """
    short = tlin_grid(t_short, nt, nx)
    long_ = tlin_grid(t_long, nt, nx)
    held = tlin_grid(t_long, nt, nx, offset=0.5)
    _, _, q_short = tlin_quotients(cfg, short, quad, cache)
    _, _, q_long = tlin_quotients(cfg, long_, quad, cache)
    _, _, q_held = tlin_quotients(cfg, held, quad, cache)
    c_short = float(q_short.max(initial=0.0))
    c_long = float(max(c_short, q_long.max(initial=0.0)))
    growth = 0.0 if c_short == 0.0 else c_long / c_short - 1.0
    held_max = float(q_held.max(initial=0.0))
    held_ratio = 0.0 if held_max == 0.0 else (math.inf if c_long == 0.0 else held_max / c_long)
    score = max(growth / growth_limit, held_ratio)
    label = f"TLin(a={cfg.a:g},b={cfg.b:g},C0={cfg.C0:g},C1={cfg.C1:g})"
    return ResidualReport(score, score, 1.0, None, label, "tlin-bound",
                          {"C_short": c_short, "C_long": c_long, "growth": growth,
                           "held_out_max_quotient": held_max, "config": asdict(cfg)})


def write_tail_csv(path, rows, metadata: dict | None = None):
    """Write rows (dicts keyed by ``CSV_COLUMNS``) with a versioned header."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {CSV_SCHEMA}\n")
        for k, v in sorted((metadata or {}).items()):
            fh.write(f"# {k}: {v}\n")
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({c: _fmt(row.get(c, "")) for c in CSV_COLUMNS})


def _fmt(v):
    return repr(float(v)) if isinstance(v, (float, int, np.floating)) else v
