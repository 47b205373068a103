"""Constant-coefficient wave solutions with first datum.

``w(x, r; b)`` solves ``w_rr - Laplacian w = 0`` with ``w(x, 0; b) = f(x, b)``
and ``w_r(x, 0; b) = 0``.  In one dimension this is d'Alembert's average;
in three it is ``d/dr [r * spherical mean]``.  A leapfrog stepper serves
as an independent oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CFLViolation, QuadratureFailure, SingularEvaluation, UnsupportedDimension

PROFILE_KINDS = ("smooth", "heaviside", "power_law", "polynomial", "gaussian")


@dataclass(frozen=True)
class Profile:
    """One-dimensional datum.

    ``params`` depends on ``kind``: ``smooth`` holds ``fn``; ``power_law``
    holds ``exponent`` and ``coefficient`` (``C |x|^-a``); ``polynomial``
    holds ``coefficients`` in increasing degree; ``gaussian`` holds
    ``center`` and ``width`` (``exp(-((x-center)/width)^2)``).  ``shift``
    translates the whole profile: the value at ``x`` is the base profile
    at ``x - shift``.
    """

    kind: str
    params: dict = field(default_factory=dict)
    shift: float = 0.0

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind == "power_law" and not 0.0 < self.params["exponent"] < 1.0:
            raise ValueError("power-law exponent must lie in (0, 1)")

    @classmethod
    def smooth(cls, fn):
        return cls("smooth", {"fn": fn})

    @classmethod
    def heaviside(cls):
        return cls("heaviside")

    @classmethod
    def power_law(cls, exponent, coefficient=1.0):
        return cls("power_law", {"exponent": float(exponent), "coefficient": float(coefficient)})

    @classmethod
    def polynomial(cls, coefficients):
        return cls("polynomial", {"coefficients": tuple(float(c) for c in coefficients)})

    @classmethod
    def gaussian(cls, center=0.0, width=1.0):
        return cls("gaussian", {"center": float(center), "width": float(width)})

    @classmethod
    def zero(cls):
        return cls.polynomial([0.0])

    def shifted(self, h: float) -> "Profile":
        return Profile(self.kind, self.params, self.shift + h)

    @property
    def is_zero(self) -> bool:
        if self.kind == "polynomial":
            return not any(self.params["coefficients"])
        if self.kind == "power_law":
            return self.params["coefficient"] == 0.0
        return False

    @property
    def singular_points(self) -> tuple:
        if self.kind in ("heaviside", "power_law"):
            return (self.shift,)
        return ()

    @property
    def singular_exponent(self):
        """Strength ``a`` of a ``|x - p|^-a`` blow-up, None for jumps or none."""
        return self.params["exponent"] if self.kind == "power_law" else None

    def __call__(self, x):
        x = np.asarray(x, dtype=float) - self.shift
        kind = self.kind
        if kind == "smooth":
            return np.asarray(self.params["fn"](x), dtype=float) * np.ones_like(x)
        if kind == "heaviside":
            return np.where(x >= 0.0, 1.0, 0.0)
        if kind == "power_law":
            with np.errstate(divide="ignore"):
                return self.params["coefficient"] * np.abs(x) ** (-self.params["exponent"])
        if kind == "polynomial":
            return np.polynomial.polynomial.polyval(x, self.params["coefficients"]) * np.ones_like(x)
        c, w = self.params["center"], self.params["width"]
        return np.exp(-(((x - c) / w) ** 2))

    def near_singular(self, side: float, dist):
        """Value at ``p + side * dist`` for the singular point ``p``.

        The blow-up factor is formed from ``dist`` directly so that points
        closer to ``p`` than floating point can separate still evaluate.
        """
        dist = np.asarray(dist, dtype=float)
        if self.kind == "power_law":
            return self.params["coefficient"] * dist ** (-self.params["exponent"])
        if self.kind == "heaviside":
            return np.full_like(dist, 1.0 if side > 0 else 0.0)
        return self(self.shift + side * dist)

    def to_dict(self) -> dict:
        params = {k: v for k, v in self.params.items() if k != "fn"}
        return {"kind": self.kind, "params": params, "shift": self.shift}


def dalembert_first_datum(profile: Profile, x, s):
    """``(profile(x + s) + profile(x - s)) / 2``."""
    x = np.asarray(x, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise ValueError("s must be nonnegative")
    if profile.kind == "power_law":
        p = profile.shift
        if np.any(x + s == p) or np.any(x - s == p):
            raise SingularEvaluation("evaluation on the power-law singularity")
    out = 0.5 * (profile(x + s) + profile(x - s))
    return out[()] if out.ndim == 0 else out


@dataclass
class SourceFamily:
    """Source ``f(x, t)``; for ``n = 3`` the last axis of ``x`` has length 3.

    ``epsilon`` is the exponent of the small-time bound
    ``|f| <= C t^(epsilon - 2)`` used by the weighted Einstein-de Sitter
    problem.
    """

    f: Callable
    n: int = 1
    smooth: bool = True
    name: str = "custom"
    epsilon: float = 1.0
    x_independent: bool = False

    def __call__(self, x, t):
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1] if self.n == 3 else x.shape
        return np.asarray(self.f(x, t), dtype=float) * np.ones(shape)


def _sphere_rule(n_mu: int):
    mu, w_mu = np.polynomial.legendre.leggauss(n_mu)
    n_az = 2 * n_mu
    az = 2.0 * np.pi * np.arange(n_az) / n_az
    st = np.sqrt(1.0 - mu * mu)
    dirs = np.stack([
        st[:, None] * np.cos(az)[None, :],
        st[:, None] * np.sin(az)[None, :],
        np.broadcast_to(mu[:, None], (n_mu, n_az)),
    ], axis=-1).reshape(-1, 3)
    weights = np.repeat(w_mu / 2.0, n_az) / n_az
    return dirs, weights


_SPHERE = {n: _sphere_rule(n) for n in (12, 24)}


def spherical_mean(fn: Callable, x, r, n_mu: int = 24):
    """Mean of ``fn`` over spheres of radii ``r`` about the point ``x``."""
    dirs, weights = _SPHERE[n_mu] if n_mu in _SPHERE else _sphere_rule(n_mu)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    pts = np.asarray(x, dtype=float)[None, None, :] + r[:, None, None] * dirs[None, :, :]
    vals = np.asarray(fn(pts)).reshape(r.size, -1)
    return vals @ weights


def wave_source_family(src: SourceFamily, x, r, b, *, sphere_tol: float = 1e-9):
    """First-datum wave solution ``w(x, r; b)`` with datum ``src(., b)``.

    Vectorised over ``r`` (and, for ``n = 1``, over ``x`` and ``b`` too).
    """
    r = np.asarray(r, dtype=float)
    if src.n == 1:
        return 0.5 * (src(np.asarray(x) + r, b) + src(np.asarray(x) - r, b))
    if src.n != 3:
        raise UnsupportedDimension(f"only n = 1 and n = 3 are supported, got n = {src.n}")
    x = np.asarray(x, dtype=float)
    scalar = r.ndim == 0
    r = np.atleast_1d(r)
    b = np.broadcast_to(np.asarray(b, dtype=float), r.shape)
    out = np.empty(r.shape)
    for bb in np.unique(b):
        sel = b == bb
        out[sel] = _kirchhoff(lambda p: src(p, bb), x, r[sel], sphere_tol)
    return out[0] if scalar else out


def _kirchhoff(fn, x, r, tol):
    # d/dr [r M(r)] = M(r) + r M'(r); M is even in r, so the stencil may cross 0
    h = 1e-3 * (1.0 + np.abs(r))
    offsets = np.array([-2.0, -1.0, 1.0, 2.0])
    radii = np.concatenate([r, (r[:, None] + offsets[None, :] * h[:, None]).ravel()])
    fine = spherical_mean(fn, x, np.abs(radii), 24)
    coarse = spherical_mean(fn, x, r, 12)
    mean = fine[: r.size]
    if np.max(np.abs(mean - coarse), initial=0.0) > tol * (1.0 + np.max(np.abs(mean), initial=0.0)):
        raise QuadratureFailure("sphere quadrature did not reach tolerance")
    m = fine[r.size:].reshape(r.size, 4)
    dm = (m[:, 0] - 8.0 * m[:, 1] + 8.0 * m[:, 2] - m[:, 3]) / (12.0 * h)
    return mean + r * dm


@dataclass
class SolutionField:
    """Values on a rectangular ``(x, t)`` grid, ``values[i, j] = u(x_j, t_i)``."""

    family: object
    grid_x: np.ndarray
    grid_t: np.ndarray
    values: np.ndarray
    quad: object = None
    provenance: str = "transform"
    errors: np.ndarray | None = None
    equation: str = "principal"
    evaluator: Callable | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid_x = np.asarray(self.grid_x, dtype=float)
        self.grid_t = np.asarray(self.grid_t, dtype=float)
        self.values = np.asarray(self.values)

    @property
    def max_imag(self) -> float:
        if np.iscomplexobj(self.values):
            return float(np.nanmax(np.abs(self.values.imag)))
        return 0.0

    def realness_ok(self, rtol: float = 1e-8) -> bool:
        if not np.iscomplexobj(self.values):
            return True
        v = self.values
        return bool(np.all(np.abs(v.imag) <= rtol * (1.0 + np.abs(v.real))))

    def rows(self):
        for i, t in enumerate(self.grid_t):
            for j, x in enumerate(self.grid_x):
                v = self.values[i, j]
                err = None if self.errors is None else float(self.errors[i, j])
                yield float(x), float(t), v, err


def leapfrog(x, t_out, *, phi0=None, phi1=None, source=None, speed_squared=None,
             mass=None, cfl: float = 0.5):
    """Second-order leapfrog for ``u_tt - a(t)^2 u_xx + c(t) u = f``.

    ``x`` must be uniform.  The domain is padded by one cell per time
    step on each side, so no boundary signal can reach the returned nodes.
    ``speed_squared(t)`` and ``mass(t)`` default to 1 and 0.  Returns the
    solution at ``t_out`` (uniform, starting at 0) on ``x``.
    """
    x = np.asarray(x, dtype=float)
    t_out = np.asarray(t_out, dtype=float)
    dx = x[1] - x[0]
    if not np.allclose(np.diff(x), dx, rtol=1e-9, atol=0.0):
        raise ValueError("x grid must be uniform")
    if t_out[0] != 0.0:
        raise ValueError("t_out must start at 0")
    dt_out = np.diff(t_out)
    if dt_out.size and not np.allclose(dt_out, dt_out[0], rtol=1e-9):
        raise ValueError("t_out must be uniform")
    a2 = speed_squared or (lambda t: 1.0)
    c = mass or (lambda t: 0.0)
    t_end = float(t_out[-1])
    max_a = max(math.sqrt(float(a2(t))) for t in np.linspace(0.0, t_end, 257))
    if cfl * max_a > 1.0:
        raise CFLViolation(f"CFL number {cfl * max_a:.3g} exceeds 1")
    sub = 1 if not dt_out.size else max(1, math.ceil(dt_out[0] / (cfl * dx)))
    dt = dt_out[0] / sub if dt_out.size else cfl * dx
    if dt * max_a > dx * (1.0 + 1e-12):
        raise CFLViolation("time step violates the CFL condition")
    nsteps = sub * (t_out.size - 1)
    pad = nsteps + 2
    xx = np.concatenate([x[0] - dx * np.arange(pad, 0, -1), x, x[-1] + dx * np.arange(1, pad + 1)])
    zero = lambda y: np.zeros_like(y)
    p0 = phi0 if phi0 is not None else zero
    p1 = phi1 if phi1 is not None else zero
    f = source if source is not None else (lambda y, t: np.zeros_like(y))

    def lap(u):
        out = np.zeros_like(u)
        out[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / (dx * dx)
        return out

    u_prev = np.asarray(p0(xx), dtype=float) * np.ones_like(xx)
    acc0 = a2(0.0) * lap(u_prev) - c(0.0) * u_prev + f(xx, 0.0)
    u_cur = u_prev + dt * np.asarray(p1(xx), dtype=float) + 0.5 * dt * dt * acc0
    out = [u_prev[pad:pad + x.size].copy()]
    if sub == 1 and t_out.size > 1:
        out.append(u_cur[pad:pad + x.size].copy())
    for n in range(1, nsteps):
        t = n * dt
        u_next = 2.0 * u_cur - u_prev + dt * dt * (a2(t) * lap(u_cur) - c(t) * u_cur + f(xx, t))
        u_prev, u_cur = u_cur, u_next
        if (n + 1) % sub == 0:
            out.append(u_cur[pad:pad + x.size].copy())
    return np.array(out[: t_out.size])


def fd_wave_oracle(x, t_out, *, profile: Profile | None = None, velocity: Profile | None = None,
                   source: SourceFamily | None = None, cfl: float = 0.5) -> SolutionField:
    """Leapfrog solution of ``u_tt - u_xx = f`` with data ``(profile, velocity)``."""
    if cfl > 1.0:
        raise CFLViolation(f"CFL number {cfl} exceeds 1")
    vals = leapfrog(x, t_out, phi0=profile, phi1=velocity,
                    source=None if source is None else source.__call__, cfl=cfl)
    return SolutionField(None, x, t_out, vals, provenance="oracle",
                         metadata={"scheme": "leapfrog", "cfl": cfl})
