"""Independent checks: Wronskian-ratio identities, PDE residuals and
finite-difference oracles for the variable-coefficient equations."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .errors import CFLViolation, InsufficientGrid, IntegrationFailure, WindowTooLarge
from .kernels import OperatorFamily, cone_radius, kernel_from_gap
from .quadrature import QuadratureSpec, integrate
from .wavecore import Profile, SolutionField, SourceFamily, leapfrog

MAX_FD_SPEED = 25.0


@dataclass(frozen=True)
class ODECoefficients:
    """``V'' + b(t) V' + c(t) V = 0``."""

    b_coef: Callable = lambda t: 0.0
    c_coef: Callable = lambda t: 0.0

    @classmethod
    def for_family(cls, family: OperatorFamily) -> "ODECoefficients":
        c = family.mass_term()
        return cls(lambda t: 0.0, lambda t, c=c: c)


@dataclass
class ODEPair:
    """Fundamental pair with ``V1(0) = 1 = V2'(0)`` and ``V1'(0) = 0 = V2(0)``."""

    sol: object
    window: tuple

    def _eval(self, t):
        y = self.sol(np.asarray(t, dtype=float))
        return y

    def V1(self, t):
        return self._eval(t)[0]

    def V2(self, t):
        return self._eval(t)[2]

    def dV1(self, t):
        return self._eval(t)[1]

    def dV2(self, t):
        return self._eval(t)[3]

    def wronskian(self, b):
        y = self._eval(b)
        return y[0] * y[3] - y[1] * y[2]

    def ratio(self, t, b):
        """``(V1(b) V2(t) - V1(t) V2(b)) / W(b)``."""
        yt, yb = self._eval(t), self._eval(b)
        return (yb[0] * yt[2] - yt[0] * yb[2]) / (yb[0] * yb[3] - yb[1] * yb[2])


def ode_pair_solve(coefs: ODECoefficients, window=(0.0, 1.0), tol: float = 1e-12) -> ODEPair:
    t_lo, t_hi = map(float, window)
    if not t_hi > t_lo:
        raise IntegrationFailure("empty ODE window")

    def rhs(t, y):
        b, c = coefs.b_coef(t), coefs.c_coef(t)
        return [y[1], -b * y[1] - c * y[0], y[3], -b * y[3] - c * y[2]]

    sol = solve_ivp(rhs, (t_lo, t_hi), [1.0, 0.0, 0.0, 1.0], method="DOP853", rtol=tol,
                    atol=tol * 1e-2, dense_output=True)
    if not sol.success:
        raise IntegrationFailure(sol.message)
    return ODEPair(sol.sol, (t_lo, t_hi))


@dataclass
class ResidualReport:
    max_abs: float
    l2: float
    tolerance_used: float
    per_point: list | None = None
    family: str = ""
    check: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "pass" if self.max_abs <= self.tolerance_used else "fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "check": self.check,
            "max_abs": self.max_abs,
            "l2": self.l2,
            "tolerance": self.tolerance_used,
            "verdict": self.verdict,
            "nodes": self.per_point or [],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _report(residuals, nodes, tol, family, check, **extra):
    r = np.abs(np.asarray(residuals))
    per = [{"node": list(map(float, n)), "residual": float(v)} for n, v in zip(nodes, r)]
    l2 = float(np.sqrt(np.mean(r ** 2))) if r.size else 0.0
    return ResidualReport(float(r.max(initial=0.0)), l2, tol, per, family, check, dict(extra))


def kernel_integral(family: OperatorFamily, t: float, b: float, quad: QuadratureSpec = QuadratureSpec(rel_tol=1e-12)):
    """``multiplier * int_0^{|phi(t)-phi(b)|} K(t; r, b) dr``."""
    radius = float(cone_radius(family, t, b))
    res = integrate(lambda g: kernel_from_gap(family, t, g, b), 0.0, radius, quad)
    return family.multiplier * res.value, family.multiplier * res.error


def identity_residual(family: OperatorFamily, pair: ODEPair, t: float, b: float,
                      quad: QuadratureSpec = QuadratureSpec(rel_tol=1e-12), tolerance: float = 1e-6) -> ResidualReport:
    if not t > b:
        raise ValueError("identity needs t > b")
    lhs, _ = kernel_integral(family, t, b, quad)
    rhs = float(pair.ratio(t, b))
    return _report([abs(lhs - rhs)], [(b, t)], tolerance, family.label(), "wronskian-identity",
                   lhs=complex(lhs).real, lhs_imag=complex(lhs).imag, rhs=rhs)


# -- PDE residuals -----------------------------------------------------------


def _operator(field: SolutionField):
    fam = field.family
    if field.equation == "weighted":
        return (lambda t: t ** (-4.0 / 3.0)), 0.0, (lambda t: 2.0 / t)
    return fam.speed_squared, fam.mass_term(), None


def pde_residual(field: SolutionField, src: SourceFamily | None, stencil_h: float, probes=None,
                 tolerance: float | None = None, source_shift: float = 0.0) -> ResidualReport:
    """Centered-difference residual of the field's defining equation.

    The field is re-evaluated on the five-point stencil around each probe;
    ``probes`` defaults to every grid node.  ``source_shift`` is added to
    the source (a negative control).  The default tolerance combines the
    truncation scale ``h^2`` with the quadrature noise amplified by the
    second difference.
    """
    if field.evaluator is None:
        raise InsufficientGrid("field has no evaluator for stencil re-evaluation")
    h = float(stencil_h)
    if probes is None:
        probes = [(float(x), float(t)) for t in field.grid_t for x in np.atleast_1d(field.grid_x)]
    if not probes:
        raise InsufficientGrid("no probe nodes")
    a2, c, damp = _operator(field)
    t_min = field.family.t_min if field.family is not None else -math.inf
    res = []
    for x, t in probes:
        if t - h <= max(t_min, field.metadata.get("t0", -math.inf)):
            raise InsufficientGrid(f"stencil at t={t} reaches the start of the time domain")
        ts = np.array([t - h, t, t + h])
        xs = np.array([x - h, x, x + h])
        col = np.asarray(field.evaluator(np.array([x]), ts))[:, 0]
        row = np.asarray(field.evaluator(xs, np.array([t])))[0]
        u_tt = (col[0] - 2.0 * col[1] + col[2]) / (h * h)
        u_xx = (row[0] - 2.0 * row[1] + row[2]) / (h * h)
        lhs = u_tt - float(a2(t)) * u_xx + c * col[1]
        if damp is not None:
            lhs += damp(t) * (col[2] - col[0]) / (2.0 * h)
        f = 0.0 if src is None else float(src(np.array([x]), t)[0])
        res.append(lhs - f - source_shift)
    err = 0.0 if field.errors is None else float(np.max(field.errors))
    floor = 8.0 * err / (h * h)
    tol = tolerance if tolerance is not None else max(h * h, floor)
    label = field.family.label() if field.family is not None else ""
    return _report(np.abs(res), probes, tol, label, "pde-residual", h=h, noise_floor=floor)


# -- finite-difference oracles -----------------------------------------------


def fd_variable_oracle(family: OperatorFamily, grid_x, grid_t, *, phi0: Profile | None = None,
                       phi1: Profile | None = None, src: SourceFamily | None = None,
                       cfl: float = 0.5) -> SolutionField:
    """Leapfrog oracle for ``u_tt - a(t)^2 u_xx + c u = f``.

    ``grid_t`` must be uniform and start at the family's initial time 0.
    """
    if family.tag == "EinsteinDeSitter":
        raise WindowTooLarge("no finite-difference oracle for the Einstein-de Sitter equation")
    gt = np.asarray(grid_t, dtype=float)
    t_end = float(gt[-1])
    speed = math.sqrt(float(np.max(family.speed_squared(np.linspace(0.0, t_end, 257)))))
    if speed > MAX_FD_SPEED:
        raise WindowTooLarge(f"propagation speed {speed:.3g} exceeds {MAX_FD_SPEED} on [0, {t_end:g}]")
    if cfl * speed > 1.0:
        raise CFLViolation(f"CFL number {cfl * speed:.3g} exceeds 1 for {family.label()}")
    c = family.mass_term()
    vals = leapfrog(grid_x, gt, phi0=phi0, phi1=phi1,
                    source=None if src is None else src.__call__,
                    speed_squared=lambda t: float(family.speed_squared(t)),
                    mass=lambda t: c, cfl=cfl)
    return SolutionField(family, grid_x, gt, vals, provenance="oracle",
                         metadata={"scheme": "leapfrog", "cfl": cfl})


def ode_reduction_oracle(family: OperatorFamily, g: Callable, t_eval, t0: float = 0.0, tol: float = 1e-12):
    """Solve ``u'' + c u = g(t)``, ``u(t0) = u'(t0) = 0``: the equation an
    x-independent source reduces to."""
    c = family.mass_term()
    t_eval = np.atleast_1d(np.asarray(t_eval, dtype=float))
    sol = solve_ivp(lambda t, y: [y[1], g(t) - c * y[0]], (t0, float(t_eval.max())), [0.0, 0.0],
                    method="DOP853", rtol=tol, atol=tol * 1e-2, dense_output=True)
    if not sol.success:
        raise IntegrationFailure(sol.message)
    return sol.sol(t_eval)[0]


def weighted_ode_oracle(g: Callable, t_eval, quad: QuadratureSpec = QuadratureSpec(rel_tol=1e-12)):
    """``psi'' + 2 psi' / t = g`` under the weighted data.

    ``t psi`` solves ``(t psi)'' = t g`` with zero data at 0, so
    ``psi(t) = (1/t) int_0^t (t - b) b g(b) db``.
    """
    out = []
    for t in np.atleast_1d(t_eval):
        t = float(t)
        out.append(integrate(lambda b: (t - b) * b * g(b), 0.0, t, quad).value / t)
    return np.array(out)


def convergence_order(hs, errors) -> float:
    """Least-squares slope of ``log error`` against ``log h``."""
    return float(np.polyfit(np.log(hs), np.log(errors), 1)[0])
