"""Acceptance criteria, one test and one summary line each."""
import math
import time
import warnings

import mpmath as mp
import numpy as np
import pytest

import oracles
from hyperfund.kernels import OperatorFamily, cone_radius, kernel, kernel_integral_identity_rhs
from hyperfund.quadrature import QuadratureSpec
from hyperfund.specfun import HypergeometricParams, bessel_i0, bessel_j0, gauss_2f1
from hyperfund.tails import TLinConfig, example_ratio_limit, tlin_bound_check
from hyperfund.transform import solve_desitter_cauchy, solve_edes_weighted, solve_source_problem
from hyperfund.verify import (ODECoefficients, convergence_order, fd_variable_oracle, identity_residual,
                              kernel_integral, ode_pair_solve, ode_reduction_oracle, pde_residual)
from hyperfund.wavecore import Profile, SourceFamily

F = OperatorFamily
TIGHT = QuadratureSpec(rel_tol=1e-12, abs_tol=1e-15)
SEVEN = [F.klein_gordon(1.0), F.klein_gordon(1.0, imaginary=True), F.tricomi(1.0), F.de_sitter(),
         F.anti_de_sitter(), F.einstein_de_sitter(1), F.de_sitter_kg(1.0)]


def grid_pairs(t_max=3.0, n=10):
    h = t_max / n
    return [(i * h, j * h) for j in range(1, n + 1) for i in range(n) if i < j]


def test_ac1_closed_form_identities(record):
    families = [F.tricomi(k) for k in (0.5, 1.0, 2.0)] + [F.de_sitter(), F.anti_de_sitter()]
    families += [F.de_sitter_kg(M, s) for M in (0.5, 1.0, 2.0) for s in ("large", "small")]
    start = time.perf_counter()
    worst = 0.0
    for fam in families:
        for b, t in grid_pairs():
            lhs, _ = kernel_integral(fam, t, b, TIGHT)
            worst = max(worst, abs(lhs - kernel_integral_identity_rhs(fam, t, b)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed < 60.0
    record("AC1 closed-form kernel identities", ok, f"max residual {worst:.2e} (<= 1e-6), {elapsed:.1f}s (< 60s)")
    assert ok


def test_ac2_wronskian_identity(record):
    families = SEVEN + [F.tricomi(0.5), F.tricomi(2.0), F.einstein_de_sitter(2), F.de_sitter_kg(1.0, "small"),
                        F.de_sitter_kg(2.5), F.klein_gordon(2.0)]
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for fam in families:
        pair = ode_pair_solve(ODECoefficients.for_family(fam), (0.0, 3.0), tol=1e-13)
        for _ in range(50):
            b, t = np.sort(rng.uniform(0.0, 3.0, 2))
            if t - b < 1e-3:
                t = b + 1e-3
            worst = max(worst, identity_residual(fam, pair, float(t), float(b), TIGHT).max_abs)
    ok = worst <= 1e-6
    record("AC2 Wronskian-ratio identity", ok, f"max residual {worst:.2e} over {len(families)} families x 50 pairs")
    assert ok


def test_ac3_ode_reduction(record):
    sources = {"1": lambda t: 1.0 + 0.0 * t, "t": lambda t: t, "sin t": np.sin}
    ts = np.array([0.5, 1.0, 2.0])
    worst = 0.0
    for name, g in sources.items():
        src = SourceFamily(lambda x, t, g=g: g(t) * np.ones_like(x), name=name)
        for fam in SEVEN:
            got = solve_source_problem(fam, src, [0.0], ts).values[:, 0]
            ref = ode_reduction_oracle(fam, g, ts)
            worst = max(worst, float(np.max(np.abs(got - ref) / np.abs(ref))))
    one = SourceFamily(lambda x, t: np.ones_like(x))
    kg_pi = solve_source_problem(F.klein_gordon(1.0), one, [0.0], [math.pi]).values[0, 0]
    kg_imag = solve_source_problem(F.klein_gordon(1.0, imaginary=True), one, [0.0], [1.0]).values[0, 0]
    ok = worst <= 1e-6 and abs(kg_pi - 2.0) <= 1e-6 and abs(kg_imag - 0.5430806) <= 1e-6
    record("AC3 ODE reduction", ok,
           f"max rel error {worst:.2e}; KG(pi) = {kg_pi:.10f}; cosh(1)-1 = {kg_imag:.10f}")
    assert ok


def _cross_validation(profile):
    xp, tp = np.array([-0.5, 0.0, 0.5, 1.0]), np.array([0.5, 1.0, 1.5, 2.0])
    ref = solve_desitter_cauchy(profile, Profile.zero(), xp, tp).values
    hs, errs = [], []
    for nx in (40, 80, 160, 320):
        dx = 2.0 / nx
        x = np.arange(-6.0, 6.0 + dx / 2, dx)
        t = np.linspace(0.0, 2.0, 41)
        fd = fd_variable_oracle(F.de_sitter(), x, t, phi0=profile)
        ii = [int(np.argmin(abs(t - s))) for s in tp]
        jj = [int(np.argmin(abs(x - s))) for s in xp]
        errs.append(float(np.max(np.abs(fd.values[np.ix_(ii, jj)] - ref))))
        hs.append(dx)
    return np.array(hs), np.array(errs)


def test_ac4_fd_cross_validation(record):
    hs, errs = _cross_validation(Profile.gaussian(0.0, 0.5))
    order = convergence_order(hs, errs)
    C = float(np.max(errs / (hs ** 2 + 1e-6)))
    hs2, errs2 = _cross_validation(Profile.gaussian(0.2, 0.7))
    stable = bool(np.all(errs2 <= C * (hs2 ** 2 + 1e-6)))
    ok = order >= 1.8 and stable
    record("AC4 FD cross-validation", ok,
           f"order {order:.2f} (>= 1.8), errors {', '.join(f'{e:.1e}' for e in errs)}, C = {C:.3f} holds for a second source: {stable}")
    assert ok


def test_ac5_pde_residual(record):
    src = SourceFamily(lambda x, t: np.exp(-x * x) * (1 + 0.5 * np.sin(t)))
    cases = [(F.tricomi(1.0), [(0.2, 1.0), (0.0, 0.6)]), (F.de_sitter(), [(0.2, 1.0), (0.5, 1.5)]),
             (F.anti_de_sitter(), [(0.0, 0.5), (0.3, 0.7)]), (F.einstein_de_sitter(1), [(0.2, 1.0), (0.0, 0.6)])]
    hs = (0.1, 0.05, 0.025, 0.0125)
    quad = QuadratureSpec(rel_tol=1e-12, abs_tol=1e-15)
    details, ok = [], True
    for fam, probes in cases:
        field = solve_source_problem(fam, src, [p[0] for p in probes], sorted({p[1] for p in probes}), quad)
        reps = [pde_residual(field, src, h, probes=probes) for h in hs]
        res = [r.max_abs for r in reps]
        factors = [res[i] / res[i + 1] for i in range(len(res) - 1)
                   if res[i + 1] > 10 * reps[i + 1].extra["noise_floor"]]
        ok &= len(factors) >= 2 and min(factors) >= 3.5
        details.append(f"{fam.label()} min factor {min(factors):.2f}")
    record("AC5 PDE residual order", ok, "; ".join(details))
    assert ok


def test_ac6_example_ratio(record):
    res = example_ratio_limit([6.0, 8.0, 10.0])
    small = example_ratio_limit([0.5, 1.0, 2.0, 4.0], eps_list=(1e-2, 1e-3, 1e-4))
    bound_ok = res.bound_ok and small.bound_ok
    ok = bound_ok and abs(res.limit - 2.0) <= 0.05 * 2.0
    record("AC6 Heaviside ratio", ok,
           f"bound 2(1 - e^(-t/2)) holds at {len(res.rows) + len(small.rows)} points: {bound_ok}; "
           f"extrapolated limit {res.limit:.6f} (2 within 5%)")
    assert ok


def test_ac7_power_law_tail_bound(record):
    cache = {}
    worst_growth, worst_held, ok = 0.0, 0.0, True
    for a in (0.55, 0.75, 0.95):
        for b in (0.55, 0.75, 0.95):
            for C0 in (0.0, 1.0):
                for C1 in (0.0, 1.0):
                    rep = tlin_bound_check(TLinConfig(a, b, C0, C1), cache=cache)
                    ok &= rep.passed
                    worst_growth = max(worst_growth, rep.extra["growth"])
                    if rep.extra["C_long"] > 0:
                        worst_held = max(worst_held, rep.extra["held_out_max_quotient"] / rep.extra["C_long"])
    record("AC7 power-law tail bound", ok,
           f"max C growth t<=2 -> t<=4: {100 * worst_growth:.1f}% (< 10%); held-out max |T|/(C env) = {worst_held:.3f} (<= 1)")
    assert ok


def test_ac8_edes_weighted(record):
    one = SourceFamily(lambda x, t: np.ones_like(x))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        field = solve_edes_weighted(one, [0.0, 0.5], [0.01, 1.0])
    t_psi = field.metadata["t_psi"]
    flux = field.metadata["t_psi_t_plus_psi"]
    psi1 = field.values[1]
    ok = abs(t_psi) <= 0.01 and abs(flux) <= 0.02 and np.all(np.abs(psi1 - 1.0 / 6.0) <= 1e-5)
    record("AC8 EdeS weighted problem", ok,
           f"t psi = {t_psi:.2e}, t psi_t + psi = {flux:.2e} at t = 0.01; psi(x, 1) = {psi1[0]:.12f}")
    assert ok


def test_ac9_special_functions(record):
    rng = np.random.default_rng(99)
    worst = 0.0
    for i in range(1000):
        kind = i % 4
        if kind == 0:
            a, b = rng.uniform(-1.5, 2.5, 2)
            c = rng.uniform(0.3, 3.5)
        elif kind == 1:
            M = rng.uniform(0.0, 4.0)
            a = b = complex(0.5, M)
            c = 1.0
        elif kind == 2:
            a = b = 0.5 - rng.uniform(0.0, 3.0)
            c = 1.0
        else:
            a = b = rng.uniform(0.01, 0.49)
            c = 1.0
        z = rng.uniform(0.0, 0.999)
        ref = oracles.hyp2f1(a, b, c, z)
        got = gauss_2f1(HypergeometricParams(a, b, c, z)).value
        worst = max(worst, abs(got - ref) / max(1.0, abs(ref)))
    xs = rng.uniform(-40.0, 40.0, 300)
    bessel = max(max(abs(bessel_j0(x) - float(mp.besselj(0, x))) for x in xs),
                 max(abs(bessel_i0(x) / float(mp.besseli(0, x)) - 1.0) for x in xs))
    coincide = 0.0
    for t, b in ((1.0, 0.0), (2.5, 0.7), (0.3, 0.1)):
        rs = np.linspace(0.0, float(cone_radius(F.de_sitter(), t, b)), 21)
        k_l = kernel(F.de_sitter_kg(0.0, "large"), t, rs, b)
        k_s = kernel(F.de_sitter_kg(0.0, "small"), t, rs, b)
        coincide = max(coincide, float(np.max(np.abs(k_l - k_s))))
    src = SourceFamily(lambda x, t: np.exp(-x * x) * np.cos(t))
    imag = max(solve_source_problem(F.de_sitter_kg(M), src, [0.0, 0.5], [0.5, 1.5]).metadata["max_imag"]
               for M in (0.5, 1.0, 2.0))
    ok = worst <= 1e-10 and bessel <= 1e-12 and coincide <= 1e-10 and imag <= 1e-8
    record("AC9 special functions", ok,
           f"2F1 max rel error {worst:.1e} on 1000 inputs; J0/I0 {bessel:.1e}; M=0 kernels differ by {coincide:.1e}; "
           f"max |imag| {imag:.1e}")
    assert ok
