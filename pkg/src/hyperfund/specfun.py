"""Special functions used by the transform kernels.

Gauss's hypergeometric function is evaluated by its power series for
``z <= 0.5`` and by the ``z -> 1 - z`` connection formulas above that,
including the logarithmic formulas for integer ``c - a - b``.  All
array routines take scalar parameters and a vector of arguments, which
is the shape every kernel needs.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .errors import DomainError, NonConvergence, PoleError

MAX_TERMS = 10_000
_EPS = np.finfo(float).eps

_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class HypergeometricParams:
    a: complex
    b: complex
    c: float
    z: float


@dataclass(frozen=True)
class EvalResult:
    value: complex
    est_error: float
    terms_used: int


def _is_nonpositive_integer(s) -> bool:
    s = complex(s)
    return s.imag == 0.0 and s.real <= 0.0 and s.real == math.floor(s.real)


def ln_gamma_complex(s) -> complex:
    """Log-gamma on the branch that is real on the positive axis.

    The branch cut runs along the negative real axis; points on the cut
    take the limit from above.
    """
    s = complex(s)
    if _is_nonpositive_integer(s):
        raise PoleError(f"Gamma has a pole at {s.real:g}")
    if s.imag == 0.0:
        s = complex(s.real, 0.0)
    shift = max(0, math.ceil(15.0 - s.real))
    z = s + shift
    inv = 1.0 / z
    inv2 = inv * inv
    acc = 0.0
    power = inv
    for coef in _STIRLING:
        acc += coef * power
        power *= inv2
    out = (z - 0.5) * cmath.log(z) - z + _HALF_LOG_2PI + acc
    for k in range(shift):
        out -= cmath.log(s + k)
    return out


def digamma(x: float) -> float:
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        raise PoleError(f"digamma has a pole at {x:g}")
    if x < 0.5:
        return digamma(1.0 - x) - math.pi / math.tan(math.pi * x)
    acc = 0.0
    while x < 10.0:
        acc -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    tail = inv2 * (1.0 / 12 - inv2 * (1.0 / 120 - inv2 * (1.0 / 252 - inv2 * (
        1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12))))))
    return acc + math.log(x) - 0.5 / x - tail


def _gamma(s):
    """Gamma for real or complex scalars."""
    s = complex(s)
    if s.imag == 0.0:
        return math.gamma(s.real)
    return cmath.exp(ln_gamma_complex(s))


def _rgamma(s):
    """1/Gamma, zero at the poles."""
    if _is_nonpositive_integer(s):
        return 0.0
    s = complex(s)
    if abs(s) < 1e-9:
        # 1/Gamma(s) = s + gamma_E s^2 + O(s^3); math.gamma overflows near 0
        r = s * (1.0 + 0.5772156649015329 * s)
        return r.real if s.imag == 0.0 else r
    if s.imag == 0.0:
        return 1.0 / math.gamma(s.real)
    return cmath.exp(-ln_gamma_complex(s))


def bessel_j0(x):
    """J0 (scipy's Cephes implementation); even, so negative x is accepted."""
    return _sp.j0(x)


def bessel_i0(x):
    return _sp.i0(x)


# ---------------------------------------------------------------------------
# 2F1 core routines.  ``z`` is a float ndarray; parameters are scalars.


def _series(a, b, c, z, tol):
    """Direct power series.  Returns (value, error estimate, terms)."""
    dtype = complex if any(isinstance(p, complex) for p in (a, b, c)) else float
    term = np.ones(z.shape, dtype=dtype)
    total = term.copy()
    absum = np.ones(z.shape)
    quiet = np.zeros(z.shape, dtype=int)
    n = 0
    while True:
        term = term * ((a + n) * (b + n) / ((c + n) * (n + 1.0))) * z
        total = total + term
        mag = np.abs(term)
        absum += mag
        n += 1
        small = mag <= tol * np.abs(total)
        quiet = np.where(small, quiet + 1, 0)
        if np.all(quiet >= 3):
            break
        if n >= MAX_TERMS:
            raise NonConvergence(
                f"2F1 series did not converge in {MAX_TERMS} terms "
                f"(a={a}, b={b}, c={c}, max z={z.max():.6g})")
    ratio = np.minimum(np.abs(z), 0.999)
    err = mag * ratio / (1.0 - ratio) + _EPS * absum
    return total, err, n


def _log_case(a, b, m, w, tol):
    """F(a, b; a + b + m; 1 - w) for integer m >= 0 and real a, b."""
    c = a + b + m
    gc = math.gamma(c)
    value = np.zeros(w.shape)
    err = np.zeros(w.shape)
    if m > 0:
        lead = math.gamma(m) * gc / (math.gamma(a + m) * math.gamma(b + m))
        term = np.ones(w.shape)
        finite = term.copy()
        for n in range(1, m):
            term = term * ((a + n - 1) * (b + n - 1) / (n * (1 - m + n - 1))) * w
            finite = finite + term
        value = value + lead * finite
    pref = -((-1.0) ** m) * gc * _rgamma(a) * _rgamma(b)
    with np.errstate(divide="ignore", invalid="ignore"):
        logw = np.log(w)
    psi_n1 = digamma(1.0)
    psi_nm1 = digamma(m + 1.0)
    psi_anm = digamma(a + m)
    psi_bnm = digamma(b + m)
    coef = 1.0 / math.factorial(m)
    wpow = w ** m
    total = np.zeros(w.shape)
    absum = np.zeros(w.shape)
    quiet = np.zeros(w.shape, dtype=int)
    n = 0
    while True:
        with np.errstate(invalid="ignore"):
            term = coef * wpow * (logw - psi_n1 - psi_nm1 + psi_anm + psi_bnm)
        term = np.where(wpow == 0.0, 0.0, term)
        total = total + term
        mag = np.abs(term)
        absum += mag
        quiet = np.where(mag <= tol * np.maximum(np.abs(total), 1e-300), quiet + 1, 0)
        quiet = np.where(wpow == 0.0, 3, quiet)
        if np.all(quiet >= 3):
            break
        coef *= (a + m + n) * (b + m + n) / ((n + 1.0) * (n + m + 1.0))
        psi_n1 += 1.0 / (n + 1.0)
        psi_nm1 += 1.0 / (n + m + 1.0)
        psi_anm += 1.0 / (a + n + m)
        psi_bnm += 1.0 / (b + n + m)
        wpow = wpow * w
        n += 1
        if n >= MAX_TERMS:
            raise NonConvergence("logarithmic 2F1 expansion did not converge")
    value = value + pref * total
    err = abs(pref) * (mag + _EPS * absum) + _EPS * np.abs(value)
    if m == 0:
        value = np.where(w == 0.0, np.inf, value)
    return value, err, n


def _connection(a, b, c, w, tol):
    """Generic z -> 1 - z connection formula (c - a - b not an integer)."""
    s = c - a - b
    g_c = _gamma(c)
    a1 = g_c * _gamma(s) * _rgamma(c - a) * _rgamma(c - b)
    a2 = g_c * _gamma(-s) * _rgamma(a) * _rgamma(b)
    f1, e1, n1 = _series(a, b, a + b - c + 1.0, w, tol)
    f2, e2, n2 = _series(c - a, c - b, s + 1.0, w, tol)
    with np.errstate(divide="ignore", invalid="ignore"):
        ws = np.where(w > 0.0, np.exp(s * np.log(np.where(w > 0.0, w, 1.0))), 0.0)
    value = a1 * f1 + a2 * ws * f2
    err = abs(a1) * e1 + abs(a2) * np.abs(ws) * e2
    # cancellation between the two branches when |s| is small
    err = err + _EPS * (abs(a1) * np.abs(f1) + abs(a2) * np.abs(ws * f2))
    return value, err, max(n1, n2)


_NEAR_INT = 1e-3
_INTERP_OFFSETS = np.array([-6.0, -4.0, -2.0, 2.0, 4.0, 6.0]) * 1e-3


def _near_integer(a, b, c, w, tol):
    """Connection formula when ``c - a - b`` is within ``_NEAR_INT`` of an integer.

    The two branches cancel there, so F is interpolated in ``c`` from six
    values of ``c`` where ``c - a - b`` keeps a safe distance from every
    integer.
    """
    nodes = c + _INTERP_OFFSETS
    vals, errs = [], []
    for cc in nodes:
        v, e, n = _connection(a, b, cc, w, tol)
        vals.append(v)
        errs.append(e)
    weights = np.ones(nodes.size)
    for i in range(nodes.size):
        for j in range(nodes.size):
            if i != j:
                weights[i] *= (c - nodes[j]) / (nodes[i] - nodes[j])
    value = sum(wt * v for wt, v in zip(weights, vals))
    err = sum(abs(wt) * e for wt, e in zip(weights, errs))
    return value, err, n


def _as_param(p):
    p = complex(p)
    return p.real if p.imag == 0.0 else p


def _hyp2f1_core(a, b, c, z, one_minus_z=None, tol=1e-15, method="auto"):
    a, b, c = _as_param(a), _as_param(b), _as_param(c)
    z = np.asarray(z, dtype=float)
    w = 1.0 - z if one_minus_z is None else np.asarray(one_minus_z, dtype=float)
    if _is_nonpositive_integer(c):
        raise DomainError("c must not be a nonpositive integer")
    real = not any(isinstance(p, complex) for p in (a, b, c))
    out = np.zeros(z.shape, dtype=float if real else complex)
    err = np.zeros(z.shape)
    if z.size == 0:
        return out, err, 0
    terminating = _is_nonpositive_integer(a) or _is_nonpositive_integer(b)
    # a numerator parameter this small makes every term beyond the first
    # negligible; the connection formulas would cancel poles of size 1/a
    terminating |= min(abs(a), abs(b)) < 1e-18
    if method == "series" or terminating:
        near = np.ones(z.shape, dtype=bool)
    elif method == "transform":
        near = np.zeros(z.shape, dtype=bool)
    else:
        near = z <= 0.5
    s = c - a - b
    s_int = (not isinstance(s, complex)) and s == round(s)
    near_int = not s_int and abs(s - round(s.real)) < _NEAR_INT
    if method == "auto" and not terminating and near_int:
        # the series is still fast here and avoids interpolation
        near |= z <= 0.95
    terms = 0
    if np.any(near):
        v, e, n = _series(a, b, c, z[near], tol)
        out[near], err[near] = v, e
        terms = max(terms, n)
    far = ~near
    if np.any(far):
        if s_int:
            m = int(round(s))
            if m >= 0:
                v, e, n = _log_case(a, b, m, w[far], tol)
            else:
                # Euler's transformation flips the sign of c - a - b
                v, e, n = _log_case(c - a, c - b, -m, w[far], tol)
                scale = w[far] ** m
                v, e = v * scale, e * scale
        elif near_int:
            v, e, n = _near_integer(a, b, c, w[far], tol)
        else:
            v, e, n = _connection(a, b, c, w[far], tol)
        out[far], err[far] = v, e
        terms = max(terms, n)
    return out, err, terms


def hyp2f1(a, b, c, z, *, one_minus_z=None, tol=1e-15):
    """Vectorised F(a, b; c; z) for z in [0, 1].

    ``one_minus_z`` may be supplied when the caller can form ``1 - z``
    without cancellation; it is then used in the connection formulas.
    ``z = 1`` is accepted when ``Re(c - a - b) > 0``.
    """
    value, _, _ = _hyp2f1_core(a, b, c, z, one_minus_z, tol)
    if np.ndim(z) == 0:
        return value[()]
    return value


def gauss_2f1(params: HypergeometricParams, tol: float = 1e-15, method: str = "auto") -> EvalResult:
    """Evaluate F(a, b; c; z) for a single z in [0, 1).

    ``method`` forces the raw series (``"series"``) or the connection
    formulas (``"transform"``); the default picks by ``z``.
    """
    z = float(params.z)
    if not 0.0 <= z < 1.0:
        raise DomainError(f"2F1 argument must lie in [0, 1), got {z!r}")
    if tol <= 0:
        raise DomainError("tol must be positive")
    value, err, n = _hyp2f1_core(params.a, params.b, params.c, np.array([z]), tol=tol, method=method)
    v = complex(value[0])
    if not np.isfinite(v.real) or not np.isfinite(v.imag):
        raise NonConvergence(f"2F1 evaluation produced a non-finite value at z={z}")
    if isinstance(value[0], float) or value.dtype == float:
        v = complex(v.real, 0.0)
    return EvalResult(v, float(err[0]), int(n))
