"""Distance functions and transform kernels for each operator family.

Every family is an operator ``d_tt - a(t)^2 Laplacian + c(t)`` whose
light cone is traced by the distance function ``phi`` with
``|phi'| = a``.  The kernel ``K(t; r, b)`` is evaluated on the closed
cone ``0 <= r <= |phi(t) - phi(b)|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConeBoundary, DomainError
from .specfun import bessel_i0, bessel_j0, hyp2f1

FAMILY_TAGS = (
    "KleinGordonReal",
    "KleinGordonImag",
    "Tricomi",
    "DeSitterWave",
    "AntiDeSitterWave",
    "EinsteinDeSitter",
    "DeSitterKG",
)


@dataclass(frozen=True)
class OperatorFamily:
    """Tagged operator family.

    ``m`` is the Minkowski Klein-Gordon mass, ``k`` the Tricomi parameter
    (``t**(2k)`` coefficient), ``m_int`` the Einstein-de Sitter index, and
    ``M`` the curved mass of the de Sitter Klein-Gordon kernels.  For
    ``DeSitterKG`` the ``large`` sign (imaginary exponent ``iM``) solves
    ``u_tt - e^{-2t} u_xx + M^2 u = f`` and ``small`` (real exponent
    ``-M``) solves the same with ``-M^2 u``.
    """

    tag: str
    m: float = 0.0
    k: float = 0.0
    m_int: int = 1
    M: float = 0.0
    mass_sign: str = "large"

    def __post_init__(self):
        if self.tag not in FAMILY_TAGS:
            raise DomainError(f"unknown operator family {self.tag!r}")
        if self.m < 0 or self.M < 0:
            raise DomainError("masses must be nonnegative")
        if self.tag == "Tricomi" and not self.k > 0:
            raise DomainError("Tricomi parameter k must be positive")
        if self.tag == "EinsteinDeSitter" and (int(self.m_int) != self.m_int or self.m_int < 1):
            raise DomainError("Einstein-de Sitter index must be a positive integer")
        if self.mass_sign not in ("large", "small"):
            raise DomainError("mass_sign must be 'large' or 'small'")

    # -- constructors -------------------------------------------------------
    @classmethod
    def klein_gordon(cls, m=1.0, imaginary=False):
        return cls("KleinGordonImag" if imaginary else "KleinGordonReal", m=float(m))

    @classmethod
    def tricomi(cls, k):
        return cls("Tricomi", k=float(k))

    @classmethod
    def de_sitter(cls):
        return cls("DeSitterWave")

    @classmethod
    def anti_de_sitter(cls):
        return cls("AntiDeSitterWave")

    @classmethod
    def einstein_de_sitter(cls, m_int=1):
        return cls("EinsteinDeSitter", m_int=int(m_int))

    @classmethod
    def de_sitter_kg(cls, M, mass_sign="large"):
        return cls("DeSitterKG", M=float(M), mass_sign=mass_sign)

    # -- derived constants --------------------------------------------------
    @property
    def gamma(self) -> float:
        """Hypergeometric exponent k/(2k+2) of the Tricomi kernel."""
        return self.k / (2.0 * self.k + 2.0)

    @property
    def c_k(self) -> float:
        k = self.k
        return (k + 1.0) ** (-k / (k + 1.0)) * 2.0 ** (-1.0 / (k + 1.0))

    @property
    def l_exponent(self) -> float:
        """Exponent l of the ``t**l`` coefficient (Tricomi and EdeS)."""
        if self.tag == "EinsteinDeSitter":
            return -4.0 * self.m_int / (2.0 * self.m_int + 1.0)
        return 2.0 * self.k

    @property
    def multiplier(self) -> float:
        """Prefactor in front of the double integral.

        The Klein-Gordon representations carry none; the hypergeometric
        families carry 2.  The Einstein-de Sitter kernel below already
        contains its factor 2, matching the ``1/18`` polynomial form.
        """
        if self.tag in ("KleinGordonReal", "KleinGordonImag", "EinsteinDeSitter"):
            return 1.0
        return 2.0

    @property
    def is_complex(self) -> bool:
        return self.tag == "DeSitterKG" and self.mass_sign == "large" and self.M != 0.0

    @property
    def t_min(self) -> float:
        """Lower end of the time domain (-inf where any real t is allowed)."""
        return 0.0 if self.tag in ("Tricomi", "EinsteinDeSitter") else -math.inf

    @property
    def default_t0(self) -> float:
        return 0.0

    @property
    def decreasing(self) -> bool:
        return self.tag in ("DeSitterWave", "DeSitterKG")

    def speed_squared(self, t):
        """Coefficient ``a(t)^2`` of the Laplacian."""
        t = np.asarray(t, dtype=float)
        if self.tag in ("KleinGordonReal", "KleinGordonImag"):
            return np.ones_like(t)
        if self.tag == "Tricomi":
            return t ** (2.0 * self.k)
        if self.tag in ("DeSitterWave", "DeSitterKG"):
            return np.exp(-2.0 * t)
        if self.tag == "AntiDeSitterWave":
            return np.exp(2.0 * t)
        return t ** self.l_exponent

    def mass_term(self) -> float:
        """Constant ``c`` in ``V'' + c V = 0`` (the time-ODE of the family)."""
        if self.tag == "KleinGordonReal":
            return self.m ** 2
        if self.tag == "KleinGordonImag":
            return -self.m ** 2
        if self.tag == "DeSitterKG":
            return self.M ** 2 if self.mass_sign == "large" else -self.M ** 2
        return 0.0

    def label(self) -> str:
        if self.tag in ("KleinGordonReal", "KleinGordonImag"):
            return f"{self.tag}(m={self.m:g})"
        if self.tag == "Tricomi":
            return f"Tricomi(k={self.k:g})"
        if self.tag == "EinsteinDeSitter":
            return f"EinsteinDeSitter(m={self.m_int})"
        if self.tag == "DeSitterKG":
            return f"DeSitterKG(M={self.M:g},{self.mass_sign})"
        return self.tag

    def to_dict(self) -> dict:
        return {"tag": self.tag, "m": self.m, "k": self.k, "m_int": self.m_int,
                "M": self.M, "mass_sign": self.mass_sign}


def _check_time(family: OperatorFamily, t):
    if np.any(np.asarray(t) < family.t_min):
        raise DomainError(f"{family.label()} is defined for t >= {family.t_min:g}")


def phi(family: OperatorFamily, t):
    """Distance function of the family."""
    _check_time(family, t)
    t = np.asarray(t, dtype=float)
    if family.tag in ("KleinGordonReal", "KleinGordonImag"):
        out = t
    elif family.tag == "Tricomi":
        out = t ** (family.k + 1.0) / (family.k + 1.0)
    elif family.tag in ("DeSitterWave", "DeSitterKG"):
        out = np.exp(-t)
    elif family.tag == "AntiDeSitterWave":
        out = np.exp(t)
    else:
        q = 2.0 * family.m_int + 1.0
        out = q * t ** (1.0 / q)
    return out[()] if out.ndim == 0 else out


def cone_radius(family: OperatorFamily, t, b):
    return np.abs(phi(family, t) - phi(family, b))


def kernel(family: OperatorFamily, t, r, b):
    """Kernel ``K(t; r, b)`` of the family, vectorised over ``r`` and ``b``.

    The large-mass de Sitter Klein-Gordon kernel is computed in complex
    arithmetic; Euler's transformation shows it equals its own conjugate,
    so its imaginary part is rounding only.
    """
    _check_time(family, t)
    _check_time(family, b)
    r = np.asarray(r, dtype=float)
    radius = cone_radius(family, t, b)
    if np.any(r < 0) or np.any(r > radius * (1.0 + 1e-12) + 1e-300):
        raise ConeBoundary(f"r outside the cone 0 <= r <= |phi(t) - phi(b)| for {family.label()}")
    return kernel_from_gap(family, t, np.maximum(radius - r, 0.0), b)


def kernel_from_gap(family: OperatorFamily, t, gap, b):
    """Kernel evaluated at ``r = |phi(t) - phi(b)| - gap``.

    Working from the distance to the cone keeps ``(phi_t - phi_b)^2 - r^2``
    and ``(phi_t + phi_b)^2 - r^2`` exact where they are small, which is
    where the hypergeometric kernels are singular.
    """
    gap = np.asarray(gap, dtype=float)
    b = np.asarray(b, dtype=float)
    scalar = gap.ndim == 0 and b.ndim == 0
    gap, b = np.broadcast_arrays(np.atleast_1d(gap), np.atleast_1d(b))
    pt, pb = phi(family, t), phi(family, b)
    radius = np.abs(pt - pb)
    r = np.maximum(radius - gap, 0.0)
    tag = family.tag

    if tag in ("KleinGordonReal", "KleinGordonImag"):
        arg = family.m * np.sqrt(gap * (2.0 * radius - gap))
        out = bessel_j0(arg) if tag == "KleinGordonReal" else bessel_i0(arg)
        return out[0] if scalar else out

    # n = (phi_t - phi_b)^2 - r^2, d = (phi_t + phi_b)^2 - r^2
    n = gap * (radius + r)
    d = (2.0 * np.minimum(pt, pb) + gap) * (pt + pb + r)
    if tag == "EinsteinDeSitter":
        mi = family.m_int
        q = 2.0 * mi + 1.0
        c_m = q ** (-2.0 * mi) * 2.0 ** (-q)
        out = np.zeros(gap.shape)
        for j in range(mi + 1):
            out = out + math.comb(mi, j) ** 2 * d ** (mi - j) * n ** j
        out = 2.0 * c_m * out
        return out[0] if scalar else out

    zeta = np.clip(n / d, 0.0, 1.0)
    one_minus = 4.0 * pt * pb / d
    if tag == "Tricomi":
        g = family.gamma
        out = family.c_k * d ** (-g) * hyp2f1(g, g, 1.0, zeta, one_minus_z=one_minus)
    elif tag in ("DeSitterWave", "AntiDeSitterWave") or family.M == 0.0:
        out = d ** -0.5 * hyp2f1(0.5, 0.5, 1.0, zeta, one_minus_z=one_minus)
    elif family.mass_sign == "large":
        M = family.M
        a = 0.5 + 1j * M
        out = d ** -0.5 * np.exp(1j * M * np.log(one_minus)) * hyp2f1(a, a, 1.0, zeta, one_minus_z=one_minus)
    else:
        M = family.M
        a = 0.5 - M
        out = d ** -0.5 * one_minus ** (-M) * hyp2f1(a, a, 1.0, zeta, one_minus_z=one_minus)
    return out[0] if scalar else out


def kernel_integral_identity_rhs(family: OperatorFamily, t, b):
    """Closed-form value of ``multiplier * int_0^{|phi(t)-phi(b)|} K dr``.

    This is the Wronskian ratio of the family's time ODE, written out
    for the constant coefficients every family here has.
    """
    c = family.mass_term()
    s = t - b
    if c > 0:
        w = math.sqrt(c)
        return math.sin(w * s) / w
    if c < 0:
        w = math.sqrt(-c)
        return math.sinh(w * s) / w
    return s


# -- de Sitter Cauchy kernels ------------------------------------------------

_FD_SERIES_TERMS = 60


def _f_diff_over_zeta(zeta):
    """(F(-1/2,1/2;1;z) - F(1/2,1/2;1;z)) / z without cancellation at small z."""
    zeta = np.asarray(zeta, dtype=float)
    out = np.empty_like(zeta)
    small = zeta < 0.5
    if np.any(small):
        z = zeta[small]
        # coefficient of z^n in each series: (a)_n (1/2)_n / (n!)^2
        acc = np.zeros_like(z)
        p_minus, p_plus, p_half, fact = 1.0, 1.0, 1.0, 1.0
        zp = np.ones_like(z)
        for n in range(1, _FD_SERIES_TERMS):
            p_minus *= -0.5 + n - 1
            p_plus *= 0.5 + n - 1
            p_half *= 0.5 + n - 1
            fact *= n
            coef = (p_minus - p_plus) * p_half / (fact * fact)
            acc = acc + coef * zp
            zp = zp * z
        out[small] = acc
    big = ~small
    if np.any(big):
        z = zeta[big]
        out[big] = (hyp2f1(-0.5, 0.5, 1.0, z) - hyp2f1(0.5, 0.5, 1.0, z)) / z
    return out


def _desitter_cauchy_vars(z, t):
    z = np.asarray(z, dtype=float)
    if not t > 0:
        raise DomainError("t must be positive")
    e = math.exp(-t)
    front = -math.expm1(-t)
    if np.any(z < 0) or np.any(z > front * (1.0 + 1e-12)):
        raise ConeBoundary("z outside [0, 1 - e^{-t}]")
    z = np.minimum(z, front)
    d = (1.0 + e) ** 2 - z * z
    n = (front - z) * (front + z)
    return z, front, d, n, 4.0 * e / d


def kernel_k0_desitter(z, t):
    """K0(z, t) = -dE/db at b = 0 for the de Sitter kernel.

    The displayed closed form is a 0/0 quotient at the light cone
    ``z = 1 - e^{-t}``.  Writing ``1 - e^{-2t} + z^2 = 2 phi - N`` with
    ``N = phi^2 - z^2`` cancels the common factor ``N`` exactly, giving
    ``[phi/D * (F(-1/2,1/2;1;x) - F(1/2,1/2;1;x))/x - F(-1/2,1/2;1;x)/2] / sqrt(D)``
    with ``x = N/D``.
    """
    scalar = np.ndim(z) == 0
    z, front, d, n, one_minus = _desitter_cauchy_vars(np.atleast_1d(z), t)
    x = np.clip(n / d, 0.0, 1.0)
    f2 = hyp2f1(-0.5, 0.5, 1.0, x, one_minus_z=one_minus)
    out = (front / d * _f_diff_over_zeta(x) - 0.5 * f2) / np.sqrt(d)
    return out[0] if scalar else out


def kernel_k0_desitter_displayed(z, t):
    """K0 exactly as displayed (quotient form); loses accuracy near the cone."""
    z = np.asarray(z, dtype=float)
    e = math.exp(-t)
    d = (1.0 + e) ** 2 - z * z
    n = (1.0 - e) ** 2 - z * z
    x = n / d
    bracket = (e - 1.0) * hyp2f1(0.5, 0.5, 1.0, x) + 0.5 * (1.0 - e * e + z * z) * hyp2f1(-0.5, 0.5, 1.0, x)
    return bracket / (n * np.sqrt(d))


def kernel_k1_desitter(z, t):
    """K1(z, t) = E(z, t; 0, 0) for the de Sitter kernel."""
    scalar = np.ndim(z) == 0
    z, front, d, n, one_minus = _desitter_cauchy_vars(np.atleast_1d(z), t)
    x = np.clip(n / d, 0.0, 1.0)
    out = d ** -0.5 * hyp2f1(0.5, 0.5, 1.0, x, one_minus_z=one_minus)
    return out[0] if scalar else out


def desitter_e(x, t, b):
    """The two-point function E(x, t; 0, b) of the de Sitter wave kernel."""
    x = np.asarray(x, dtype=float)
    et, eb = math.exp(-t), math.exp(-b)
    d = (eb + et) ** 2 - x * x
    n = (et - eb) ** 2 - x * x
    return d ** -0.5 * hyp2f1(0.5, 0.5, 1.0, np.clip(n / d, 0.0, 1.0), one_minus_z=4.0 * et * eb / d)
