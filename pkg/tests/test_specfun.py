import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from hyperfund.errors import DomainError, PoleError
from hyperfund.specfun import (HypergeometricParams, bessel_i0, bessel_j0, digamma, gauss_2f1, hyp2f1,
                               ln_gamma_complex)


def F(a, b, c, z, **kw):
    return gauss_2f1(HypergeometricParams(a, b, c, z), **kw).value


class TestGauss2F1:
    def test_origin_is_one(self):
        assert F(0.3, 0.7, 1.5, 0.0) == 1.0

    def test_complete_elliptic_value(self):
        # F(1/2, 1/2; 1; 1/2) = 2 K(1/2) / pi
        assert abs(F(0.5, 0.5, 1.0, 0.5) - 2.0 / math.pi * float(mp.ellipk(0.5))) < 1e-14

    def test_log_closed_form(self):
        # z F(1, 1; 2; z) = -log(1 - z)
        for z in (0.1, 0.6, 0.95, 0.999):
            assert abs(z * F(1.0, 1.0, 2.0, z).real + math.log1p(-z)) < 1e-13

    def test_terminating(self):
        # F(-2, b; c; z) is a quadratic
        b, c, z = 0.7, 1.3, 0.8
        expect = 1 - 2 * b / c * z + b * (b + 1) / (c * (c + 1)) * z * z
        assert abs(F(-2.0, b, c, z).real - expect) < 1e-14

    def test_real_parameters_give_zero_imaginary_part(self):
        assert F(0.25, 0.25, 1.0, 0.9).imag == 0.0

    @pytest.mark.parametrize("z", [0.55, 0.8, 0.99, 0.999999])
    def test_logarithmic_cases(self, z):
        for a, b, c in ((0.5, 0.5, 1.0), (-0.5, 0.5, 1.0), (0.3, 0.2, 1.5), (0.25, 0.75, 3.0)):
            ref = oracles.hyp2f1(a, b, c, z)
            assert abs(F(a, b, c, z) - ref) <= 1e-12 * max(1.0, abs(ref))

    def test_near_integer_gap(self):
        a, b = 1.3410803739342891, 0.6799493074900991
        for c in (a + b + 1 + 2e-15, a + b + 1 + 1e-5, a + b - 1e-4):
            for z in (0.6, 0.96, 0.995):
                ref = oracles.hyp2f1(a, b, c, z)
                assert abs(F(a, b, c, z) - ref) <= 1e-10 * max(1.0, abs(ref))

    @pytest.mark.parametrize("M", [1e-7, 4e-4, 0.3, 2.0, 5.0])
    def test_complex_kernel_parameters(self, M):
        a = complex(0.5, M)
        for z in (0.2, 0.7, 0.999):
            ref = oracles.hyp2f1(a, a, 1.0, z)
            assert abs(F(a, a, 1.0, z) - ref) <= 1e-11 * max(1.0, abs(ref))

    def test_methods_agree_in_overlap(self):
        p = HypergeometricParams(0.3, 0.45, 1.0, 0.52)
        assert abs(gauss_2f1(p, method="series").value - gauss_2f1(p, method="transform").value) < 1e-13

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            F(0.5, 0.5, 1.0, 1.0)
        with pytest.raises(DomainError):
            F(0.5, 0.5, 1.0, -0.1)
        with pytest.raises(DomainError):
            F(0.5, 0.5, -2.0, 0.3)

    def test_vector_form_accepts_unit_argument(self):
        # Gauss summation: F(a, b; c; 1) = G(c) G(c-a-b) / (G(c-a) G(c-b))
        a, b, c = 0.2, 0.3, 1.5
        expect = math.gamma(c) * math.gamma(c - a - b) / (math.gamma(c - a) * math.gamma(c - b))
        assert abs(hyp2f1(a, b, c, 1.0) - expect) < 1e-13

    def test_error_estimate_reported(self):
        res = gauss_2f1(HypergeometricParams(0.5, 0.5, 1.0, 0.9))
        assert 0.0 <= res.est_error < 1e-12 and res.terms_used > 0


@given(a=st.floats(-1.5, 2.5), b=st.floats(-1.5, 2.5), c=st.floats(0.3, 3.5), z=st.floats(0.0, 0.99))
def test_matches_extended_precision(a, b, c, z):
    ref = oracles.hyp2f1(a, b, c, z)
    assert abs(F(a, b, c, z) - ref) <= 1e-10 * max(1.0, abs(ref))


@given(a=st.floats(-1.0, 1.5), b=st.floats(-1.0, 1.5), c=st.floats(0.5, 3.0), z=st.floats(0.0, 0.95))
def test_euler_transformation(a, b, c, z):
    lhs = F(a, b, c, z)
    rhs = (1 - z) ** (c - a - b) * F(c - a, c - b, c, z)
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))


@given(a=st.floats(-1.0, 1.5), b=st.floats(-1.0, 1.5), c=st.floats(0.5, 3.0), z=st.floats(0.0, 0.9))
def test_symmetric_in_numerator_parameters(a, b, c, z):
    assert abs(F(a, b, c, z) - F(b, a, c, z)) <= 1e-12 * max(1.0, abs(F(a, b, c, z)))


class TestGamma:
    @pytest.mark.parametrize("s", [0.5, 3.7, -2.5, complex(0.5, 2.0), complex(-3.2, 0.4), complex(1.0, -30.0)])
    def test_against_mpmath(self, s):
        assert abs(ln_gamma_complex(s) - complex(mp.loggamma(s))) < 1e-13

    def test_pole(self):
        with pytest.raises(PoleError):
            ln_gamma_complex(-3)

    def test_digamma(self):
        for x in (0.25, 1.0, 7.5, -0.5):
            assert abs(digamma(x) - float(mp.digamma(x))) < 1e-13
        assert abs(digamma(1.0) + 0.5772156649015329) < 1e-15


class TestBessel:
    def test_values(self):
        assert bessel_j0(0.0) == 1.0 and bessel_i0(0.0) == 1.0
        # first zero of J0
        assert abs(bessel_j0(2.404825557695773)) < 1e-15

    @given(x=st.floats(-30.0, 30.0))
    def test_against_mpmath(self, x):
        assert abs(bessel_j0(x) - float(mp.besselj(0, x))) <= 1e-12
        ref = float(mp.besseli(0, x))
        assert abs(bessel_i0(x) - ref) <= 1e-12 * ref


@pytest.mark.parametrize("tiny", [2.2250738585e-313, 1e-19, 1e-12])
@pytest.mark.parametrize("z", [0.75, 0.999])
def test_tiny_numerator_parameter(tiny, z):
    ref = complex(oracles.hyp2f1(1.0, tiny, 1.0, z)).real
    assert abs(F(1.0, tiny, 1.0, z) - ref) <= 1e-13
    assert abs(F(tiny, 1.0, 1.0, z) - ref) <= 1e-13
