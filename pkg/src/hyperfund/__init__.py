"""Fundamental solutions of hyperbolic equations by the integral transform method."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .kernels import OperatorFamily, cone_radius, kernel, kernel_integral_identity_rhs, phi
from .quadrature import QuadratureSpec, integrate
from .specfun import EvalResult, HypergeometricParams, bessel_i0, bessel_j0, gauss_2f1, hyp2f1, ln_gamma_complex
from .tails import TailDecomposition, TLinConfig, example_ratio_limit, tail_eval, tlin_bound_check
from .transform import apply_transform, solve_desitter_cauchy, solve_edes_weighted, solve_source_problem
from .verify import (ODECoefficients, ODEPair, ResidualReport, fd_variable_oracle, identity_residual,
                     ode_pair_solve, pde_residual)
from .wavecore import Profile, SolutionField, SourceFamily, dalembert_first_datum, fd_wave_oracle, wave_source_family
