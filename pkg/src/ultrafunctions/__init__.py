"""Finite-dimensional function spaces with reproducing kernels, point frames,
canonical extensions of functionals and operators, and refinement chains."""

__version__ = "0.1.0"

from .errors import (CapabilityError, ChainError, ConfigError, DegenerateSpaceError,
                     DependentPointsError, DivergentPairingError, DomainError, IntegrationError,
                     NotAMemberError, NotPositiveError, NumericError, ResolutionError,
                     SpaceMismatchError, UltrafunctionError, ValidationError)
from .quadrature import (CLOSED_INTERVAL, TRUNCATED_LINE, Domain, QuadratureRule, build_rule,
                         inner_product, integrate, norm)
from .families import (EvaluableFunction, abs_power, bspline, clamped_knots, from_callable,
                       gauss_poly, hermite, hermite_combination, hermite_function, indicator,
                       legendre, monomial, monomials, plane_wave, polynomial, trig)
from .space import (FunctionSpace, GeneratorSet, Ultrafunction, build_space, lincomb,
                    member_embed, project)
from .kernels import (PointFrame, build_frame, delta_at, frame_residuals,
                      select_independent_points)
from .extension import (FiniteCombination, IntegralAgainst, PointMass, TestSubspace,
                        canonical_extend, canonical_extend_frame, d_equivalent,
                        embed_distribution, make_test_subspace, pair, pairing_residuals)
from .operators import OperatorExtension, derivative, derivative_matrix, extend_operator
from .fourier import (FourierSpace, build_fourier_space, fourier, fourier_close,
                      fourier_frame_checks, fourier_quadrature, inverse_fourier)
from .refinement import (ChainResult, DeltaDiagonal, ExtensionValue, RefinementChain,
                         StageReport, WeightSum, build_chain, run_chain)
