import math

import numpy as np
import pytest

from ultrafunctions import (CapabilityError, IntegralAgainst, Ultrafunction, abs_power,
                            build_frame, canonical_extend, derivative, derivative_matrix,
                            extend_operator, indicator, member_embed, monomial, monomials,
                            select_independent_points, trig)
from ultrafunctions.operators import (identity_operator, multiplication_by_x, square_operator)

from conftest import interval, space_of


def test_identity_extension(p1, rng):
    ext = extend_operator(p1, identity_operator, linear=True)
    np.testing.assert_allclose(ext.matrix, np.eye(2), atol=1e-14)
    u = Ultrafunction(p1, rng.standard_normal(2))
    np.testing.assert_allclose(ext(u).coefficients, u.coefficients, atol=1e-14)


def test_square_of_x_on_p1(p1):
    ext = extend_operator(p1, square_operator)
    out = ext(member_embed(p1, monomial(1)))
    np.testing.assert_allclose(out(np.linspace(-1, 1, 5)), 1 / 3, atol=1e-14)
    assert ext.matrix is None


def test_multiplication_by_x_on_constants():
    sp = space_of(monomials(0))
    ext = extend_operator(sp, multiplication_by_x, linear=True)
    assert abs(ext(sp.basis(0)).coefficients[0]) <= 1e-15


def test_cached_matrix_is_galerkin_matrix(rng):
    sp = space_of(monomials(5))
    ext = extend_operator(sp, multiplication_by_x, linear=True)
    B, w = sp.basis_values, sp.rule.weights
    galerkin = (B * w) @ (B * sp.rule.nodes).T
    np.testing.assert_allclose(ext.matrix, galerkin, atol=1e-10)
    for j in range(sp.dimension):
        np.testing.assert_allclose(ext.apply_raw(sp.basis(j)).coefficients, ext.matrix[:, j], atol=1e-10)
    # pairing identity: int F~(u) v = int F(u) v for basis v
    u = Ultrafunction(sp, rng.standard_normal(sp.dimension))
    lhs = ext(u).coefficients
    rhs = (B * w) @ (sp.rule.nodes * u.values)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_frame_form_of_operator(rng):
    sp = space_of(monomials(4))
    frame = build_frame(sp, select_independent_points(sp, np.linspace(-1, 1, 17)))
    ext = extend_operator(sp, square_operator)
    u = Ultrafunction(sp, rng.standard_normal(sp.dimension))
    ref = ext(u).coefficients
    for form in ("sigma", "theta", "delta"):
        np.testing.assert_allclose(ext.apply_frame(frame, u, form).coefficients, ref, atol=1e-9)


def test_divergent_output_propagates(p1):
    from ultrafunctions import DivergentPairingError
    ext = extend_operator(p1, lambda u: IntegralAgainst(abs_power(-1.0), singular_points=(0.0,)))
    with pytest.raises(DivergentPairingError):
        ext(p1.basis(0))


def test_derivative_sin_to_cos():
    d = interval(-math.pi, math.pi)
    sp = space_of(trig(1, d, constant=False), d, panels=8, order=16)
    sin = member_embed(sp, np.sin)
    cos = member_embed(sp, np.cos)
    np.testing.assert_allclose(derivative(sp, sin).coefficients, cos.coefficients, atol=1e-12)


def test_derivative_closed_polynomials():
    sp = space_of(monomials(2))
    u = member_embed(sp, monomial(2))
    Du = derivative(sp, u)
    np.testing.assert_allclose(Du(np.linspace(-1, 1, 9)), 2 * np.linspace(-1, 1, 9), atol=1e-12)


def test_derivative_projects_out_of_span():
    sp = space_of([monomial(2)])
    Du = derivative(sp, member_embed(sp, monomial(2)))
    assert np.max(np.abs(Du.coefficients)) <= 1e-12


def test_weak_identity_on_non_closed_space(rng):
    d = interval(0.0, 1.0)
    sp = space_of(trig(3, d), d, panels=8, order=16)
    u = Ultrafunction(sp, rng.standard_normal(sp.dimension))
    Du = derivative(sp, u)
    B, w = sp.basis_values, sp.rule.weights
    np.testing.assert_allclose(Du.coefficients, (B * w) @ u.derivative_values(sp.rule.nodes), atol=1e-9)
    M = derivative_matrix(sp)
    np.testing.assert_allclose(M @ u.coefficients, Du.coefficients, atol=1e-13)


def test_derivative_needs_derivative_evaluators():
    sp = space_of([monomial(0), indicator(-0.5, 0.5)], panels=8, order=16)
    with pytest.raises(CapabilityError):
        derivative(sp, sp.basis(0))
