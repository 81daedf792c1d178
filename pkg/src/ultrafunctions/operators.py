"""Extension of operators to a space by canonical extension of their output.

``F~(u)`` is the canonical extension of ``F(u)``: the space element that
pairs with every ``v`` in the space exactly as ``F(u)`` does.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import CapabilityError, ValidationError
from .extension import (FiniteCombination, IntegralAgainst, PointMass, canonical_extend,
                        canonical_extend_frame)
from .families import EvaluableFunction, from_callable
from .space import FunctionSpace, Ultrafunction, require_same_space

RawOperator = Callable[[Ultrafunction], object]


def as_functional(space: FunctionSpace, out):
    """Interpret a raw operator output as something canonical extension accepts."""
    if isinstance(out, (IntegralAgainst, PointMass, FiniteCombination)):
        return out
    if isinstance(out, Ultrafunction):
        require_same_space(space, out)
        return out
    if isinstance(out, EvaluableFunction):
        return IntegralAgainst(out)
    if callable(out):
        return IntegralAgainst(from_callable(out, "operator-output", real=False))
    raise ValidationError(f"operator output {out!r} is neither a function nor a functional")


@dataclass(frozen=True, eq=False)
class OperatorExtension:
    source_space: FunctionSpace
    raw_operator: RawOperator
    linear: bool = False
    name: str = "operator"
    matrix: np.ndarray | None = field(default=None, repr=False)

    def apply_raw(self, u: Ultrafunction) -> Ultrafunction:
        """Canonical extension of ``F(u)``, computed without the cached matrix."""
        require_same_space(self.source_space, u)
        out = as_functional(self.source_space, self.raw_operator(u))
        if isinstance(out, Ultrafunction):
            return out
        return canonical_extend(self.source_space, out)

    def __call__(self, u: Ultrafunction) -> Ultrafunction:
        if self.matrix is not None:
            require_same_space(self.source_space, u)
            return Ultrafunction(self.source_space, self.matrix @ u.coefficients)
        return self.apply_raw(u)

    def apply_frame(self, frame, u: Ultrafunction, form: str = "sigma") -> Ultrafunction:
        """Same extension written through a frame, e.g. ``sum [int F(u) delta_q] sigma_q``."""
        out = as_functional(self.source_space, self.raw_operator(u))
        if isinstance(out, Ultrafunction):
            out = IntegralAgainst(from_callable(out.evaluate, "member", real=False))
        return canonical_extend_frame(frame, out, form)


def extend_operator(space: FunctionSpace, F: RawOperator, linear: bool = False,
                    name: str = "operator") -> OperatorExtension:
    """Wrap ``F`` as an operator on the space; linear operators get a cached matrix."""
    ext = OperatorExtension(space, F, linear, name)
    if not linear:
        return ext
    cols = [ext.apply_raw(space.basis(j)).coefficients for j in range(space.dimension)]
    M = np.column_stack(cols)
    if np.iscomplexobj(M) and not np.any(M.imag):
        M = np.ascontiguousarray(M.real)
    M.setflags(write=False)
    return OperatorExtension(space, F, linear, name, M)


# ---------------------------------------------------------------- built-in raw operators

def identity_operator(u: Ultrafunction):
    return u


def square_operator(u: Ultrafunction):
    return lambda x: u.evaluate(x) ** 2


def multiplication_by_x(u: Ultrafunction):
    return lambda x: x * u.evaluate(x)


def derivative_operator(u: Ultrafunction):
    return lambda x: u.derivative_values(x)


BUILTIN_OPERATORS: dict[str, tuple[RawOperator, bool]] = {
    "identity": (identity_operator, True),
    "square": (square_operator, False),
    "multiplication_by_x": (multiplication_by_x, True),
    "derivative": (derivative_operator, True),
}


# ---------------------------------------------------------------- derivative

def _require_derivatives(space: FunctionSpace) -> None:
    missing = [g.name for g in space.generators if g.derivative is None]
    if missing:
        raise CapabilityError("derivative needs every generator to carry a derivative; "
                              f"missing for {', '.join(missing)}")


def derivative_matrix(space: FunctionSpace) -> np.ndarray:
    """Galerkin matrix ``M[k, j] = int e_j' e_k`` of the generalized derivative."""
    _require_derivatives(space)
    dB = space.eval_basis_derivative(space.rule.nodes)
    Mt = (dB * space.rule.weights) @ space.basis_values.T
    if not space.is_real:
        return np.linalg.solve(space.gram(conjugate=False).T, Mt.T)
    return Mt.T


def derivative(space: FunctionSpace, u: Ultrafunction) -> Ultrafunction:
    """Generalized derivative: exact ``u'`` from the generators, projected back onto the space."""
    require_same_space(space, u)
    return Ultrafunction(space, derivative_matrix(space) @ u.coefficients)
