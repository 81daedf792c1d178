"""Canonical extension of functionals and embedding of distributions.

A functional ``T`` is represented by how it pairs with functions of the
space. Its canonical extension is the unique space element ``w`` with
``int w v = <T, v>`` for every ``v`` in the space. For integrals against
a function ``f`` this is the orthogonal projection of ``f``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.linalg import null_space

from .errors import (DivergentPairingError, IntegrationError, SpaceMismatchError,
                     ValidationError)
from .families import EvaluableFunction, as_evaluable
from .quadrature import QuadratureRule, node_values
from .space import FunctionSpace, Ultrafunction, compact_generator_indices, member_embed

DIVERGENCE_FACTOR = 1e3
COARSE_LEVEL_DROP = 4
D_EQUIVALENCE_TOL = 1e-9
ENDPOINT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class IntegralAgainst:
    f: EvaluableFunction
    singular_points: tuple[float, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "f", as_evaluable(self.f))
        object.__setattr__(self, "singular_points",
                           tuple(sorted(float(s) for s in self.singular_points)))
        if not self.name:
            object.__setattr__(self, "name", f"integral_against[{self.f.name}]")


@dataclass(frozen=True, eq=False)
class PointMass:
    q: float
    scale: complex = 1.0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "q", float(self.q))
        if not self.name:
            object.__setattr__(self, "name", f"point_mass[{self.q!r}]")


@dataclass(frozen=True, eq=False)
class FiniteCombination:
    terms: tuple[tuple[complex, "Functional"], ...]
    name: str = "combination"

    def __post_init__(self):
        terms = tuple((a, T) for a, T in self.terms)
        if not terms:
            raise ValidationError("a combination needs at least one term")
        object.__setattr__(self, "terms", terms)


Functional = Union[IntegralAgainst, PointMass, FiniteCombination]


def _pairing_rules(rule: QuadratureRule, singular: set[float]) -> tuple[QuadratureRule, QuadratureRule]:
    """A (fine, coarse) pair of rules; their disagreement flags divergent pairings."""
    if singular:
        for s in singular:
            rule.domain.check(s, "singular point")
        fine = rule.with_singular_points(singular)
        coarse = rule.with_singular_points(
            singular, grading_levels=max(8, fine.grading_levels - COARSE_LEVEL_DROP))
        return fine, coarse
    return rule.with_singular_points((), panels=2 * rule.panels), rule


def _integral_pairings(space: FunctionSpace, T: IntegralAgainst, coeffs: np.ndarray) -> np.ndarray:
    fine, coarse = _pairing_rules(space.rule, set(T.singular_points))
    results = []
    for r in (fine, coarse):
        vals = coeffs.T @ space.eval_basis(r.nodes)
        try:
            fv = node_values(r, T.f(r.nodes))
        except IntegrationError as exc:
            raise DivergentPairingError(f"{T.name}: {exc}") from exc
        results.append(vals @ (r.weights * fv))
    good, rough = results
    gap = np.abs(good - rough)
    allowed = DIVERGENCE_FACTOR * fine.declared_tolerance * np.maximum(1.0, np.abs(good))
    if not np.all(np.isfinite(good)) or np.any(gap > allowed):
        worst = float(np.max(gap)) if np.all(np.isfinite(gap)) else math.inf
        raise DivergentPairingError(
            f"{T.name}: pairing does not converge under panel grading (change {worst:.3e})")
    return good


def pair(space: FunctionSpace, T: Functional, coeffs: np.ndarray) -> np.ndarray:
    """``<T, v_k>`` for the space elements whose orthonormal coefficients are the columns of ``coeffs``.

    Pairings are bilinear; nothing is conjugated.
    """
    coeffs = np.asarray(coeffs)
    if coeffs.ndim == 1:
        return pair(space, T, coeffs[:, None])[0]
    if isinstance(T, PointMass):
        ev = space.eval_basis(np.array([T.q]))[:, 0]
        return T.scale * (coeffs.T @ ev)
    if isinstance(T, IntegralAgainst):
        return _integral_pairings(space, T, coeffs)
    if isinstance(T, FiniteCombination):
        return sum(a * pair(space, sub, coeffs) for a, sub in T.terms)
    raise ValidationError(f"not a functional: {T!r}")


def moments(space: FunctionSpace, T: Functional) -> np.ndarray:
    """``<T, e_j>`` for every orthonormal basis function."""
    out = pair(space, T, np.eye(space.dimension))
    if not np.all(np.isfinite(out)):
        raise DivergentPairingError(f"{getattr(T, 'name', T)}: non-finite pairing with the basis")
    return out


def canonical_extend(space: FunctionSpace, T: Functional) -> Ultrafunction:
    """The unique ``w`` in the space with ``int w e_j = <T, e_j>`` for all ``j``."""
    m = moments(space, T)
    if space.is_real:
        return Ultrafunction(space, m)
    return Ultrafunction(space, np.linalg.solve(space.gram(conjugate=False).T, m))


def canonical_extend_frame(frame, T: Functional, form: str = "sigma") -> Ultrafunction:
    """Canonical extension through a frame.

    ``form`` chooses ``sum <T, delta_q> sigma_q`` ("sigma"),
    ``sum <T, theta_q> theta_q`` ("theta") or ``sum <T, sigma_q> delta_q``
    ("delta"). Each pairing is evaluated on the frame functions themselves.
    """
    space = frame.space
    S, E = frame.sigma_coefficients, frame.E
    if form == "sigma":
        return Ultrafunction(space, S @ pair(space, T, E))
    if form == "theta":
        Th = frame.theta_coefficients
        return Ultrafunction(space, Th @ pair(space, T, Th))
    if form == "delta":
        return Ultrafunction(space, E @ pair(space, T, S))
    raise ValidationError(f"unknown frame form {form!r}")


@dataclass(frozen=True, eq=False)
class TestSubspace:
    """The span of the flagged (compactly supported) generators inside a space."""

    __test__ = False

    space: FunctionSpace
    member_indices: tuple[int, ...]
    basis: np.ndarray = field(repr=False)
    generator_coefficients: np.ndarray = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.basis.shape[1]

    def complement(self) -> np.ndarray:
        """Orthonormal coefficient columns spanning the orthogonal complement in the space."""
        return null_space(self.basis.T)


def make_test_subspace(space: FunctionSpace, member_indices: Sequence[int] | None = None,
                       whole_space: bool = False) -> TestSubspace:
    """Build the test subspace from flagged generators (default: all compact-in-interior ones).

    ``whole_space=True`` takes every orthonormal basis function instead
    (``member_indices`` then refers to basis indices) and skips the
    endpoint check.
    """
    if whole_space:
        I = np.eye(space.dimension)
        return TestSubspace(space, tuple(range(space.dimension)), I, I)
    idx = tuple(compact_generator_indices(space) if member_indices is None else member_indices)
    if not idx:
        raise ValidationError("no generators flagged compact-in-interior")
    gens = [space.generators.generators[i] for i in idx]
    ends = np.array([space.domain.lower, space.domain.upper])
    for g in gens:
        if np.max(np.abs(g(ends))) > ENDPOINT_TOL:
            raise ValidationError(f"test function {g.name} does not vanish at the endpoints")
    C = np.column_stack([member_embed(space, g).coefficients for g in gens])
    U, s, _ = np.linalg.svd(C, full_matrices=False)
    rank = int(np.sum(s > 1e-10 * s[0]))
    return TestSubspace(space, idx, U[:, :rank], C)


def d_equivalent(u: Ultrafunction, v: Ultrafunction, D: TestSubspace,
                 tol: float = D_EQUIVALENCE_TOL) -> bool:
    """Whether ``int (u - v) phi`` vanishes (relative to ``tol``) for every ``phi`` in ``D``."""
    if u.space is not v.space or u.space is not D.space:
        raise SpaceMismatchError("d_equivalent needs u, v and D in one space")
    diff = u.coefficients - v.coefficients
    scale = tol * np.linalg.norm(diff)
    return bool(np.all(np.abs(D.basis.T @ diff) <= scale))


def embed_distribution(space: FunctionSpace, T: Functional, D: TestSubspace) -> Ultrafunction:
    """The representative of ``T`` lying in ``D``: ``sum <T, phi_k> phi_k`` over an orthonormal basis of ``D``."""
    if D.space is not space:
        raise SpaceMismatchError("test subspace belongs to another space")
    t = pair(space, T, D.basis)
    if not np.all(np.isfinite(t)):
        raise DivergentPairingError(f"{getattr(T, 'name', T)}: non-finite pairing")
    return Ultrafunction(space, D.basis @ t)


def pairing_residuals(u: Ultrafunction, T: Functional, D: TestSubspace) -> np.ndarray:
    """``|int u phi_g - <T, phi_g>|`` for each flagged generator ``phi_g``."""
    C = D.generator_coefficients
    lhs = C.T @ u.coefficients
    rhs = pair(D.space, T, C)
    return np.abs(lhs - rhs)
