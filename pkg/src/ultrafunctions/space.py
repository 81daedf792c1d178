"""Finite-dimensional function spaces spanned by a generator set.

A space keeps its orthonormal basis in two forms: node values (for
quadrature inner products) and combinations of generators (for exact
evaluation and differentiation anywhere in the domain).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (CapabilityError, DegenerateSpaceError, DomainError, NotAMemberError,
                     ResolutionError, SpaceMismatchError, ValidationError)
from .families import COMPACT, EvaluableFunction
from .quadrature import Domain, QuadratureRule, node_values

DEFAULT_RANK_TOLERANCE = 1e-10
MEMBER_RESIDUAL = 1e-8
NODES_PER_DIMENSION = 4
_DERIV_PROBES = 16


def _derivative_mismatch(f: EvaluableFunction, domain: Domain) -> float:
    """Largest relative gap between ``f.derivative`` and a 4th-order central difference."""
    x = domain.lower + domain.length * (np.arange(_DERIV_PROBES) + 0.5) / _DERIV_PROBES
    h = 1e-4 * domain.length / 2.0
    fd = (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)
    d = np.asarray(f.derivative(x))
    return float(np.max(np.abs(fd - d)) / max(1.0, float(np.max(np.abs(d)))))


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    """An ordered, finite list of generators on a domain."""

    generators: tuple[EvaluableFunction, ...]
    domain: Domain
    check_derivatives: bool = field(default=True, repr=False)

    def __post_init__(self):
        gens = tuple(self.generators)
        if not gens:
            raise ValidationError("a generator set must not be empty")
        object.__setattr__(self, "generators", gens)
        if self.check_derivatives:
            for g in gens:
                if g.derivative is not None:
                    gap = _derivative_mismatch(g, self.domain)
                    if not gap <= 1e-6:
                        raise ValidationError(
                            f"derivative of {g.name} disagrees with finite differences ({gap:.2e})")

    def __len__(self):
        return len(self.generators)

    def __iter__(self):
        return iter(self.generators)

    @property
    def family_tags(self) -> list[str]:
        return [g.family for g in self.generators]

    @property
    def descriptors(self) -> list[tuple]:
        return [g.descriptor for g in self.generators]

    @property
    def is_real(self) -> bool:
        return all(g.real for g in self.generators)

    def values(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        dtype = float if self.is_real else complex
        return np.array([g(x) for g in self.generators], dtype=dtype)

    def derivative_values(self, x) -> np.ndarray:
        missing = [g.name for g in self.generators if g.derivative is None]
        if missing:
            raise CapabilityError(f"generators without a derivative: {', '.join(missing)}")
        x = np.asarray(x, dtype=float)
        dtype = float if self.is_real else complex
        return np.array([np.broadcast_to(g.derivative(x), x.shape) for g in self.generators],
                        dtype=dtype)

    def extended(self, more: Iterable[EvaluableFunction]) -> "GeneratorSet":
        return GeneratorSet(self.generators + tuple(more), self.domain, self.check_derivatives)


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FunctionSpace:
    """Orthonormalized span of a generator set under a quadrature rule.

    ``generator_coefficients[j]`` holds the generator weights of basis
    function ``e_j``, so ``e_j(x) = generator_coefficients[j] @ g(x)``.
    """

    generators: GeneratorSet
    rule: QuadratureRule
    generator_coefficients: np.ndarray
    basis_values: np.ndarray
    rank_tolerance: float
    gram_eigenvalues: np.ndarray

    @property
    def dimension(self) -> int:
        return self.generator_coefficients.shape[0]

    beta = dimension

    @property
    def domain(self) -> Domain:
        return self.rule.domain

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.generator_coefficients)

    def eval_basis(self, x) -> np.ndarray:
        """Basis values ``e_j(x)``, shape ``(beta,) + x.shape``."""
        x = self.domain.check(x)
        flat = self.generators.values(x.ravel())
        return (self.generator_coefficients @ flat).reshape((self.dimension,) + x.shape)

    def eval_basis_derivative(self, x) -> np.ndarray:
        x = self.domain.check(x)
        flat = self.generators.derivative_values(x.ravel())
        return (self.generator_coefficients @ flat).reshape((self.dimension,) + x.shape)

    @property
    def basis_evaluators(self) -> list["Ultrafunction"]:
        return [self.basis(j) for j in range(self.dimension)]

    def basis(self, j: int) -> "Ultrafunction":
        c = np.zeros(self.dimension)
        c[j] = 1.0
        return Ultrafunction(self, c)

    def element(self, coefficients) -> "Ultrafunction":
        return Ultrafunction(self, coefficients)

    def zero(self) -> "Ultrafunction":
        return Ultrafunction(self, np.zeros(self.dimension))

    @property
    def basis_integrals(self) -> np.ndarray:
        return self.basis_values @ self.rule.weights

    def gram(self, conjugate: bool = True) -> np.ndarray:
        B = self.basis_values
        right = np.conj(B) if conjugate else B
        return (B * self.rule.weights) @ right.T

    @property
    def gram_residual(self) -> float:
        return float(np.max(np.abs(self.gram() - np.eye(self.dimension))))

    def pair_values(self, values) -> np.ndarray:
        """Bilinear pairings ``int v * e_j`` for node values ``v`` (no conjugation)."""
        return self.basis_values @ (self.rule.weights * np.asarray(values))

    def to_json(self) -> dict:
        C = self.generator_coefficients
        if np.iscomplexobj(C):
            coeffs = [[{"re": float(v.real), "im": float(v.imag)} for v in row] for row in C]
        else:
            coeffs = C.tolist()
        return {
            "dimension": self.dimension,
            "gram_residual": self.gram_residual,
            "generator_coefficients": coeffs,
            "generators": [g.name for g in self.generators],
        }


def _inverse_sqrt(G: np.ndarray) -> np.ndarray:
    lam, V = np.linalg.eigh(G)
    return (V / np.sqrt(lam)) @ np.conj(V).T


def _fix_phase(C: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude entry of each row real and positive."""
    idx = np.argmax(np.abs(C), axis=1)
    piv = C[np.arange(C.shape[0]), idx]
    phase = piv / np.abs(piv)
    return C / np.conj(phase)[:, None] if np.iscomplexobj(C) else C * np.sign(piv)[:, None]


def build_space(generators: GeneratorSet, rule: QuadratureRule,
                rank_tolerance: float = DEFAULT_RANK_TOLERANCE) -> FunctionSpace:
    """Orthonormalize ``generators`` against the rule's inner product.

    The generator Gram matrix is diagonalized; eigenvalues below
    ``rank_tolerance * max eigenvalue`` are discarded. When nothing is
    discarded the symmetric (Loewdin) orthonormalization ``G^{-1/2}`` is
    used, so already-orthonormal generators come back unchanged; otherwise
    the surviving eigenvectors, scaled by ``lambda^{-1/2}``, form the basis.
    """
    if not 0 < rank_tolerance <= 1e-4:
        raise ValidationError(f"rank_tolerance must be in (0, 1e-4], got {rank_tolerance}")
    if rule.domain != generators.domain:
        raise DomainError("quadrature rule and generators live on different domains")
    gv = node_values(rule, generators.values(rule.nodes))
    real = generators.is_real
    if real:
        gv = gv.real
    G = (gv * rule.weights) @ np.conj(gv).T
    G = 0.5 * (G + np.conj(G).T)
    lam, V = np.linalg.eigh(G)
    top = lam[-1]
    if not np.isfinite(top) or top <= 1e-300:
        raise DegenerateSpaceError("generators are numerically zero under the rule")
    keep = lam >= rank_tolerance * top
    beta = int(keep.sum())
    if rule.size < NODES_PER_DIMENSION * beta:
        raise ResolutionError(
            f"rule has {rule.size} nodes but a space of dimension {beta} needs at least "
            f"{NODES_PER_DIMENSION * beta}")
    if beta == len(generators):
        C = (V / np.sqrt(lam)) @ np.conj(V).T
    else:
        order = np.flatnonzero(keep)[::-1]
        C = np.conj(V[:, order]).T / np.sqrt(lam[order])[:, None]
        C = _fix_phase(C)
    # one refinement pass absorbs rounding from the eigen-solve
    B = C @ gv
    G2 = (B * rule.weights) @ np.conj(B).T
    C = _inverse_sqrt(0.5 * (G2 + np.conj(G2).T)) @ C
    if real:
        C = C.real
    B = C @ gv
    return FunctionSpace(generators, rule, _frozen(C), _frozen(B), float(rank_tolerance),
                         _frozen(lam[::-1].copy()))


@dataclass(frozen=True, eq=False)
class Ultrafunction:
    """An element of a :class:`FunctionSpace`, stored by orthonormal coefficients."""

    space: FunctionSpace
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients)
        if c.shape != (self.space.dimension,):
            raise ValidationError(
                f"expected {self.space.dimension} coefficients, got shape {c.shape}")
        if not np.iscomplexobj(c):
            c = c.astype(float)
        elif np.all(c.imag == 0):
            c = c.real.copy()
        object.__setattr__(self, "coefficients", _frozen(c))

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        vals = np.tensordot(self.coefficients, self.space.eval_basis(x), axes=1)
        return vals.item() if np.ndim(vals) == 0 else vals

    @property
    def values(self) -> np.ndarray:
        """Values at the quadrature nodes."""
        return self.coefficients @ self.space.basis_values

    def derivative_values(self, x) -> np.ndarray:
        return np.tensordot(self.coefficients, self.space.eval_basis_derivative(x), axes=1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def integral(self):
        out = self.coefficients @ self.space.basis_integrals
        return out.item()

    def conj(self) -> "Ultrafunction":
        if not self.space.is_real:
            raise CapabilityError("conjugation in coefficients needs a real basis")
        return Ultrafunction(self.space, np.conj(self.coefficients))

    def _check(self, other: "Ultrafunction"):
        if not isinstance(other, Ultrafunction):
            return NotImplemented
        if other.space is not self.space:
            raise SpaceMismatchError("ultrafunctions belong to different spaces")
        return None

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Ultrafunction(self.space, self.coefficients + other.coefficients)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Ultrafunction(self.space, self.coefficients - other.coefficients)

    def __neg__(self):
        return Ultrafunction(self.space, -self.coefficients)

    def __mul__(self, scalar):
        if isinstance(scalar, Ultrafunction):
            return NotImplemented
        return Ultrafunction(self.space, scalar * self.coefficients)

    __rmul__ = __mul__


def lincomb(terms: Sequence[tuple[complex, Ultrafunction]]) -> Ultrafunction:
    """``sum(a * u for a, u in terms)``; all terms must share one space."""
    if not terms:
        raise ValidationError("lincomb needs at least one term")
    space = terms[0][1].space
    total = np.zeros(space.dimension, dtype=complex)
    for a, u in terms:
        if u.space is not space:
            raise SpaceMismatchError("lincomb terms belong to different spaces")
        total = total + a * u.coefficients
    return Ultrafunction(space, total)


def require_same_space(*items) -> FunctionSpace:
    spaces = {id(getattr(u, "space", u)): getattr(u, "space", u) for u in items}
    if len(spaces) != 1:
        raise SpaceMismatchError("objects belong to different spaces")
    return next(iter(spaces.values()))


def project(space: FunctionSpace, f) -> tuple[Ultrafunction, float]:
    """Orthogonal projection of ``f`` onto the space and the relative residual."""
    fv = node_values(space.rule, f(space.rule.nodes) if callable(f) else f)
    c = np.conj(space.basis_values) @ (space.rule.weights * fv)
    r = fv - c @ space.basis_values
    w = space.rule.weights
    fnorm = math.sqrt(float(np.sum(w * np.abs(fv) ** 2)))
    rnorm = math.sqrt(float(np.sum(w * np.abs(r) ** 2)))
    return Ultrafunction(space, c), (rnorm / fnorm if fnorm > 0 else rnorm)


def member_embed(space: FunctionSpace, f) -> Ultrafunction:
    """Exact coefficients of a function already in the generator span.

    Raises NotAMemberError when the projection residual exceeds
    ``1e-8 * ||f||``; non-members go through canonical extension instead.
    """
    u, rel = project(space, f)
    if rel > MEMBER_RESIDUAL:
        name = getattr(f, "name", "function")
        raise NotAMemberError(f"{name} is not in the space (relative residual {rel:.3e})",
                              residual=rel)
    return u


def compact_generator_indices(space: FunctionSpace) -> list[int]:
    return [i for i, g in enumerate(space.generators) if g.support_flag == COMPACT]
