"""Fourier transform on Fourier-closed spaces.

Uses the unitary convention ``F(u)(k) = (2 pi)^{-1/2} int u(x) exp(-i k x) dx``.
Generators must carry a Hermite expansion; the transform is then exact
through ``F h_n = (-i)**n h_n``. Direct quadrature of the defining
integral is kept separately as an oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, SpaceMismatchError, ValidationError
from .extension import IntegralAgainst, canonical_extend
from .families import EvaluableFunction, hermite_combination, hermite_table, plane_wave
from .kernels import PointFrame
from .quadrature import TRUNCATED_LINE, QuadratureRule
from .space import DEFAULT_RANK_TOLERANCE, FunctionSpace, GeneratorSet, Ultrafunction, build_space

DEDUP_TOL = 1e-10
CLOSURE_TOL = 1e-9
CHECK_TOL = 1e-8
_SQRT2PI = math.sqrt(2.0 * math.pi)


def _hermite_vector(g: EvaluableFunction, n: int) -> np.ndarray:
    if not g.has_fourier:
        raise CapabilityError(f"no Fourier transform registered for {g.name}")
    out = np.zeros(n, dtype=complex)
    c = np.asarray(g.hermite_coefficients)
    out[: c.size] = c
    return out


def _fourier_phase(n: int, power: int = 1) -> np.ndarray:
    return (-1j) ** ((np.arange(n) * power) % 4)


def _canonical_phase(v: np.ndarray) -> np.ndarray:
    v = v / np.linalg.norm(v)
    piv = v[np.argmax(np.abs(v) > (1 - 1e-12) * np.abs(v).max())]
    v = v * (abs(piv) / piv)
    v[np.abs(v) < 1e-14] = 0.0
    return v


def fourier_close(generators: GeneratorSet) -> GeneratorSet:
    """Add ``F^j(g)`` for ``j = 1..3`` and complex conjugates; drop scalar multiples.

    Every generator is returned normalized in ``L^2(R)`` with a canonical
    phase, so ``x exp(-x^2/2)`` comes back as ``h_1``.
    """
    gens = list(generators)
    for g in gens:
        if not g.has_fourier:
            raise CapabilityError(f"no Fourier transform registered for {g.name}")
    n = max(np.asarray(g.hermite_coefficients).size for g in gens)
    kept: list[np.ndarray] = []
    for g in gens:
        c = _hermite_vector(g, n)
        for j in range(4):
            img = c * _fourier_phase(n, j)
            for cand in (img, np.conj(img)):
                nv = np.linalg.norm(cand)
                if nv == 0:
                    continue
                unit = cand / nv
                if any(abs(np.vdot(k, unit)) > 1 - DEDUP_TOL for k in kept):
                    continue
                kept.append(unit)
    out = [hermite_combination(_canonical_phase(v)) for v in kept]
    return GeneratorSet(tuple(out), generators.domain, check_derivatives=False)


def _realify(generators: GeneratorSet) -> GeneratorSet:
    """Replace complex Hermite combinations by their real and imaginary parts."""
    out = []
    seen = []
    for g in generators:
        c = np.asarray(g.hermite_coefficients)
        parts = [c.real] if g.real or not np.iscomplexobj(c) else [c.real, c.imag]
        for p in parts:
            if np.linalg.norm(p) <= 1e-14:
                continue
            unit = p / np.linalg.norm(p)
            if any(s.size == unit.size and abs(s @ unit) > 1 - DEDUP_TOL for s in seen):
                continue
            seen.append(unit)
            out.append(g if (g.real and len(parts) == 1) else hermite_combination(p))
    return GeneratorSet(tuple(out), generators.domain, check_derivatives=False)


@dataclass(frozen=True, eq=False)
class FourierSpace:
    space: FunctionSpace
    transform_matrix: np.ndarray
    conjugation_map: np.ndarray
    hermite_basis: np.ndarray

    @property
    def dimension(self) -> int:
        return self.space.dimension


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def fourier_space_from(space: FunctionSpace) -> FourierSpace:
    """Attach the transform to an existing space, refusing spaces that are not Fourier-closed."""
    if space.domain.kind != TRUNCATED_LINE:
        raise ValidationError("the Fourier transform needs a truncated-line domain")
    if not space.is_real:
        raise CapabilityError("Fourier spaces are built over a real orthonormal basis")
    for g in space.generators:
        if not g.has_fourier:
            raise CapabilityError(f"no Fourier transform registered for {g.name}")
    n = max(np.asarray(g.hermite_coefficients).size for g in space.generators)
    Hg = np.array([_hermite_vector(g, n) for g in space.generators])
    H = space.generator_coefficients @ Hg
    table = hermite_table(n, space.rule.nodes)
    FH = H * _fourier_phase(n)
    f_vals = FH @ table
    w = space.rule.weights
    T = (f_vals * w) @ space.basis_values.T
    T = T.T
    resid = f_vals - T.T @ space.basis_values
    err = math.sqrt(float(np.max(np.sum(w * np.abs(resid) ** 2, axis=1))))
    if err > CLOSURE_TOL:
        raise CapabilityError(f"space is not closed under the Fourier transform (residual {err:.2e})")
    conj_vals = np.conj(space.basis_values)
    K = ((conj_vals * w) @ space.basis_values.T).T
    return FourierSpace(space, _frozen(T), _frozen(K), _frozen(H))


def build_fourier_space(generators: GeneratorSet, rule: QuadratureRule,
                        rank_tolerance: float = DEFAULT_RANK_TOLERANCE,
                        close: bool = True) -> FourierSpace:
    """Close (optionally), realify and orthonormalize, then assemble the transform matrix."""
    gens = fourier_close(generators) if close else generators
    space = build_space(_realify(gens), rule, rank_tolerance)
    return fourier_space_from(space)


def _check(fspace: FourierSpace, u: Ultrafunction) -> None:
    if u.space is not fspace.space:
        raise SpaceMismatchError("ultrafunction is not in the Fourier space")


def fourier(fspace: FourierSpace, u: Ultrafunction) -> Ultrafunction:
    _check(fspace, u)
    return Ultrafunction(fspace.space, fspace.transform_matrix @ u.coefficients)


def inverse_fourier(fspace: FourierSpace, u: Ultrafunction) -> Ultrafunction:
    _check(fspace, u)
    return Ultrafunction(fspace.space, np.conj(fspace.transform_matrix).T @ u.coefficients)


def fourier_quadrature(rule: QuadratureRule, values: np.ndarray, ks) -> np.ndarray:
    """Direct quadrature of ``(2 pi)^{-1/2} int u(x) exp(-i k x) dx`` from node values."""
    ks = np.asarray(ks, dtype=float)
    kern = np.exp(-1j * np.outer(ks, rule.nodes))
    return kern @ (rule.weights * values) / _SQRT2PI


def conjugation_residual(fspace: FourierSpace, u: Ultrafunction) -> float:
    """Relative residual of projecting ``conj(u)`` back onto the space."""
    _check(fspace, u)
    space = fspace.space
    vals = np.conj(u.values)
    c = fspace.conjugation_map @ np.conj(u.coefficients)
    r = vals - c @ space.basis_values
    w = space.rule.weights
    den = math.sqrt(float(np.sum(w * np.abs(vals) ** 2)))
    return math.sqrt(float(np.sum(w * np.abs(r) ** 2))) / max(den, 1e-300)


def _plane_wave_extension(space: FunctionSpace, k: float, sign: int) -> np.ndarray:
    return canonical_extend(space, IntegralAgainst(plane_wave(sign * k, 1.0 / _SQRT2PI))).coefficients


def fourier_frame_checks(fspace: FourierSpace, frame: PointFrame, n_random: int = 20,
                         seed: int = 0, tol: float = CHECK_TOL) -> dict:
    """Plane-wave / Delta duality checks on a frame.

    Each check compares a matrix-applied transform with canonical
    extensions obtained by quadrature pairing, evaluated at the frame
    points. Returns ``{name: {"residual", "tolerance", "pass"}}`` plus an
    overall ``"pass"`` flag and the worst residual.
    """
    space = fspace.space
    if frame.space is not space:
        raise SpaceMismatchError("frame is built on a different space")
    T = fspace.transform_matrix
    E, S = frame.E, frame.sigma_coefficients
    pts = frame.points

    ext_plus = np.column_stack([_plane_wave_extension(space, a, +1) for a in pts])
    ext_minus = np.column_stack([_plane_wave_extension(space, a, -1) for a in pts])

    # F(delta_a) against the extension of exp(-i a k)/sqrt(2 pi)
    r1 = np.max(np.abs(E.T @ (T @ E - ext_minus)))
    # F(extension of exp(i a x)/sqrt(2 pi)) against delta_a
    r2 = np.max(np.abs(E.T @ (T @ ext_plus - E)))
    # Z[k, x] = extension of xi -> exp(i k xi), evaluated at x
    Z = _SQRT2PI * (E.T @ ext_plus).T
    r3 = np.max(np.abs(Z - Z.T))
    rng = np.random.default_rng(seed)
    r4 = 0.0
    for _ in range(n_random):
        c = rng.standard_normal(space.dimension) + 1j * rng.standard_normal(space.dimension)
        uhat = T @ c
        dd = S.T @ uhat
        # u = (2 pi)^{-1/2} sum_k uhat_k ext(exp(i k x)); ext_plus already carries the factor
        recon = ext_plus @ dd
        r4 = max(r4, float(np.max(np.abs(E.T @ (recon - c))) / np.linalg.norm(c)))

    checks = {
        "fourier_of_delta": float(r1),
        "fourier_of_plane_wave": float(r2),
        "plane_wave_symmetry": float(r3),
        "plane_wave_reconstruction": float(r4),
    }
    report = {k: {"residual": v, "tolerance": tol, "pass": bool(v <= tol)} for k, v in checks.items()}
    report["pass"] = all(v["pass"] for v in report.values() if isinstance(v, dict))
    report["worst_residual"] = max(checks.values())
    return report
