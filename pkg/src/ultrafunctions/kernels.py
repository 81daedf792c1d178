"""Reproducing kernels, independent point sets and the Delta/Sigma/Theta bases.

With a real orthonormal basis ``e_j`` and points ``p_a`` write
``E[j, a] = e_j(p_a)``. In orthonormal coefficients:

* ``delta_a`` has coefficients ``E[:, a]`` and ``D = E.T @ E`` tabulates
  ``delta_a(p_b)``;
* the Sigma basis is ``S = inv(E.T)``, so ``sigma_b(p_a)`` is the identity;
* ``L`` maps ``sigma_a`` to ``delta_a``, hence ``L = E @ E.T``;
* ``A = L**(1/2)`` and ``theta_a = A sigma_a``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import (CapabilityError, DependentPointsError, NotPositiveError, NumericError,
                     ValidationError)
from .space import FunctionSpace, Ultrafunction, require_same_space

PIVOT_FLOOR = 1e-12
TIE_RTOL = 1e-12
MAX_CONDITION = 1e12
IDENTITY_TOL = 1e-9


def delta_at(space: FunctionSpace, q: float) -> Ultrafunction:
    """The reproducing element at ``q``: ``(v, delta_q) = v(q)`` for every ``v`` in the space."""
    q = float(space.domain.check(q))
    return Ultrafunction(space, np.conj(space.eval_basis(np.array([q]))[:, 0]))


def select_independent_points(space: FunctionSpace, candidates=None) -> np.ndarray:
    """Pick ``beta`` candidates by greedy column-pivoted orthogonalization.

    At each step the candidate whose evaluation column has the largest
    residual norm (after removing the span of columns already chosen) is
    taken; near-ties within ``1e-12`` relative go to the lowest index.
    The chosen points are returned in ascending order.
    """
    beta = space.dimension
    cand = space.rule.nodes if candidates is None else np.asarray(candidates, dtype=float)
    cand = space.domain.check(cand.ravel(), "candidate")
    if cand.size < beta:
        raise ValidationError(f"need at least {beta} candidates, got {cand.size}")
    R = space.eval_basis(cand).astype(complex if not space.is_real else float)
    norms2 = np.sum(np.abs(R) ** 2, axis=0)
    chosen: list[int] = []
    first = None
    for _ in range(beta):
        avail = norms2.copy()
        avail[chosen] = -np.inf
        top = avail.max()
        j = int(np.flatnonzero(avail >= top * (1 - TIE_RTOL))[0])
        piv = np.sqrt(max(norms2[j], 0.0))
        first = piv if first is None else first
        if not piv > PIVOT_FLOOR * max(first, 1.0):
            raise DependentPointsError(
                f"only {len(chosen)} independent points among the candidates (need {beta})")
        chosen.append(j)
        qv = R[:, j] / piv
        R = R - np.outer(qv, np.conj(qv) @ R)
        norms2 = np.sum(np.abs(R) ** 2, axis=0)
    return np.sort(cand[chosen])


@dataclass(frozen=True, eq=False)
class PointFrame:
    space: FunctionSpace
    points: np.ndarray
    E: np.ndarray
    D: np.ndarray
    sigma_coefficients: np.ndarray
    L_matrix: np.ndarray
    A_matrix: np.ndarray
    weights: np.ndarray
    condition_estimate: float

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def theta_coefficients(self) -> np.ndarray:
        return self.A_matrix @ self.sigma_coefficients

    def index_of(self, point: float) -> int:
        hits = np.flatnonzero(self.points == point)
        if hits.size == 0:
            raise ValidationError(f"{point} is not a frame point")
        return int(hits[0])

    def to_json(self) -> dict:
        return {
            "points": self.points.tolist(),
            "D": self.D.tolist(),
            "weights": self.weights.tolist(),
            "condition_estimate": self.condition_estimate,
        }

    def delta_table_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["a", "b", "delta_a_b"])
        for i, a in enumerate(self.points):
            for k, b in enumerate(self.points):
                w.writerow([f"{a:.17g}", f"{b:.17g}", f"{self.D[i, k]:.17g}"])
        return buf.getvalue()


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def build_frame(space: FunctionSpace, points) -> PointFrame:
    """Assemble the Delta/Sigma/Theta machinery for ``beta`` independent points."""
    if not space.is_real:
        raise CapabilityError("frames need a space with a real orthonormal basis "
                              "(build conjugation-closed spaces from real generators)")
    pts = space.domain.check(np.asarray(points, dtype=float).ravel(), "frame point")
    beta = space.dimension
    if pts.size != beta:
        raise ValidationError(f"a frame needs exactly beta={beta} points, got {pts.size}")
    if np.unique(pts).size != pts.size:
        raise DependentPointsError("frame points must be distinct")
    E = space.eval_basis(pts)
    D = E.T @ E
    D = 0.5 * (D + D.T)
    cond_D = np.linalg.cond(D)
    if not cond_D <= MAX_CONDITION:
        raise DependentPointsError(f"Delta matrix is numerically singular (condition {cond_D:.3e})")
    S = np.linalg.solve(E.T, np.eye(beta))
    L = E @ E.T
    L = 0.5 * (L + L.T)
    lam, V = np.linalg.eigh(L)
    scale = np.abs(lam).max()
    if lam[0] < -1e-9 * scale:
        raise NotPositiveError(f"L has a negative eigenvalue {lam[0]:.3e}")
    if lam[0] <= 0:
        raise DependentPointsError("L is singular on these points")
    A = (V * np.sqrt(lam)) @ V.T
    A = 0.5 * (A + A.T)
    w = S.T @ space.basis_integrals
    return PointFrame(space, _frozen(pts.copy()), _frozen(E), _frozen(D), _frozen(S),
                      _frozen(L), _frozen(A), _frozen(w), float(np.linalg.cond(E)))


def _element(frame: PointFrame, u: Ultrafunction) -> np.ndarray:
    require_same_space(frame.space, u)
    return u.coefficients


def delta_basis(frame: PointFrame, a: int) -> Ultrafunction:
    return Ultrafunction(frame.space, frame.E[:, a])


def sigma_at(frame: PointFrame, a: int) -> Ultrafunction:
    return Ultrafunction(frame.space, frame.sigma_coefficients[:, a])


def theta_at(frame: PointFrame, a: int) -> Ultrafunction:
    if not 0 <= a < frame.size:
        raise IndexError(a)
    return Ultrafunction(frame.space, frame.A_matrix @ frame.sigma_coefficients[:, a])


def apply_L(frame: PointFrame, u: Ultrafunction) -> Ultrafunction:
    return Ultrafunction(frame.space, frame.L_matrix @ _element(frame, u))


def apply_A(frame: PointFrame, u: Ultrafunction) -> Ultrafunction:
    return Ultrafunction(frame.space, frame.A_matrix @ _element(frame, u))


def coefficients_point(frame: PointFrame, u: Ultrafunction) -> np.ndarray:
    """``u(p_a)`` for every frame point: the Sigma-basis coordinates."""
    return frame.E.T @ _element(frame, u)


def coefficients_theta(frame: PointFrame, u: Ultrafunction) -> np.ndarray:
    """``int theta_a u``, equal to ``(A^{-1} u)(p_a)``: the Theta-basis coordinates."""
    return frame.theta_coefficients.T @ _element(frame, u)


def coefficients_delta(frame: PointFrame, u: Ultrafunction) -> np.ndarray:
    """``int sigma_a u``, equal to ``(L^{-1} u)(p_a)``: the Delta-basis coordinates."""
    return frame.sigma_coefficients.T @ _element(frame, u)


def from_point_values(frame: PointFrame, values) -> Ultrafunction:
    return Ultrafunction(frame.space, frame.sigma_coefficients @ np.asarray(values))


def from_theta(frame: PointFrame, coords) -> Ultrafunction:
    return Ultrafunction(frame.space, frame.theta_coefficients @ np.asarray(coords))


def from_delta(frame: PointFrame, coords) -> Ultrafunction:
    return Ultrafunction(frame.space, frame.E @ np.asarray(coords))


def integrate_by_weights(frame: PointFrame, u: Ultrafunction):
    """``int u`` as the sum of the Delta-basis coordinates."""
    return np.sum(coefficients_delta(frame, u)).item()


def integrate_by_point_weights(frame: PointFrame, u: Ultrafunction):
    """Same integral as the induced quadrature ``sum(w_a * u(p_a))``."""
    return (frame.weights @ coefficients_point(frame, u)).item()


def bilinear(u: Ultrafunction, v: Ultrafunction):
    """``int u v`` (no conjugation) over a real orthonormal basis."""
    require_same_space(u, v)
    return (u.coefficients @ v.coefficients).item()


def inner_by_points(frame: PointFrame, u: Ultrafunction, v: Ultrafunction, check: bool = True):
    """``sum(u(p_a) v(p_a))``; with ``check`` it must equal ``int (L u) v`` within 1e-9."""
    uv = coefficients_point(frame, u)
    vv = coefficients_point(frame, v)
    s = (uv @ vv).item()
    if check:
        ref = bilinear(apply_L(frame, u), v)
        scale = max(1.0, np.linalg.norm(frame.L_matrix, 2) * u.norm() * v.norm())
        if abs(s - ref) > IDENTITY_TOL * scale:
            raise NumericError(f"point sum {s!r} disagrees with int (L u) v = {ref!r}")
    return s


def frame_residuals(frame: PointFrame) -> dict[str, float]:
    """Residuals of the structural identities of a frame.

    Biorthogonality and Theta orthonormality are evaluated by quadrature
    over node values, independently of the coefficient algebra used to
    build the frame.
    """
    space = frame.space
    wts = space.rule.weights
    B = space.basis_values
    delta_vals = frame.E.T @ B
    sigma_vals = frame.sigma_coefficients.T @ B
    theta_vals = frame.theta_coefficients.T @ B
    I = np.eye(frame.size)
    theta_at_pts = frame.theta_coefficients.T @ frame.E
    L = frame.L_matrix
    lnorm = np.linalg.norm(L, 2)
    return {
        "delta_symmetry": float(np.max(np.abs(frame.D - frame.D.T))),
        "biorthogonality": float(np.max(np.abs((delta_vals * wts) @ sigma_vals.T - I))),
        "sigma_cardinal": float(np.max(np.abs(frame.E.T @ frame.sigma_coefficients - I))),
        "L_symmetry": float(np.max(np.abs(L - L.T))),
        "L_min_eigenvalue": float(np.linalg.eigvalsh(L)[0]),
        "A_squared_minus_L": float(np.linalg.norm(frame.A_matrix @ frame.A_matrix - L, 2) / lnorm),
        "theta_orthonormality": float(np.max(np.abs((theta_vals * wts) @ theta_vals.T - I))),
        "theta_symmetry": float(np.max(np.abs(theta_at_pts - theta_at_pts.T))),
    }
