"""Composite Gauss-Legendre quadrature on a bounded interval.

The rule is the finite-stage stand-in for the extended integral: every
function is reduced to its vector of node values, and integrals, inner
products and norms become weighted sums over those values.

Integrable endpoint-type singularities (``|x - s|**p`` with ``p > -1``)
are handled by grading the panels geometrically (ratio 1/2) toward each
declared singular point, so no node ever lands on one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DomainError, IntegrationError, ValidationError

CLOSED_INTERVAL = "closed-interval"
TRUNCATED_LINE = "truncated-line"

DEFAULT_RADIUS = 16.0
DEFAULT_GRADING_LEVELS = 46
MIN_GRADING_LEVELS = 8
MAX_ORDER = 64

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Domain:
    """A bounded interval ``[lower, upper]``.

    ``kind == "truncated-line"`` marks an interval that stands in for the
    whole real line, truncated at ``radius = upper``.
    """

    lower: float
    upper: float
    kind: str = CLOSED_INTERVAL

    def __post_init__(self):
        lo, hi = float(self.lower), float(self.upper)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValidationError(f"domain endpoints must be finite, got [{lo}, {hi}]")
        if not lo < hi:
            raise ValidationError(f"domain needs lower < upper, got [{lo}, {hi}]")
        if self.kind not in (CLOSED_INTERVAL, TRUNCATED_LINE):
            raise ValidationError(f"unknown domain kind {self.kind!r}")
        if self.kind == TRUNCATED_LINE and lo != -hi:
            raise ValidationError("a truncated line must be symmetric about 0")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def truncated_line(cls, radius: float = DEFAULT_RADIUS) -> "Domain":
        return cls(-float(radius), float(radius), TRUNCATED_LINE)

    @property
    def length(self) -> float:
        return self.upper - self.lower

    @property
    def radius(self) -> float | None:
        return self.upper if self.kind == TRUNCATED_LINE else None

    def contains(self, x) -> np.ndarray | bool:
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lower) & (x <= self.upper)
        return bool(inside) if inside.ndim == 0 else inside

    def check(self, x, what: str = "point") -> np.ndarray:
        """Return ``x`` as a float array, raising DomainError if any entry is outside."""
        arr = np.asarray(x, dtype=float)
        bad = ~((arr >= self.lower) & (arr <= self.upper))
        if np.any(bad):
            first = arr[bad].flat[0] if arr.ndim else float(arr)
            raise DomainError(
                f"{what} {first!r} lies outside the domain [{self.lower}, {self.upper}]"
            )
        return arr

    def to_json(self) -> dict:
        out = {"lower": self.lower, "upper": self.upper, "kind": self.kind}
        if self.kind == TRUNCATED_LINE:
            out["radius"] = self.upper
        return out


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    domain: Domain
    nodes: np.ndarray
    weights: np.ndarray
    singular_points: tuple[float, ...]
    declared_tolerance: float
    panels: int
    order: int
    grading_levels: int = DEFAULT_GRADING_LEVELS
    panel_edges: np.ndarray = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.nodes.size

    def with_singular_points(self, extra: Iterable[float], grading_levels: int | None = None,
                             panels: int | None = None) -> "QuadratureRule":
        """Rebuild the rule with the same panel/order settings plus more singular points."""
        pts = set(self.singular_points) | {float(s) for s in extra}
        return build_rule(
            self.domain,
            panels=self.panels if panels is None else panels,
            order=self.order,
            singular_points=sorted(pts),
            grading_levels=self.grading_levels if grading_levels is None else grading_levels,
        )

    def to_json(self) -> dict:
        return {
            "domain": self.domain.to_json(),
            "nodes": self.nodes.tolist(),
            "weights": self.weights.tolist(),
            "singular_points": list(self.singular_points),
        }

    @classmethod
    def from_json(cls, data: dict) -> "QuadratureRule":
        """Load a serialized rule (fixture use; panel metadata is not restored)."""
        dom = data["domain"]
        domain = Domain(dom["lower"], dom["upper"], dom.get("kind", CLOSED_INTERVAL))
        nodes = _frozen(np.asarray(data["nodes"], dtype=float))
        weights = _frozen(np.asarray(data["weights"], dtype=float))
        rule = cls(domain, nodes, weights, tuple(float(s) for s in data["singular_points"]),
                   declared_tolerance=data.get("declared_tolerance", 1e-13 * domain.length),
                   panels=data.get("panels", 1), order=data.get("order", nodes.size))
        _validate_rule(rule)
        return rule


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _graded_edges(s: float, e: float, levels: int, length: float) -> tuple[list[float], float]:
    """Edges of panels between singular point ``s`` and far edge ``e``, halving toward ``s``.

    Returns the edge list (from s to e, inclusive) and the innermost width.
    """
    h = e - s
    floor = max(1e4 * _EPS * abs(s), 1e-16 * length)
    usable = int(math.floor(math.log2(abs(h) / floor))) if abs(h) > floor else 0
    n = max(MIN_GRADING_LEVELS, min(levels, usable))
    edges = [s] + [s + h * 2.0 ** (-k) for k in range(n, -1, -1)]
    return edges, abs(h) * 2.0 ** (-n)


def build_rule(domain: Domain, panels: int = 4, order: int = 8,
               singular_points: Sequence[float] = (),
               grading_levels: int = DEFAULT_GRADING_LEVELS) -> QuadratureRule:
    """Build a composite Gauss-Legendre rule.

    Parameters
    ----------
    domain : Domain
    panels : int
        Number of uniform base panels.
    order : int
        Gauss-Legendre points per panel, ``2 <= order <= 64``.
    singular_points : sequence of float
        Points in the closed domain where integrands may blow up. The base
        panels adjacent to each one are replaced by ``grading_levels + 1``
        geometrically shrinking panels.
    grading_levels : int
        Number of halvings toward each singular point (at least 8).

    Returns
    -------
    QuadratureRule
    """
    if int(panels) != panels or panels < 1:
        raise ValidationError(f"panels must be a positive integer, got {panels!r}")
    if int(order) != order or not 2 <= order <= MAX_ORDER:
        raise ValidationError(f"order must be in [2, {MAX_ORDER}], got {order!r}")
    if grading_levels < MIN_GRADING_LEVELS:
        raise ValidationError(f"grading_levels must be >= {MIN_GRADING_LEVELS}")
    panels, order = int(panels), int(order)
    sing = sorted({float(s) for s in singular_points})
    for s in sing:
        if not domain.lower <= s <= domain.upper:
            raise DomainError(f"singular point {s} lies outside [{domain.lower}, {domain.upper}]")

    lo, hi, length = domain.lower, domain.upper, domain.length
    base = sorted(set(np.linspace(lo, hi, panels + 1).tolist()) | set(sing))
    sing_set = set(sing)

    edges: list[float] = [base[0]]
    inner_widths: list[float] = []
    for left, right in zip(base[:-1], base[1:]):
        ls, rs = left in sing_set, right in sing_set
        if ls and rs:
            mid = 0.5 * (left + right)
            seg, w1 = _graded_edges(left, mid, grading_levels, length)
            edges.extend(seg[1:])
            seg, w2 = _graded_edges(right, mid, grading_levels, length)
            edges.extend(reversed(seg[:-1]))
            inner_widths += [w1, w2]
        elif ls:
            seg, w = _graded_edges(left, right, grading_levels, length)
            edges.extend(seg[1:])
            inner_widths.append(w)
        elif rs:
            seg, w = _graded_edges(right, left, grading_levels, length)
            edges.extend(reversed(seg[:-1]))
            inner_widths.append(w)
        else:
            edges.append(right)
    edges_arr = np.asarray(edges)

    t, wt = leggauss(order)
    wt = wt * (2.0 / wt.sum())
    a, b = edges_arr[:-1, None], edges_arr[1:, None]
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b) + half * t[None, :]).ravel()
    weights = (half * wt[None, :]).ravel()

    tol = 1e-13 * length + sum(2.0 * math.sqrt(w) for w in inner_widths)
    rule = QuadratureRule(domain, _frozen(nodes), _frozen(weights), tuple(sing), tol,
                          panels, order, grading_levels, _frozen(edges_arr))
    _validate_rule(rule)
    return rule


def _validate_rule(rule: QuadratureRule) -> None:
    if rule.nodes.shape != rule.weights.shape or rule.nodes.ndim != 1:
        raise ValidationError("nodes and weights must be 1-d arrays of equal length")
    if np.any(rule.weights <= 0):
        raise ValidationError("quadrature weights must be strictly positive")
    if np.any(np.diff(rule.nodes) <= 0):
        raise ValidationError("quadrature nodes must be strictly increasing")
    if rule.singular_points and np.any(np.isin(rule.nodes, rule.singular_points)):
        raise ValidationError("a quadrature node coincides with a singular point")


def node_values(rule: QuadratureRule, f) -> np.ndarray:
    """Evaluate ``f`` (callable or precomputed array) at the nodes, checking finiteness."""
    if callable(f):
        vals = np.asarray(f(rule.nodes))
        if vals.ndim == 0:
            vals = np.full(rule.size, vals[()])
    else:
        vals = np.asarray(f)
    if vals.shape[-1] != rule.size:
        raise ValidationError(f"expected {rule.size} node values, got shape {vals.shape}")
    bad = ~np.isfinite(vals)
    if np.any(bad):
        idx = int(np.argwhere(bad)[0][-1])
        node = float(rule.nodes[idx])
        raise IntegrationError(f"integrand is not finite at node x={node!r}", node=node)
    return vals


def integrate(rule: QuadratureRule, f: Callable | np.ndarray):
    """Return ``sum(weights * f(nodes))``; ``f`` may be a callable or node values."""
    vals = node_values(rule, f)
    out = vals @ rule.weights
    return out.item() if np.ndim(out) == 0 else out


def inner_product(rule: QuadratureRule, f, g):
    """``(f, g) = integral of f * conj(g)``; conjugate-linear in the second slot."""
    fv = node_values(rule, f)
    gv = node_values(rule, g)
    return integrate(rule, fv * np.conj(gv))


def norm(rule: QuadratureRule, f) -> float:
    return math.sqrt(max(inner_product(rule, f, f).real, 0.0))
