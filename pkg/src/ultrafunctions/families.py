"""Evaluable functions and the built-in generator families.

Every function carries a hashable ``descriptor`` (family name plus
parameters). Descriptors give generator sets an identity that survives
reconstruction, which is what refinement chains use to verify inclusion.

Functions whose Fourier transform is known in closed form carry their
expansion over the normalized Hermite functions in
``hermite_coefficients``. Since ``F h_n = (-i)**n h_n``, that expansion is
all the transform needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import Legendre
from scipy.interpolate import BSpline

from .errors import ValidationError
from .quadrature import Domain

GLOBAL = "global"
COMPACT = "compact-in-interior"


@dataclass(frozen=True, eq=False)
class EvaluableFunction:
    """A function of one real variable with optional derivative and transform data."""

    evaluate: Callable[[np.ndarray], np.ndarray]
    descriptor: tuple
    derivative: Callable[[np.ndarray], np.ndarray] | None = None
    hermite_coefficients: np.ndarray | None = None
    support_flag: str = GLOBAL
    real: bool = True

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.asarray(self.evaluate(x))
        if out.shape != x.shape:
            out = np.broadcast_to(out, x.shape).copy()
        return out

    @property
    def family(self) -> str:
        return self.descriptor[0]

    @property
    def name(self) -> str:
        params = ",".join(_fmt(p) for p in self.descriptor[1:])
        return f"{self.family}({params})"

    @property
    def has_fourier(self) -> bool:
        return self.hermite_coefficients is not None

    def conjugate(self) -> "EvaluableFunction":
        if self.real:
            return self
        deriv = self.derivative
        coefs = self.hermite_coefficients
        return EvaluableFunction(
            lambda x: np.conj(self.evaluate(x)),
            ("conj", self.descriptor),
            None if deriv is None else (lambda x: np.conj(deriv(x))),
            None if coefs is None else np.conj(coefs),
            self.support_flag,
            real=False,
        )


def _fmt(p) -> str:
    if isinstance(p, float):
        return repr(p)
    if isinstance(p, tuple):
        return "(" + ",".join(_fmt(q) for q in p) + ")"
    return str(p)


# ---------------------------------------------------------------- polynomials

def monomial(k: int) -> EvaluableFunction:
    k = int(k)
    if k < 0:
        raise ValidationError("monomial degree must be >= 0")
    deriv = (lambda x: np.zeros_like(x)) if k == 0 else (lambda x: k * x ** (k - 1))
    return EvaluableFunction(lambda x: x ** k if k else np.ones_like(x), ("monomial", k), deriv)


def monomials(max_degree: int) -> list[EvaluableFunction]:
    return [monomial(k) for k in range(int(max_degree) + 1)]


def polynomial(coefficients) -> EvaluableFunction:
    """``sum(c[k] * x**k)``, e.g. ``polynomial([2, 3])`` is ``2 + 3x``."""
    c = tuple(float(v) for v in coefficients)
    p = np.polynomial.Polynomial(c)
    dp = p.deriv()
    return EvaluableFunction(p, ("polynomial", c), dp)


def legendre(n: int, domain: Domain) -> list[EvaluableFunction]:
    """Legendre polynomials ``P_0 .. P_{n-1}`` mapped onto the domain."""
    out = []
    dom = (domain.lower, domain.upper)
    for k in range(int(n)):
        p = Legendre.basis(k, domain=dom)
        out.append(EvaluableFunction(p, ("legendre", k, dom), p.deriv()))
    return out


# ---------------------------------------------------------------- trigonometric

def trig(K: int, domain: Domain, constant: bool = True) -> list[EvaluableFunction]:
    """``1, cos(w t), sin(w t), ..., cos(K w t), sin(K w t)`` with ``t`` centred, ``w = 2 pi / |domain|``."""
    c = 0.5 * (domain.lower + domain.upper)
    w = 2.0 * math.pi / domain.length
    dom = (domain.lower, domain.upper)
    out = []
    if constant:
        out.append(EvaluableFunction(np.ones_like, ("trig", "const", 0, dom), np.zeros_like))
    for k in range(1, int(K) + 1):
        f = k * w
        out.append(EvaluableFunction(
            lambda x, f=f: np.cos(f * (x - c)), ("trig", "cos", k, dom),
            lambda x, f=f: -f * np.sin(f * (x - c))))
        out.append(EvaluableFunction(
            lambda x, f=f: np.sin(f * (x - c)), ("trig", "sin", k, dom),
            lambda x, f=f: f * np.cos(f * (x - c))))
    return out


# ---------------------------------------------------------------- B-splines

def clamped_knots(degree: int, n_basis: int, domain: Domain) -> np.ndarray:
    n_int = n_basis - degree - 1
    if n_int < 0:
        raise ValidationError(f"need n_basis >= degree + 1, got {n_basis} for degree {degree}")
    inner = np.linspace(domain.lower, domain.upper, n_int + 2)
    return np.concatenate([[domain.lower] * degree, inner, [domain.upper] * degree])


def bspline(degree: int, knots, domain: Domain) -> list[EvaluableFunction]:
    """All B-splines of the given degree on a knot vector.

    Splines that vanish at both domain endpoints are flagged
    ``compact-in-interior``; they span the test subspace used for
    distributional equivalence.
    """
    k = int(degree)
    t = np.asarray(knots, dtype=float)
    n = t.size - k - 1
    if n < 1:
        raise ValidationError("knot vector too short for the requested degree")
    if t[0] < domain.lower or t[-1] > domain.upper:
        raise ValidationError("knots must lie inside the domain")
    out = []
    for i in range(n):
        c = np.zeros(n)
        c[i] = 1.0
        spl = BSpline(t, c, k, extrapolate=False)
        dspl = spl.derivative() if k > 0 else None

        def ev(x, spl=spl):
            return np.nan_to_num(spl(x), nan=0.0)

        def dev(x, dspl=dspl):
            return np.nan_to_num(dspl(x), nan=0.0)

        ends = ev(np.array([domain.lower, domain.upper]))
        flag = COMPACT if np.all(np.abs(ends) <= 1e-14) else GLOBAL
        out.append(EvaluableFunction(ev, ("bspline", k, i, tuple(t.tolist())),
                                     dev if dspl is not None else None, support_flag=flag))
    return out


# ---------------------------------------------------------------- Hermite

def hermite_table(nmax: int, x) -> np.ndarray:
    """Normalized Hermite functions ``h_0 .. h_{nmax-1}`` at ``x``, shape ``(nmax, len(x))``."""
    x = np.asarray(x, dtype=float)
    out = np.empty((max(nmax, 1),) + x.shape)
    out[0] = math.pi ** -0.25 * np.exp(-0.5 * x * x)
    if nmax > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, nmax - 1):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out[:nmax]


def hermite_combination_eval(coefs: np.ndarray, x) -> np.ndarray:
    return np.tensordot(coefs, hermite_table(coefs.size, x), axes=1)


def hermite_combination_derivative(coefs: np.ndarray, x) -> np.ndarray:
    # h_n' = sqrt(n/2) h_{n-1} - sqrt((n+1)/2) h_{n+1}
    n = coefs.size
    d = np.zeros(n + 1, dtype=coefs.dtype)
    for m in range(n):
        if m > 0:
            d[m - 1] += math.sqrt(m / 2.0) * coefs[m]
        d[m + 1] -= math.sqrt((m + 1) / 2.0) * coefs[m]
    return hermite_combination_eval(d, x)


def hermite_function(n: int) -> EvaluableFunction:
    c = np.zeros(int(n) + 1)
    c[-1] = 1.0
    c.setflags(write=False)
    return EvaluableFunction(
        lambda x: hermite_table(n + 1, x)[n], ("hermite", int(n)),
        lambda x: hermite_combination_derivative(c, x), c)


def hermite(n: int) -> list[EvaluableFunction]:
    return [hermite_function(k) for k in range(int(n))]


def hermite_combination(coefs, tag=None) -> EvaluableFunction:
    """``sum(c[n] h_n)``; collapses to the registry ``hermite(n)`` for a single unit coefficient."""
    c = np.asarray(coefs, dtype=complex)
    nz = np.flatnonzero(np.abs(c) > 0)
    if nz.size == 0:
        raise ValidationError("empty Hermite combination")
    c = c[: nz[-1] + 1]
    if nz.size == 1 and abs(c[nz[0]] - 1.0) <= 1e-14:
        return hermite_function(int(nz[0]))
    real = bool(np.all(np.abs(c.imag) <= 1e-15 * np.abs(c).max()))
    if real:
        c = c.real.copy()
    c.setflags(write=False)
    key = tag if tag is not None else tuple(complex(round(v.real, 15), round(v.imag, 15))
                                            if not real else round(float(v.real), 15) for v in c)
    return EvaluableFunction(lambda x: hermite_combination_eval(c, x), ("hermite_combination", key),
                             lambda x: hermite_combination_derivative(c, x), c, real=real)


def _times_x(c: np.ndarray) -> np.ndarray:
    # x h_n = sqrt(n/2) h_{n-1} + sqrt((n+1)/2) h_{n+1}
    out = np.zeros(c.size + 1, dtype=c.dtype)
    for n, v in enumerate(c):
        if n > 0:
            out[n - 1] += math.sqrt(n / 2.0) * v
        out[n + 1] += math.sqrt((n + 1) / 2.0) * v
    return out


def gauss_poly(m: int) -> EvaluableFunction:
    """``x**m * exp(-x**2 / 2)``; its Hermite expansion is exact and finite."""
    m = int(m)
    c = np.array([math.pi ** 0.25])
    for _ in range(m):
        c = _times_x(c)
    c[np.abs(c) < 1e-15 * np.abs(c).max()] = 0.0
    c.setflags(write=False)

    def ev(x):
        return x ** m * np.exp(-0.5 * x * x)

    def dev(x):
        g = np.exp(-0.5 * x * x)
        return (m * x ** (m - 1) if m else 0.0) * g - x ** (m + 1) * g

    return EvaluableFunction(ev, ("gauss_poly", m), dev, c)


# ---------------------------------------------------------------- misc

def indicator(a: float, b: float) -> EvaluableFunction:
    """Indicator of ``[a, b]``; no derivative, no registered transform."""
    a, b = float(a), float(b)
    return EvaluableFunction(lambda x: ((x >= a) & (x <= b)).astype(float), ("indicator", a, b))


def abs_power(power: float, center: float = 0.0) -> EvaluableFunction:
    """``|x - center| ** power``; singular at ``center`` for negative powers."""
    p, c = float(power), float(center)

    def ev(x):
        with np.errstate(divide="ignore"):
            return np.abs(x - c) ** p

    return EvaluableFunction(ev, ("abs_power", p, c))


def plane_wave(k: float, scale: complex = 1.0) -> EvaluableFunction:
    """``scale * exp(i k x)``."""
    k = float(k)
    s = complex(scale)
    return EvaluableFunction(lambda x: s * np.exp(1j * k * x), ("plane_wave", k, s),
                             lambda x: 1j * k * s * np.exp(1j * k * x), real=False)


def from_callable(f: Callable, name: str = "callable", real: bool = True,
                  derivative: Callable | None = None) -> EvaluableFunction:
    return EvaluableFunction(f, ("callable", name, id(f)), derivative, real=real)


def as_evaluable(f) -> EvaluableFunction:
    if isinstance(f, EvaluableFunction):
        return f
    if callable(f):
        return from_callable(f, getattr(f, "__name__", "callable"), real=False)
    raise ValidationError(f"cannot interpret {f!r} as a function")
