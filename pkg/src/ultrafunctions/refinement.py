"""Experiments along a nested chain of generator sets.

Each stage is a larger space; an observable is evaluated at every stage
and the sequence is reported together with a stabilization verdict.
Nothing is extrapolated: a stabilized sequence is reported with its last
value, labeled "stabilized value".
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ChainError, UltrafunctionError, ValidationError
from .extension import Functional, canonical_extend
from .kernels import build_frame, select_independent_points
from .quadrature import QuadratureRule
from .space import DEFAULT_RANK_TOLERANCE, FunctionSpace, GeneratorSet, build_space


@dataclass(frozen=True, eq=False)
class RefinementChain:
    stages: tuple[GeneratorSet, ...]
    rule: QuadratureRule
    rank_tolerance: float = DEFAULT_RANK_TOLERANCE
    names: tuple[str, ...] = ()
    inclusion_verified: bool = False


def build_chain(stages: Sequence[GeneratorSet], rule: QuadratureRule,
                rank_tolerance: float = DEFAULT_RANK_TOLERANCE,
                names: Sequence[str] = ()) -> RefinementChain:
    """Check ``stage_i`` is contained in ``stage_{i+1}`` by generator descriptors."""
    stages = tuple(stages)
    if not stages:
        raise ValidationError("a chain needs at least one stage")
    names = tuple(names) or tuple(f"stage{i}" for i in range(len(stages)))
    for i, s in enumerate(stages):
        if s.domain != rule.domain:
            raise ChainError(f"stage {names[i]} lives on a different domain", stage=i)
        if i and not set(stages[i - 1].descriptors) <= set(s.descriptors):
            missing = set(stages[i - 1].descriptors) - set(s.descriptors)
            raise ChainError(f"stage {names[i]} does not contain stage {names[i - 1]} "
                             f"(missing {sorted(map(str, missing))})", stage=i)
    return RefinementChain(stages, rule, rank_tolerance, names, True)


# ---------------------------------------------------------------- observables

@dataclass(frozen=True)
class ExtensionValue:
    """Canonical extension of a functional, evaluated at ``x0``."""

    functional: Functional
    x0: float
    name: str = "extension_value"

    def __call__(self, space: FunctionSpace) -> complex:
        return complex(canonical_extend(space, self.functional).evaluate(np.array([self.x0]))[0])


@dataclass(frozen=True)
class DeltaDiagonal:
    """``delta_q(q) = ||delta_q||^2``; grows along the chain."""

    q: float
    name: str = "delta_diagonal"

    def __call__(self, space: FunctionSpace) -> complex:
        e = space.eval_basis(np.array([self.q]))[:, 0]
        return complex(np.sum(np.abs(e) ** 2))


@dataclass(frozen=True)
class WeightSum:
    """Sum of the induced quadrature weights of a frame chosen from ``candidates``."""

    candidates: tuple[float, ...] | None = None
    name: str = "weight_sum"

    def __call__(self, space: FunctionSpace) -> complex:
        cand = self.candidates
        if cand is None:
            d = space.domain
            cand = np.linspace(d.lower, d.upper, 8 * space.dimension + 1)
        frame = build_frame(space, select_independent_points(space, cand))
        return complex(np.sum(frame.weights))


Observable = Callable[[FunctionSpace], complex]


# ---------------------------------------------------------------- running

@dataclass(frozen=True)
class StageReport:
    stage: int
    beta: int
    observable: str
    value: complex
    delta_from_previous: float


@dataclass(frozen=True)
class ChainResult:
    reports: tuple[StageReport, ...]
    stabilized: bool
    stabilized_stage: int | None
    value: complex | None
    verdict: str

    def to_json(self) -> dict:
        return {
            "stages": [{"stage": r.stage, "beta": r.beta, "observable": r.observable,
                        "value": r.value, "delta": r.delta_from_previous} for r in self.reports],
            "stabilized": self.stabilized,
            "stabilized_stage": self.stabilized_stage,
            "stabilized value": self.value,
            "verdict": self.verdict,
        }


def _run_stage(chain: RefinementChain, i: int, observable: Observable) -> tuple[int, complex]:
    try:
        space = build_space(chain.stages[i], chain.rule, chain.rank_tolerance)
        return space.dimension, complex(observable(space))
    except ChainError:
        raise
    except UltrafunctionError as exc:
        raise ChainError(f"stage {chain.names[i]}: {exc}", stage=i) from exc


def run_chain(chain: RefinementChain, observable: Observable, stabilization_atol: float,
              workers: int | None = None) -> ChainResult:
    """Evaluate ``observable`` at every stage and decide whether it stabilized.

    The verdict is "stabilized" when the last two stage-to-stage changes
    are both at most ``stabilization_atol``; the reported stage is the
    first one after which every change stays within the tolerance.
    """
    if not stabilization_atol > 0:
        raise ValidationError("stabilization_atol must be positive")
    if not chain.inclusion_verified:
        chain = build_chain(chain.stages, chain.rule, chain.rank_tolerance, chain.names)
    n = len(chain.stages)
    if workers and workers > 1 and n > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda i: _run_stage(chain, i, observable), range(n)))
    else:
        results = [_run_stage(chain, i, observable) for i in range(n)]

    name = getattr(observable, "name", getattr(observable, "__name__", "observable"))
    reports = []
    prev_beta = 0
    for i, (beta, value) in enumerate(results):
        if beta < prev_beta:
            raise ChainError(f"dimension drops at stage {chain.names[i]}", stage=i)
        prev_beta = beta
        delta = 0.0 if i == 0 else abs(value - results[i - 1][1])
        reports.append(StageReport(i, beta, name, value, float(delta)))

    deltas = [r.delta_from_previous for r in reports[1:]]
    if len(deltas) >= 2 and deltas[-1] <= stabilization_atol and deltas[-2] <= stabilization_atol:
        k = len(deltas)
        while k > 0 and deltas[k - 1] <= stabilization_atol:
            k -= 1
        value = reports[-1].value
        verdict = f"stabilized at stage {k} with stabilized value {_fmt(value)}"
        return ChainResult(tuple(reports), True, k, value, verdict)
    trend = ", ".join(f"{d:.3e}" for d in deltas) or "single stage"
    return ChainResult(tuple(reports), False, None, None, f"not stabilized (deltas: {trend})")


def _fmt(z: complex) -> str:
    return f"{z.real:.17g}" if z.imag == 0 else f"{z.real:.17g}{z.imag:+.17g}j"


def chain_csv(result: ChainResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["stage", "beta", "observable", "value_re", "value_im", "delta"])
    for r in result.reports:
        w.writerow([r.stage, r.beta, r.observable, f"{r.value.real:.17g}", f"{r.value.imag:.17g}",
                    f"{r.delta_from_previous:.17g}"])
    return buf.getvalue()
