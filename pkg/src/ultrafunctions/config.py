"""Experiment configuration: a strict JSON schema with named components.

Generator sets, functionals and chains are declared once by name and
referenced elsewhere. Unknown keys are rejected and every reference is
resolved before anything is computed.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Literal, Union

import pydantic
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import ConfigError
from .quadrature import (CLOSED_INTERVAL, DEFAULT_GRADING_LEVELS, DEFAULT_RADIUS, Domain,
                         MIN_GRADING_LEVELS)

DEFAULT_TOLERANCES = {
    "gram": 1e-10,
    "reproducing": 1e-9,
    "kernel_symmetry": 1e-10,
    "frame": 1e-10,
    "interpolation": 1e-9,
    "weights": 1e-12,
    "extension": 1e-6,
    "operator": 1e-9,
    "fourier": 1e-8,
    "unitary": 1e-9,
    "oracle": 1e-7,
    "stabilization": 1e-9,
}


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# ---------------------------------------------------------------- domain and rule

class IntervalSpec(Strict):
    kind: Literal["closed-interval"] = CLOSED_INTERVAL
    lower: float
    upper: float


class LineSpec(Strict):
    kind: Literal["truncated-line"]
    radius: float = DEFAULT_RADIUS


DomainSpec = Annotated[Union[IntervalSpec, LineSpec], Field(discriminator="kind")]


class QuadratureSpec(Strict):
    panels: int = Field(4, ge=1)
    order: int = Field(16, ge=1, le=64)
    grading_levels: int = Field(DEFAULT_GRADING_LEVELS, ge=MIN_GRADING_LEVELS)
    singular_points: list[float] = []


# ---------------------------------------------------------------- generator families

class MonomialFamily(Strict):
    family: Literal["monomial"]
    max_degree: int = Field(ge=0)


class LegendreFamily(Strict):
    family: Literal["legendre"]
    count: int = Field(ge=1)


class TrigFamily(Strict):
    family: Literal["trig"]
    K: int = Field(ge=0)
    constant: bool = True


class BSplineFamily(Strict):
    family: Literal["bspline"]
    degree: int = Field(ge=0)
    count: int = Field(ge=1)


class HermiteFamily(Strict):
    family: Literal["hermite"]
    count: int = Field(ge=1)


class GaussPolyFamily(Strict):
    family: Literal["gauss_poly"]
    degrees: list[int]


FamilySpec = Annotated[Union[MonomialFamily, LegendreFamily, TrigFamily, BSplineFamily,
                             HermiteFamily, GaussPolyFamily], Field(discriminator="family")]


# ---------------------------------------------------------------- functions and functionals

class MonomialFn(Strict):
    kind: Literal["monomial"]
    degree: int = Field(ge=0)


class PolynomialFn(Strict):
    kind: Literal["polynomial"]
    coefficients: list[float]


class AbsPowerFn(Strict):
    kind: Literal["abs_power"]
    power: float
    center: float = 0.0


class IndicatorFn(Strict):
    kind: Literal["indicator"]
    a: float
    b: float


class HermiteFn(Strict):
    kind: Literal["hermite"]
    n: int = Field(ge=0)


class GaussPolyFn(Strict):
    kind: Literal["gauss_poly"]
    m: int = Field(ge=0)


class PlaneWaveFn(Strict):
    kind: Literal["plane_wave"]
    k: float


class SinFn(Strict):
    kind: Literal["sin", "cos"]
    frequency: float = 1.0


FunctionSpec = Annotated[Union[MonomialFn, PolynomialFn, AbsPowerFn, IndicatorFn, HermiteFn,
                               GaussPolyFn, PlaneWaveFn, SinFn], Field(discriminator="kind")]


class IntegralFunctional(Strict):
    kind: Literal["integral_against"]
    function: FunctionSpec
    singular_points: list[float] = []


class PointMassFunctional(Strict):
    kind: Literal["point_mass"]
    q: float
    scale: float = 1.0


class CombinationFunctional(Strict):
    """``sum(coefficient * functional)`` over previously named, non-combination functionals."""

    kind: Literal["combination"]
    terms: list[tuple[float, str]] = Field(min_length=1)


FunctionalSpec = Annotated[Union[IntegralFunctional, PointMassFunctional, CombinationFunctional],
                           Field(discriminator="kind")]


# ---------------------------------------------------------------- experiments

class FrameSpec(Strict):
    points: list[float] | None = None
    candidates: list[float] | None = None
    grid: int | None = Field(None, ge=2)
    random_pairs: int = Field(200, ge=0)
    expected_points: list[float] | None = None
    expected_weights: list[float] | None = None

    @model_validator(mode="after")
    def _one_source(self):
        if sum(v is not None for v in (self.points, self.candidates, self.grid)) > 1:
            raise ValueError("give at most one of points, candidates, grid")
        return self


class ExtendSpec(Strict):
    functional: str
    evaluate_at: list[float]
    expected: list[float] | None = None
    tolerance: float | None = Field(None, gt=0)
    forms: bool = True

    @model_validator(mode="after")
    def _lengths(self):
        if self.expected is not None and len(self.expected) != len(self.evaluate_at):
            raise ValueError("expected must have one value per evaluation point")
        return self


class OperateSpec(Strict):
    operator: Literal["derivative", "fourier", "multiplication_by_x", "square"]
    input: FunctionSpec
    expected: FunctionSpec | None = None
    expected_factor: tuple[float, float] = (1.0, 0.0)
    evaluate_at: list[float] = []
    tolerance: float | None = Field(None, gt=0)


class _Observable(Strict):
    label: str | None = None

    @property
    def display_name(self) -> str:
        return self.label or self.kind


class ExtensionObservable(_Observable):
    kind: Literal["extension_value"]
    functional: str
    x0: float


class DeltaObservable(_Observable):
    kind: Literal["delta_diagonal"]
    q: float


class WeightSumObservable(_Observable):
    kind: Literal["weight_sum"]


ObservableSpec = Annotated[Union[ExtensionObservable, DeltaObservable, WeightSumObservable],
                           Field(discriminator="kind")]


class ChainSpec(Strict):
    stages: list[str] = Field(min_length=1)
    observables: list[ObservableSpec] = Field(min_length=1)
    atol: float | None = Field(None, gt=0)
    expect: dict[str, Literal["stabilized", "not_stabilized", "constant", "increasing",
                              "non_decreasing"]] = {}


class FourierSpec(Strict):
    close: bool = True
    oracle_points: int = Field(20, ge=1)
    random_functions: int = Field(20, ge=0)


class ExperimentConfig(Strict):
    domain: DomainSpec
    quadrature: QuadratureSpec = QuadratureSpec()
    rank_tolerance: float = Field(1e-10, gt=0, le=1e-4)
    generator_sets: dict[str, list[FamilySpec]] = Field(min_length=1)
    space: str | None = None
    frame: FrameSpec = FrameSpec()
    functionals: dict[str, FunctionalSpec] = {}
    extend: list[ExtendSpec] = []
    operate: list[OperateSpec] = []
    fourier: FourierSpec = FourierSpec()
    chains: dict[str, ChainSpec] = {}
    output_dir: str = "ultrafun-out"
    tolerances: dict[str, float] = {}

    @model_validator(mode="after")
    def _resolve(self):
        sets = self.generator_sets
        refs = [("space", self.space)] if self.space is not None else []
        for name, ch in self.chains.items():
            refs += [(f"chains.{name}.stages", s) for s in ch.stages]
        for ref, target in refs:
            if target not in sets:
                raise ValueError(f"{ref} refers to undefined generator set {target!r}")
        for i, e in enumerate(self.extend):
            if e.functional not in self.functionals:
                raise ValueError(f"extend[{i}] refers to undefined functional {e.functional!r}")
        for name, fn in self.functionals.items():
            if isinstance(fn, CombinationFunctional):
                for _, ref in fn.terms:
                    target = self.functionals.get(ref)
                    if target is None:
                        raise ValueError(f"functionals.{name} refers to undefined functional {ref!r}")
                    if isinstance(target, CombinationFunctional):
                        raise ValueError(f"functionals.{name}: combinations may not nest ({ref!r})")
        for name, ch in self.chains.items():
            labels = [ob.display_name for ob in ch.observables]
            if len(set(labels)) != len(labels):
                raise ValueError(f"chains.{name}: observable labels must be unique")
            for key in ch.expect:
                if key not in labels:
                    raise ValueError(f"chains.{name}.expect names unknown observable {key!r}")
            for ob in ch.observables:
                if isinstance(ob, ExtensionObservable) and ob.functional not in self.functionals:
                    raise ValueError(f"chains.{name} refers to undefined functional {ob.functional!r}")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ValueError(f"unknown tolerance names {sorted(unknown)}")
        return self

    @property
    def space_name(self) -> str:
        return self.space if self.space is not None else next(iter(self.generator_sets))

    def tolerance(self, name: str, scale: float = 1.0) -> float:
        return self.tolerances.get(name, DEFAULT_TOLERANCES[name]) * scale

    def build_domain(self) -> Domain:
        d = self.domain
        if isinstance(d, LineSpec):
            return Domain.truncated_line(d.radius)
        return Domain(d.lower, d.upper, CLOSED_INTERVAL)


def load_config(path) -> ExperimentConfig:
    """Read and validate a JSON config; any problem becomes a ``ConfigError``."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    try:
        return ExperimentConfig.model_validate(raw)
    except pydantic.ValidationError as exc:
        raise ConfigError(f"invalid config {path}:\n{exc}") from exc
