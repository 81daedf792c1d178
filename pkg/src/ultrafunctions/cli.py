"""Batch command line: ``ultrafun <subcommand> CONFIG [--seed N] [--tol-scale S] [--out DIR]``.

Every subcommand writes ``<out>/<subcommand>/report.json`` plus CSV
tables. Exit codes: 0 all checks pass, 1 some check failed, 2 invalid
input or config, 3 numeric failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (CombinationFunctional, DeltaObservable, ExperimentConfig,
                     ExtensionObservable, IntegralFunctional, LineSpec, load_config)
from .errors import NumericError, ValidationError
from .extension import (FiniteCombination, IntegralAgainst, PointMass, canonical_extend,
                        canonical_extend_frame, moments)
from .families import (EvaluableFunction, abs_power, bspline, clamped_knots, gauss_poly, hermite,
                       hermite_function, indicator, legendre, monomial, monomials, plane_wave,
                       polynomial, trig)
from .fourier import (build_fourier_space, fourier, fourier_frame_checks, fourier_quadrature,
                      fourier_space_from)
from .kernels import (build_frame, coefficients_point, frame_residuals, from_point_values,
                      select_independent_points)
from .operators import derivative, extend_operator, multiplication_by_x, square_operator
from .quadrature import build_rule, node_values
from .refinement import (DeltaDiagonal, ExtensionValue, WeightSum, build_chain, chain_csv,
                         run_chain)
from .space import GeneratorSet, Ultrafunction, build_space, project

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2, 3, 64
SUBCOMMANDS = ("build-space", "frame", "extend", "operate", "fourier-check", "refine")


# ---------------------------------------------------------------- deterministic output

def _num(x: float) -> str:
    if math.isnan(x):
        return '"NaN"'
    if math.isinf(x):
        return '"Infinity"' if x > 0 else '"-Infinity"'
    return "%.17g" % x


def dumps(obj, indent: int = 0) -> str:
    """JSON with every float in 17-significant-digit form and complex as ``{"re", "im"}``."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return dumps({"re": float(obj.real), "im": float(obj.imag)}, indent)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)
               for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


class Report:
    def __init__(self, subcommand: str, config_name: str, seed: int, tol_scale: float):
        self.header = {"subcommand": subcommand, "config": config_name, "version": __version__,
                       "seed": seed, "tol_scale": tol_scale}
        self.checks: list[dict] = []
        self.data: dict = {}
        self.tables: dict[str, list[list]] = {}

    def check(self, name: str, residual: float, tolerance: float, passed: bool | None = None):
        residual = float(residual)
        if passed is None:
            passed = bool(np.isfinite(residual) and residual <= tolerance)
        self.checks.append({"check": name, "residual": residual, "tolerance": float(tolerance),
                            "pass": bool(passed)})

    def table(self, name: str, header: list[str], rows: list[list]):
        self.tables[name] = [header] + rows

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks)

    def write(self, out_dir: Path) -> Path:
        out_dir.mkdir(parents=True, exist_ok=True)
        body = dict(self.header)
        body["pass"] = self.passed
        body["checks"] = self.checks
        body["data"] = self.data
        path = out_dir / "report.json"
        path.write_text(dumps(body) + "\n")
        for name, rows in self.tables.items():
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            for row in rows:
                w.writerow([_cell(v) for v in row])
            (out_dir / f"{name}.csv").write_text(buf.getvalue())
        return path


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return v


# ---------------------------------------------------------------- config -> objects

def make_function(spec) -> EvaluableFunction:
    k = spec.kind
    if k == "monomial":
        return monomial(spec.degree)
    if k == "polynomial":
        return polynomial(spec.coefficients)
    if k == "abs_power":
        return abs_power(spec.power, spec.center)
    if k == "indicator":
        return indicator(spec.a, spec.b)
    if k == "hermite":
        return hermite_function(spec.n)
    if k == "gauss_poly":
        return gauss_poly(spec.m)
    if k == "plane_wave":
        return plane_wave(spec.k)
    w = spec.frequency
    if k == "sin":
        return EvaluableFunction(lambda x: np.sin(w * x), ("sin", w), lambda x: w * np.cos(w * x))
    return EvaluableFunction(lambda x: np.cos(w * x), ("cos", w), lambda x: -w * np.sin(w * x))


def make_functional(spec, named=None):
    if isinstance(spec, IntegralFunctional):
        return IntegralAgainst(make_function(spec.function), tuple(spec.singular_points))
    if isinstance(spec, CombinationFunctional):
        return FiniteCombination(tuple((a, make_functional(named[ref])) for a, ref in spec.terms))
    return PointMass(spec.q, spec.scale)


def make_generators(cfg: ExperimentConfig, name: str) -> GeneratorSet:
    domain = cfg.build_domain()
    gens = []
    for fam in cfg.generator_sets[name]:
        f = fam.family
        if f == "monomial":
            gens += monomials(fam.max_degree)
        elif f == "legendre":
            gens += legendre(fam.count, domain)
        elif f == "trig":
            gens += trig(fam.K, domain, fam.constant)
        elif f == "bspline":
            gens += bspline(fam.degree, clamped_knots(fam.degree, fam.count, domain), domain)
        elif f == "hermite":
            gens += hermite(fam.count)
        elif f == "gauss_poly":
            gens += [gauss_poly(m) for m in fam.degrees]
    return GeneratorSet(tuple(gens), domain)


def make_rule(cfg: ExperimentConfig):
    q = cfg.quadrature
    return build_rule(cfg.build_domain(), panels=q.panels, order=q.order,
                      singular_points=tuple(q.singular_points), grading_levels=q.grading_levels)


def _space(cfg: ExperimentConfig, name: str | None = None):
    return build_space(make_generators(cfg, name or cfg.space_name), make_rule(cfg), cfg.rank_tolerance)


def _frame_points(cfg: ExperimentConfig, space):
    fs = cfg.frame
    if fs.points is not None:
        return np.asarray(fs.points, dtype=float)
    if fs.candidates is not None:
        return select_independent_points(space, fs.candidates)
    if fs.grid is not None:
        d = space.domain
        return select_independent_points(space, np.linspace(d.lower, d.upper, fs.grid))
    return select_independent_points(space)


# ---------------------------------------------------------------- subcommands

def cmd_build_space(cfg, report: Report, rng, ts):
    rows = []
    for name in cfg.generator_sets:
        sp = _space(cfg, name)
        res = sp.gram_residual
        report.check(f"orthonormality[{name}]", res, cfg.tolerance("gram", ts))
        lam = sp.gram_eigenvalues
        rows.append([name, sp.dimension, len(sp.generators), sp.rule.size, res,
                     float(lam[-1] / lam[0]), sp.rule.declared_tolerance])
        report.data[name] = {"beta": sp.dimension, "generators": len(sp.generators),
                             "nodes": sp.rule.size, "declared_tolerance": sp.rule.declared_tolerance}
    report.table("spaces", ["name", "beta", "generators", "nodes", "gram_residual",
                            "eigenvalue_ratio", "declared_tolerance"], rows)


def cmd_frame(cfg, report: Report, rng, ts):
    space = _space(cfg)
    frame = build_frame(space, _frame_points(cfg, space))
    res = frame_residuals(frame)
    tol_f = cfg.tolerance("frame", ts)
    report.check("delta_symmetry", res["delta_symmetry"], cfg.tolerance("kernel_symmetry", ts))
    report.check("biorthogonality", res["biorthogonality"], tol_f)
    report.check("sigma_cardinal", res["sigma_cardinal"], tol_f)
    report.check("L_symmetry", res["L_symmetry"], tol_f)
    report.check("L_positive", res["L_min_eigenvalue"], 0.0, passed=res["L_min_eigenvalue"] > 0)
    report.check("A_squared_minus_L", res["A_squared_minus_L"], cfg.tolerance("interpolation", ts))
    report.check("theta_orthonormality", res["theta_orthonormality"], tol_f)
    report.check("theta_symmetry", res["theta_symmetry"], tol_f)

    # reproducing property by quadrature, and interpolation on the frame
    n = cfg.frame.random_pairs
    d = space.domain
    B, w = space.basis_values, space.rule.weights
    worst_rep = worst_interp = 0.0
    for _ in range(n):
        c = rng.standard_normal(space.dimension)
        q = float(rng.uniform(d.lower, d.upper))
        u = Ultrafunction(space, c)
        dq = space.eval_basis(np.array([q]))[:, 0]
        lhs = float(np.sum(w * (c @ B) * (dq @ B)))
        worst_rep = max(worst_rep, abs(lhs - float(u.evaluate(np.array([q]))[0])) / np.linalg.norm(c))
        back = from_point_values(frame, coefficients_point(frame, u))
        worst_interp = max(worst_interp, float(np.max(np.abs(back.coefficients - c))))
    if n:
        report.check("reproducing_property", worst_rep, cfg.tolerance("reproducing", ts))
        report.check("interpolation_reconstruction", worst_interp, cfg.tolerance("interpolation", ts))
    quad_gap = float(np.max(np.abs(frame.weights @ frame.E.T - space.basis_integrals)))
    report.check("weights_integrate_basis", quad_gap, cfg.tolerance("interpolation", ts))
    if cfg.frame.expected_points is not None:
        exp = np.asarray(cfg.frame.expected_points, dtype=float)
        gap = float(np.max(np.abs(frame.points - exp))) if exp.size == frame.size else math.inf
        report.check("expected_points", gap, cfg.tolerance("weights", ts))
    if cfg.frame.expected_weights is not None:
        exp = np.asarray(cfg.frame.expected_weights, dtype=float)
        gap = float(np.max(np.abs(frame.weights - exp))) if exp.size == frame.size else math.inf
        report.check("expected_weights", gap, cfg.tolerance("weights", ts))
    report.data["beta"] = space.dimension
    report.data["condition_estimate"] = frame.condition_estimate
    report.data["points"] = frame.points
    report.data["weights"] = frame.weights
    report.table("frame", ["point", "weight"], [[p, wt] for p, wt in zip(frame.points, frame.weights)])
    report.table("delta_table", ["a", "b", "delta_a_b"],
                 [[a, b, frame.D[i, k]] for i, a in enumerate(frame.points)
                  for k, b in enumerate(frame.points)])


def cmd_extend(cfg, report: Report, rng, ts):
    space = _space(cfg)
    frame = None
    rows = []
    for i, e in enumerate(cfg.extend):
        T = make_functional(cfg.functionals[e.functional], cfg.functionals)
        ext = canonical_extend(space, T)
        xs = np.asarray(e.evaluate_at, dtype=float)
        vals = ext.evaluate(xs)
        rows += [[e.functional, x, complex(v).real, complex(v).imag] for x, v in zip(xs, vals)]
        report.data[f"{i}:{e.functional}"] = {"x": xs, "value": [complex(v) for v in vals]}
        m = moments(space, T)
        # defining identity: int w e_j = <T, e_j>, with the left side by quadrature
        lhs = (space.basis_values * space.rule.weights) @ ext.values
        scale = max(1.0, float(np.max(np.abs(m))))
        report.check(f"defining_identity[{e.functional}]", float(np.max(np.abs(lhs - m))) / scale,
                     cfg.tolerance("operator", ts))
        if e.expected is not None:
            tol = (e.tolerance or cfg.tolerance("extension")) * ts
            report.check(f"expected_values[{e.functional}]",
                         float(np.max(np.abs(vals - np.asarray(e.expected)))), tol)
        if e.forms and space.is_real:
            if frame is None:
                frame = build_frame(space, _frame_points(cfg, space))
            gap = max(float(np.max(np.abs(canonical_extend_frame(frame, T, f).coefficients
                                          - ext.coefficients))) for f in ("sigma", "theta", "delta"))
            report.check(f"frame_forms_agree[{e.functional}]", gap / scale, cfg.tolerance("operator", ts))
    report.table("extension", ["functional", "x", "value_re", "value_im"], rows)


def cmd_operate(cfg, report: Report, rng, ts):
    space = _space(cfg)
    fspace = None
    rows = []
    ops = {"multiplication_by_x": (multiplication_by_x, True), "square": (square_operator, False)}
    for i, op in enumerate(cfg.operate):
        f = make_function(op.input)
        u, proj_res = project(space, f)
        tol = (op.tolerance or cfg.tolerance("operator")) * ts
        tag = f"{i}:{op.operator}"
        if op.operator == "derivative":
            out = derivative(space, u)
            dvals = node_values(space.rule, u.derivative_values(space.rule.nodes))
            weak = (space.basis_values * space.rule.weights) @ dvals
            dm = out.coefficients
            report.check(f"weak_identity[{tag}]", float(np.max(np.abs(dm - weak))), tol)
        elif op.operator == "fourier":
            if fspace is None:
                fspace = fourier_space_from(space)
            out = fourier(fspace, u)
        else:
            F, linear = ops[op.operator]
            ext = extend_operator(space, F, linear=linear, name=op.operator)
            out = ext(u)
            if linear:
                gap = float(np.max(np.abs(ext.apply_raw(u).coefficients - out.coefficients)))
                report.check(f"matrix_matches_generic[{tag}]", gap, tol)
        if op.expected is not None:
            g = make_function(op.expected)
            ref, _ = project(space, g)
            factor = complex(*op.expected_factor)
            gap = float(np.linalg.norm(out.coefficients - factor * ref.coefficients))
            report.check(f"expected_result[{tag}]", gap / max(1.0, abs(factor) * ref.norm()), tol)
        xs = np.asarray(op.evaluate_at, dtype=float)
        vals = out.evaluate(xs) if xs.size else np.zeros(0)
        rows += [[i, op.operator, x, complex(v).real, complex(v).imag] for x, v in zip(xs, vals)]
        report.data[tag] = {"input_projection_residual": proj_res,
                            "coefficients": [complex(c) for c in out.coefficients]}
    report.table("operate", ["entry", "operator", "x", "value_re", "value_im"], rows)


def cmd_fourier_check(cfg, report: Report, rng, ts):
    if not isinstance(cfg.domain, LineSpec):
        raise ValidationError("fourier-check needs a truncated-line domain")
    gens = make_generators(cfg, cfg.space_name)
    fspace = build_fourier_space(gens, make_rule(cfg), cfg.rank_tolerance, close=cfg.fourier.close)
    space = fspace.space
    T = fspace.transform_matrix
    I = np.eye(space.dimension)
    tol_u = cfg.tolerance("unitary", ts)
    report.check("unitary", float(np.max(np.abs(np.conj(T).T @ T - I))), tol_u)
    report.check("fourth_power_identity", float(np.max(np.abs(np.linalg.matrix_power(T, 4) - I))), tol_u)
    # matrix against direct quadrature of the defining integral
    half = 0.5 * space.domain.radius
    worst = 0.0
    rows = []
    for j in range(max(1, cfg.fourier.random_functions)):
        u = Ultrafunction(space, rng.standard_normal(space.dimension))
        ks = np.sort(rng.uniform(-half, half, cfg.fourier.oracle_points))
        a = fourier(fspace, u).evaluate(ks)
        b = fourier_quadrature(space.rule, u.values, ks)
        worst = max(worst, float(np.max(np.abs(a - b))))
        if j == 0:
            rows = [[k, x.real, x.imag, y.real, y.imag] for k, x, y in zip(ks, a, b)]
    report.check("quadrature_oracle", worst, cfg.tolerance("oracle", ts))
    frame = build_frame(space, _frame_points(cfg, space))
    fc = fourier_frame_checks(fspace, frame, n_random=cfg.fourier.random_functions,
                              seed=int(rng.integers(2**31)), tol=cfg.tolerance("fourier", ts))
    for name, v in fc.items():
        if isinstance(v, dict):
            report.check(name, v["residual"], v["tolerance"])
    report.data["beta"] = space.dimension
    report.data["generators"] = [g.name for g in space.generators]
    report.table("fourier_oracle", ["k", "matrix_re", "matrix_im", "quadrature_re", "quadrature_im"], rows)
    report.table("transform_matrix", ["i", "j", "re", "im"],
                 [[i, j, T[i, j].real, T[i, j].imag] for i in range(T.shape[0]) for j in range(T.shape[1])])


def _observable(cfg, ob):
    if isinstance(ob, ExtensionObservable):
        T = make_functional(cfg.functionals[ob.functional], cfg.functionals)
        return ExtensionValue(T, ob.x0, ob.display_name)
    if isinstance(ob, DeltaObservable):
        return DeltaDiagonal(ob.q, ob.display_name)
    return WeightSum(None, ob.display_name)


def _expectation(report: Report, label: str, kind: str, result, atol: float):
    deltas = [r.delta_from_previous for r in result.reports[1:]]
    signed = [(b.value - a.value).real for a, b in zip(result.reports, result.reports[1:])]
    name = f"{label}:{kind}"
    if kind == "stabilized":
        report.check(name, max(deltas[-2:], default=math.inf), atol, passed=result.stabilized)
    elif kind == "not_stabilized":
        report.check(name, max(deltas[-2:], default=0.0), atol, passed=not result.stabilized)
    elif kind == "constant":
        report.check(name, max(deltas, default=0.0), atol)
    elif kind == "increasing":
        report.check(name, min(signed, default=math.inf), 0.0,
                     passed=all(s > 0 for s in signed))
    else:
        report.check(name, min(signed, default=0.0), -atol, passed=all(s >= -atol for s in signed))


def cmd_refine(cfg, report: Report, rng, ts):
    rule = make_rule(cfg)
    for cname, ch in cfg.chains.items():
        stages = [make_generators(cfg, s) for s in ch.stages]
        chain = build_chain(stages, rule, cfg.rank_tolerance, ch.stages)
        atol = (ch.atol or cfg.tolerance("stabilization")) * ts
        entry = {}
        for ob in ch.observables:
            res = run_chain(chain, _observable(cfg, ob), atol)
            label = ob.display_name
            entry[label] = res.to_json()
            report.tables[f"chain_{cname}_{label}"] = list(csv.reader(io.StringIO(chain_csv(res))))
            if label in ch.expect:
                _expectation(report, f"{cname}.{label}", ch.expect[label], res, atol)
        report.data[cname] = entry


COMMANDS = {
    "build-space": cmd_build_space,
    "frame": cmd_frame,
    "extend": cmd_extend,
    "operate": cmd_operate,
    "fourier-check": cmd_fourier_check,
    "refine": cmd_refine,
}

HELP = {
    "build-space": "orthonormalize every generator set and report Gram residuals",
    "frame": "select independent points and check the Delta/Sigma/Theta identities",
    "extend": "canonically extend the configured functionals",
    "operate": "apply the configured operators",
    "fourier-check": "check the transform matrix and the plane-wave/Delta duality",
    "refine": "run observables along the configured chains",
}


# ---------------------------------------------------------------- entry point

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ultrafun", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="subcommand", required=True, metavar="SUBCOMMAND")
    for name in SUBCOMMANDS:
        s = sub.add_parser(name, help=HELP[name])
        s.add_argument("config", help="path to a JSON experiment config")
        s.add_argument("--seed", type=int, default=0, help="seed for randomized checks (default 0)")
        s.add_argument("--tol-scale", type=float, default=1.0,
                       help="multiply every default tolerance by this factor")
        s.add_argument("--out", default=None, help="output directory (overrides the config)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if not args.tol_scale > 0:
        sys.stderr.write("ultrafun: error: --tol-scale must be positive\n")
        return EXIT_USAGE
    try:
        cfg = load_config(args.config)
        report = Report(args.subcommand, Path(args.config).name, args.seed, args.tol_scale)
        rng = np.random.default_rng(args.seed)
        COMMANDS[args.subcommand](cfg, report, rng, args.tol_scale)
    except ValidationError as exc:
        sys.stderr.write(f"ultrafun: invalid input: {exc}\n")
        return EXIT_INVALID
    except NumericError as exc:
        sys.stderr.write(f"ultrafun: numeric failure: {exc}\n")
        return EXIT_NUMERIC
    out = Path(args.out if args.out is not None else cfg.output_dir) / args.subcommand
    path = report.write(out)
    failed = [c["check"] for c in report.checks if not c["pass"]]
    print(f"{args.subcommand}: {len(report.checks) - len(failed)}/{len(report.checks)} checks passed; "
          f"report at {path}")
    for name in failed:
        print(f"  FAILED {name}")
    return EXIT_OK if not failed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
