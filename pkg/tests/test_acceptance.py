"""Acceptance criteria 1-10, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL`` line (also visible
without ``-s``). Running this file directly prints the same lines.
"""

import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from ultrafunctions import (DeltaDiagonal, Domain, ExtensionValue, GeneratorSet, IntegralAgainst,
                            PointMass, Ultrafunction, abs_power, build_chain, build_fourier_space,
                            build_frame, build_rule, build_space, bspline, canonical_extend,
                            clamped_knots, delta_at, derivative, embed_distribution, fourier,
                            fourier_frame_checks, fourier_quadrature, hermite, legendre,
                            make_test_subspace, member_embed, monomial, monomials,
                            pairing_residuals, run_chain, select_independent_points, trig)
from ultrafunctions.kernels import (coefficients_delta, coefficients_point, coefficients_theta,
                                    frame_residuals, from_delta, from_point_values, from_theta,
                                    inner_by_points, integrate_by_weights)
from ultrafunctions.refinement import WeightSum
from ultrafunctions.cli import main as cli_main

ROOT = Path(__file__).resolve().parents[1]
SEED = 20240601
I11 = Domain(-1.0, 1.0, "closed-interval")

_stdout = None


def emit(n: int, title: str, ok: bool, detail: str, t0: float):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}; {time.perf_counter() - t0:.2f}s]"
    if _stdout is not None:
        with _stdout():
            print(line)
    else:
        print(line)
    assert ok, line


@pytest.fixture(autouse=True)
def _visible(capsys):
    global _stdout
    _stdout = capsys.disabled
    yield
    _stdout = None


def kernel_spaces():
    rl = build_rule(I11, panels=8, order=40)
    rt = build_rule(I11, panels=8, order=24)
    out = {}
    for n in (8, 16, 32):
        out[f"legendre{n}"] = build_space(GeneratorSet(tuple(legendre(n, I11)), I11), rl)
    for K in (4, 8):
        out[f"trig{2 * K + 1}"] = build_space(GeneratorSet(tuple(trig(K, I11)), I11), rt)
    out["bspline20"] = build_space(GeneratorSet(tuple(bspline(3, clamped_knots(3, 20, I11), I11)), I11), rt)
    return out


_SPACES = {}


def spaces():
    if not _SPACES:
        _SPACES.update(kernel_spaces())
        for name, sp in _SPACES.items():
            assert sp.dimension == int("".join(c for c in name if c.isdigit()))
    return _SPACES


_FRAMES = {}


def frames():
    if not _FRAMES:
        for name, sp in spaces().items():
            _FRAMES[name] = build_frame(sp, select_independent_points(sp))
    return _FRAMES


# ---------------------------------------------------------------- 1

def test_criterion_1_reproducing_kernel():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED)
    worst_rep = worst_sym = worst_norm = 0.0
    for name, sp in spaces().items():
        w, B = sp.rule.weights, sp.basis_values
        for _ in range(200):
            u = Ultrafunction(sp, rng.standard_normal(sp.dimension))
            q, r = rng.uniform(-1, 1, 2)
            dq, dr = delta_at(sp, q), delta_at(sp, r)
            pairing = np.sum(w * u.values * dq.values)
            worst_rep = max(worst_rep, abs(pairing - u(q)) / u.norm())
            worst_sym = max(worst_sym, abs(dq(r) - dr(q)) / max(1.0, abs(dq(r))))
            nq = np.sum(w * dq.values ** 2)
            worst_norm = max(worst_norm, abs(nq - dq(q)) / dq(q))
    ok = worst_rep <= 1e-9 and worst_sym <= 1e-10 and worst_norm <= 1e-10
    emit(1, "reproducing kernel (Legendre 8/16/32, trig 9/17, B-spline 20)", ok,
         f"reproducing {worst_rep:.1e}, symmetry {worst_sym:.1e}, norm identity {worst_norm:.1e}", t0)


# ---------------------------------------------------------------- 2

def test_criterion_2_frames():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 2)
    bio = card = interp = uniq = 0.0
    for name, f in frames().items():
        sp = f.space
        r = frame_residuals(f)
        bio = max(bio, r["biorthogonality"])
        card = max(card, r["sigma_cardinal"])
        for _ in range(20):
            u = Ultrafunction(sp, rng.standard_normal(sp.dimension))
            back = from_point_values(f, coefficients_point(f, u))
            interp = max(interp, float(np.max(np.abs(back.coefficients - u.coefficients))))
            # a second element with the same values on Sigma has the same coefficients
            v = Ultrafunction(sp, back.coefficients)
            vv = from_point_values(f, coefficients_point(f, v))
            uniq = max(uniq, float(np.max(np.abs(vv.coefficients - back.coefficients))))
    ok = bio <= 1e-10 and card <= 1e-10 and interp <= 1e-9 and uniq <= 1e-10
    emit(2, "frames: biorthogonality, cardinality, interpolation", ok,
         f"biorth {bio:.1e}, cardinal {card:.1e}, interp {interp:.1e}, unique {uniq:.1e}", t0)


# ---------------------------------------------------------------- 3

def test_criterion_3_L_A_theta():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 3)
    ok = True
    worst = {"A2-L": 0.0, "theta_on": 0.0, "theta_sym": 0.0, "identities": 0.0}
    min_eig = math.inf
    for name, f in frames().items():
        sp = f.space
        r = frame_residuals(f)
        L = f.L_matrix
        ok &= r["L_symmetry"] <= 1e-12 * np.linalg.norm(L, 2)
        min_eig = min(min_eig, r["L_min_eigenvalue"])
        worst["A2-L"] = max(worst["A2-L"], r["A_squared_minus_L"])
        worst["theta_on"] = max(worst["theta_on"], r["theta_orthonormality"])
        worst["theta_sym"] = max(worst["theta_sym"], r["theta_symmetry"])
        for _ in range(100):
            u = Ultrafunction(sp, rng.standard_normal(sp.dimension))
            v = Ultrafunction(sp, rng.standard_normal(sp.dimension))
            scale = u.norm() * v.norm()
            errs = [np.max(np.abs(g(f, c(f, u)).coefficients - u.coefficients)) / u.norm()
                    for c, g in ((coefficients_point, from_point_values),
                                 (coefficients_theta, from_theta),
                                 (coefficients_delta, from_delta))]
            uv = u.coefficients @ v.coefficients
            errs.append(abs(coefficients_theta(f, u) @ coefficients_theta(f, v) - uv) / scale)
            errs.append(abs(coefficients_delta(f, u) @ coefficients_point(f, v) - uv) / scale)
            errs.append(abs(integrate_by_weights(f, u) - u.integral()) / u.norm())
            inner_by_points(f, u, v)
            worst["identities"] = max(worst["identities"], max(errs))
    ok &= min_eig > 0 and worst["A2-L"] <= 1e-9 and worst["theta_on"] <= 1e-10
    ok &= worst["theta_sym"] <= 1e-10 and worst["identities"] <= 1e-9
    emit(3, "L positive symmetric, A^2 = L, Theta orthonormal/symmetric, five frame identities",
         bool(ok), ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + f", min eig {min_eig:.2e}", t0)


# ---------------------------------------------------------------- 4

def test_criterion_4_emergent_trapezoid():
    t0 = time.perf_counter()
    sp = build_space(GeneratorSet(tuple(monomials(1)), I11), build_rule(I11, panels=4, order=16))
    pts = select_independent_points(sp, [-1.0, -0.5, 0.0, 0.5, 1.0])
    f = build_frame(sp, pts)
    gap = float(np.max(np.abs(f.weights - 1.0)))
    ok = list(pts) == [-1.0, 1.0] and gap <= 1e-12
    emit(4, "P1 frame {-1, 1} gives trapezoid weights (1, 1)", ok, f"points {[float(p) for p in pts]}, gap {gap:.1e}", t0)


# ---------------------------------------------------------------- 5

def test_criterion_5_canonical_extension():
    t0 = time.perf_counter()
    rule = build_rule(I11, panels=4, order=16)
    p1 = build_space(GeneratorSet(tuple(monomials(1)), I11), rule)
    p6 = build_space(GeneratorSet(tuple(monomials(6)), I11), rule)
    fixed = 0.0
    for sp in (p1, p6):
        for g in sp.generators:
            a = canonical_extend(sp, IntegralAgainst(g)).coefficients
            fixed = max(fixed, float(np.max(np.abs(a - member_embed(sp, g).coefficients))))
    w = canonical_extend(p1, IntegralAgainst(abs_power(-0.5), singular_points=(0.0,)))
    inv = float(np.max(np.abs(w(np.linspace(-1, 1, 21)) - 2.0)))
    pm = 0.0
    for sp in (p1, p6):
        for q in (-1.0, -0.3, 0.0, 0.8):
            pm = max(pm, float(np.max(np.abs(canonical_extend(sp, PointMass(q)).coefficients
                                             - delta_at(sp, q).coefficients))))
    ok = fixed <= 1e-10 and inv <= 1e-6 and pm <= 1e-10
    emit(5, "canonical extension: member fixed point, |x|^-1/2 -> 2, point mass -> delta", ok,
         f"fixed point {fixed:.1e}, |x|^-1/2 {inv:.1e}, point mass {pm:.1e}", t0)


# ---------------------------------------------------------------- 6

def test_criterion_6_distribution_embedding():
    t0 = time.perf_counter()
    d = Domain(0.0, 1.0, "closed-interval")
    sp = build_space(GeneratorSet(tuple(bspline(3, clamped_knots(3, 12, d), d)), d),
                     build_rule(d, panels=8, order=16))
    D = make_test_subspace(sp)
    worst = second = 0.0
    distinct = True
    for T in (PointMass(0.5), PointMass(0.31), IntegralAgainst(abs_power(-0.5, 0.4), (0.4,))):
        u = embed_distribution(sp, T, D)
        worst = max(worst, float(np.max(pairing_residuals(u, T, D))))
        v = u + Ultrafunction(sp, D.complement()[:, 0])
        second = max(second, float(np.max(pairing_residuals(v, T, D))))
        distinct &= np.linalg.norm(v.coefficients - u.coefficients) > 0.5
    ok = worst <= 1e-10 and second <= 1e-10 and bool(distinct)
    emit(6, "distribution embedding on flagged B-splines, second solution via complement", ok,
         f"residual {worst:.1e}, second solution {second:.1e}", t0)


# ---------------------------------------------------------------- 7

def test_criterion_7_derivative():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 7)
    rule = build_rule(I11, panels=4, order=16)
    closed = 0.0
    for sp in (build_space(GeneratorSet(tuple(monomials(6)), I11), rule),
               build_space(GeneratorSet(tuple(trig(5, I11)), I11), build_rule(I11, panels=8, order=24))):
        for _ in range(20):
            u = Ultrafunction(sp, rng.standard_normal(sp.dimension))
            Du = derivative(sp, u)
            closed = max(closed, float(np.max(np.abs(Du.values - u.derivative_values(sp.rule.nodes)))))
    sq = build_space(GeneratorSet((monomial(2),), I11), rule)
    zero = float(np.max(np.abs(derivative(sq, member_embed(sq, monomial(2))).coefficients)))
    weak = 0.0
    sp = build_space(GeneratorSet(tuple(legendre(12, I11)), I11), rule)
    sp2 = build_space(GeneratorSet((monomial(0), monomial(3), monomial(4)), I11), rule)
    for s in (sp, sp2, sq):
        B, w = s.basis_values, s.rule.weights
        for _ in range(20):
            u = Ultrafunction(s, rng.standard_normal(s.dimension))
            lhs = (B * w) @ derivative(s, u).values
            rhs = (B * w) @ u.derivative_values(s.rule.nodes)
            weak = max(weak, float(np.max(np.abs(lhs - rhs))))
    ok = closed <= 1e-9 and zero <= 1e-12 and weak <= 1e-9
    emit(7, "derivative: closed spaces exact, span{x^2} -> 0, weak identity", ok,
         f"closed {closed:.1e}, span(x^2) {zero:.1e}, weak {weak:.1e}", t0)


# ---------------------------------------------------------------- 8

def test_criterion_8_fourier():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 8)
    line = Domain.truncated_line(16)
    rule = build_rule(line, panels=16, order=24)
    fs = build_fourier_space(GeneratorSet(tuple(hermite(16)), line), rule)
    T = fs.transform_matrix
    I = np.eye(16)
    unit = float(np.max(np.abs(np.conj(T).T @ T - I)))
    four = float(np.max(np.abs(np.linalg.matrix_power(T, 4) - I)))
    oracle = 0.0
    for _ in range(10):
        u = Ultrafunction(fs.space, rng.standard_normal(16))
        ks = rng.uniform(-8, 8, 20)
        oracle = max(oracle, float(np.max(np.abs(fourier(fs, u)(ks) - fourier_quadrature(rule, u.values, ks)))))
    frame = build_frame(fs.space, select_independent_points(fs.space))
    rep = fourier_frame_checks(fs, frame, seed=SEED, tol=1e-8)
    ok = fs.dimension == 16 and unit <= 1e-9 and four <= 1e-9 and oracle <= 1e-7 and rep["pass"]
    emit(8, "Fourier on Hermite beta=16: unitary, order four, oracle, plane-wave/delta duality", ok,
         f"unitary {unit:.1e}, F^4 {four:.1e}, oracle {oracle:.1e}, duality {rep['worst_residual']:.1e}", t0)


# ---------------------------------------------------------------- 9

def test_criterion_9_refinement():
    t0 = time.perf_counter()
    rule = build_rule(I11, panels=4, order=16)
    chain = build_chain([GeneratorSet(tuple(monomials(k)), I11) for k in (1, 3, 5)], rule,
                        names=("P1", "P3", "P5"))
    member = run_chain(chain, ExtensionValue(IntegralAgainst(monomial(1)), 0.5), 1e-9)
    spread = max(abs(r.value - 0.5) for r in member.reports)
    inv = run_chain(chain, ExtensionValue(IntegralAgainst(abs_power(-0.5), (0.0,)), 0.0), 1e-9)
    vals = [r.value.real for r in inv.reports]
    increasing = all(b > a for a, b in zip(vals, vals[1:]))
    dd = [r.value.real for r in run_chain(chain, DeltaDiagonal(0.3), 1e-9).reports]
    nondecreasing = all(b >= a for a, b in zip(dd, dd[1:]))
    ws = run_chain(chain, WeightSum(), 1e-9)
    wgap = max(abs(r.value - 2.0) for r in ws.reports)
    ok = spread <= 1e-9 and (not inv.stabilized) and increasing and nondecreasing and wgap <= 1e-9
    emit(9, "refinement P1 < P3 < P5: member constant, |x|^-1/2 not stabilized, delta_q(q) monotone", ok,
         f"member spread {spread:.1e}, |x|^-1/2 stages {[round(v, 6) for v in vals]}, "
         f"delta_q(q) {[round(v, 4) for v in dd]}, weight sum gap {wgap:.1e}", t0)


# ---------------------------------------------------------------- 10

def test_criterion_10_cli_determinism(tmp_path):
    t0 = time.perf_counter()
    same = True
    codes = []
    runs = [(sub, ROOT / "configs" / "p1_interval.json")
            for sub in ("build-space", "frame", "extend", "operate", "refine")]
    runs.append(("fourier-check", ROOT / "configs" / "hermite16.json"))
    for sub, cfg in runs:
        for tag in ("a", "b"):
            codes.append(cli_main([sub, str(cfg), "--out", str(tmp_path / tag)]))
        same &= (tmp_path / "a" / sub / "report.json").read_bytes() == \
            (tmp_path / "b" / sub / "report.json").read_bytes()
    ok = same and all(c == 0 for c in codes)
    emit(10, "CLI determinism: two runs give byte-identical report.json", ok,
         f"{len(runs)} subcommands, exit codes {sorted(set(codes))}", t0)


if __name__ == "__main__":
    import tempfile
    failed = 0
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_criterion_")]
    tests.sort(key=lambda f: int(f.__name__.split("_")[2]))
    for t in tests:
        try:
            if t.__code__.co_argcount:
                with tempfile.TemporaryDirectory() as d:
                    t(Path(d))
            else:
                t()
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
