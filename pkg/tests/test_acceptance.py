"""Every acceptance criterion at its stated tolerance, one recorded line each."""

import math
from fractions import Fraction

import numpy as np
import pytest

import frozen
from asygeo.asymptotics import PGrid, volume_entropy
from asygeo.capacity import infinity_capacity_sweep, log_cap_ball, log_cap_condenser
from asygeo.chain import verify_chain
from asygeo.examples import (example31_capacity, example31_entropy, example32_bound_chain,
                             example32_capacity_oscillation)
from asygeo.manifold import make_model, rescale
from asygeo.quadrature import DEFAULT_SPEC, integrate, log_add
from asygeo.spectrum import (SolverConfig, infinity_eigenvalue_sweep, lambda_1p_ball,
                             lambda_1p_manifold, mazya_f, sandwich_check, tail_limit_log)

H = make_model("hyperbolic", 2)
E = make_model("euclidean", 2)
BUILTINS = ["hyperbolic", "euclidean", "example31", "example32"]


def rel(a, b):
    return abs(a - b) / abs(b)


def test_hyperbolic_equality_chain(criterion):
    v = verify_chain(H)
    errs = [rel(x, 2.0) for x in v.values]
    ok = v.ok and max(errs) <= 0.03
    criterion(1, ok, "entropy, C, Lambda, Mazya = " + ", ".join(f"{x:.6f}" for x in v.values)
              + f"; max rel err {max(errs):.2e} (tol 3e-2)")
    assert ok


def test_euclidean_zeros(criterion):
    parabolic = [log_cap_ball(E, 1.0, p) for p in (3.0, 4.0, 10.0, 100.0)]
    cap2 = math.exp(log_cap_ball(E, 1.0, 2.0).log_cap)
    v = verify_chain(E)
    ok_div = all(c.divergent and c.log_cap == -math.inf for c in parabolic)
    ok_cap2 = rel(cap2, frozen.EUCLID_CAP2) <= 1e-6
    ok_chain = v.ok and all(abs(x) <= 1e-3 for x in v.values)
    ok = ok_div and ok_cap2 and ok_chain
    criterion(2, ok, f"Cap_p=0 via divergence for p=3,4,10,100: {ok_div}; "
              f"Cap_2 rel err {rel(cap2, frozen.EUCLID_CAP2):.1e} (tol 1e-6); "
              f"chain {tuple(round(x, 6) for x in v.values)} (tol 1e-3)")
    assert ok


# The R = 20 ball value of lambda_{1,3} sits 7.25% above 8/27 according to the
# independent shooting oracle as well as the solver, so the literal 7% check
# cannot pass; the manifold-level value is reported alongside.
@pytest.mark.xfail(strict=True, reason="lambda_{1,3} of the R=20 hyperbolic ball is 7.25% "
                   "above 8/27 (shooting oracle agrees); see decisions ledger")
def test_eigen_solver_oracles(criterion):
    eu = lambda_1p_ball(E, 1.0, 2.0, SolverConfig(nodes=400)).lam
    h2 = lambda_1p_ball(H, 20.0, 2.0).lam
    h3 = lambda_1p_ball(H, 20.0, 3.0).lam
    h3_manifold = lambda_1p_manifold(H, 3.0).lam
    parts = {
        "euclid p=2 vs pi^2 (1%)": (rel(eu, math.pi ** 2), 0.01),
        "hyp R=20 p=2 vs 1 (5%)": (rel(h2, 1.0), 0.05),
        "hyp R=20 p=3 vs 8/27 (7%)": (rel(h3, 8 / 27), 0.07),
    }
    ok = all(e <= tol for e, tol in parts.values())
    detail = "; ".join(f"{k}: {e:.4f}" for k, (e, _) in parts.items())
    detail += (f"; oracle ball value {frozen.HYPERBOLIC_R20_P3:.6f}, solver {h3:.6f}; "
               f"manifold-level lambda_1,3 {h3_manifold:.6f} rel err "
               f"{rel(h3_manifold, 8 / 27):.1e}")
    criterion(3, ok, detail)
    assert ok


def test_sandwich(criterion):
    results = [(M.kind, p, sandwich_check(M, p, 10.0, slack=1e-3))
               for M in (H, E) for p in (2.0, 5.0, 20.0)]
    ok = all(r.lower_ok and r.upper_ok for _, _, r in results)
    bad = [f"{k} p={p:g}" for k, p, r in results if not (r.lower_ok and r.upper_ok)]
    criterion(4, ok, f"6 cases, slack 1e-3; failures: {bad or 'none'}")
    assert ok


def test_monotonicity_suite(criterion):
    grid = PGrid.parse("geom:2:50:12").values
    ball_ok = {}
    for kind in BUILTINS:
        M = make_model(kind, 2)
        R = 3.0 if kind == "example32" else 5.0
        vals = [p * math.exp(lambda_1p_ball(M, R, p).log_lambda / p) for p in grid]
        ball_ok[kind] = all(b >= a * (1 - 1e-9) for a, b in zip(vals, vals[1:]))
    man = {}
    for M in (H, E):
        rep = infinity_eigenvalue_sweep(M, PGrid.parse("geom:2:50:12"), mono_rtol=1e-3)
        man[M.kind] = not any("monotonicity violated" in n for n in rep.notes)
    f_ok = {}
    for kind in BUILTINS:
        M = make_model(kind, 2)
        ent = volume_entropy(M)
        if not ent.condition_1_2:
            continue
        rs = [r for r, _ in ent.ratio_tail[len(ent.ratio_tail) // 2:]]
        for p in (2.0, 5.0):
            fs = [math.exp(mazya_f(M, r, p).log_abs) for r in rs]
            # Cap = I^(1-p) and V each carry rel_tol, so f is resolved to (p + 1) rel_tol
            slack = (p + 1) * DEFAULT_SPEC.rel_tol
            f_ok[(kind, p)] = all(b <= a * (1 + slack) for a, b in zip(fs, fs[1:]))
    tails = {}
    V = volume_entropy(H).entropy
    for p in (2.0, 5.0):
        want = V ** p / (p - 1) ** (p - 1)
        tails[p] = rel(math.exp(mazya_f(H, 60.0, p).log_abs), want)
    ok = (all(ball_ok.values()) and all(man.values()) and all(f_ok.values())
          and all(e <= 0.02 for e in tails.values()))
    criterion(5, ok, f"balls {ball_ok}; manifold (1e-3) {man}; "
              f"f nonincreasing where condition holds {sorted(f_ok)} -> {all(f_ok.values())}; "
              f"f tail rel err p=2 {tails[2.0]:.1e}, p=5 {tails[5.0]:.1e} (tol 2e-2)")
    assert ok


def test_condenser_distance_law(criterion):
    info = {}
    for M in (H, E):
        errs = [abs(log_cap_condenser(M, 1.0, 2.0, p).root - 1) for p in (10.0, 100.0, 1000.0)]
        info[M.kind] = errs
    ok = all(e[-1] <= 0.01 and e[0] > e[1] > e[2] for e in info.values())
    criterion(6, ok, "; ".join(f"{k} errors at p=10,100,1000: "
                               + ", ".join(f"{e:.2e}" for e in errs)
                               for k, errs in info.items()))
    assert ok


def test_staircase(criterion):
    b = example31_capacity(3.0, K_terms=4)
    pts = example31_entropy(4)
    below = b.log_neg_log_bound > math.log(40.0)
    ratio_ok = pts[2].lower > 0.9999
    v = verify_chain(make_model("example31", 2), "geom:10:1e3:8")
    record = v.capacity == 0.0 and abs(v.entropy - 1.0) <= 1e-3 and v.capacity < v.entropy
    ok = below and ratio_ok and record
    criterion(7, ok, f"ln(-ln bound) = {b.log_neg_log_bound:.3e} > ln 40; "
              f"ratio at k=3 {pts[2].lower!r}; C = {v.capacity}, V = {v.entropy:.6f}")
    assert ok


def test_oscillating_profile(criterion):
    a = example32_bound_chain()
    rep = example32_capacity_oscillation((2, 3, 4))
    spread = rep.limsup_estimate - rep.liminf_estimate
    checks = {
        "gap<-1e-3": a.gap < -1e-3,
        "A<0.0009": a.A <= a.A_bound < 0.0009,
        "C<1e-38": (a.C_sign <= 0 or a.log_abs_C <= a.log_C_bound)
        and a.log_C_bound < -38 * math.log(10),
        "B<-0.008": a.B <= a.B_bound < -0.008,
        "tail=1/240": a.series_tail_bound == Fraction(1, 240)
        and a.series_tail_actual <= 1 / 240,
        "spread": spread >= a.separation - 1e-3,
    }
    ok = all(checks.values())
    criterion(8, ok, f"gap {a.gap:.6f}; spread {spread:.6f} vs separation {a.separation:.6f}; "
              f"checks {checks}")
    assert ok


def test_scaling_covariance(criterion):
    H2 = rescale(H, 2.0)
    e1, e2 = volume_entropy(H).entropy, volume_entropy(H2).entropy
    grid = PGrid.parse("geom:10:1e4:12")
    c1 = infinity_capacity_sweep(H, 1.0, grid).limit_estimate
    c2 = infinity_capacity_sweep(H2, 2.0, grid).limit_estimate
    eg = PGrid.parse("geom:2:100:8")
    l1 = infinity_eigenvalue_sweep(H, eg).limit_estimate
    l2 = infinity_eigenvalue_sweep(H2, eg).limit_estimate
    errs = {"entropy": rel(e2, e1 / 2), "C": rel(c2, c1 / 2), "Lambda": rel(l2, l1 / 2)}
    ok = all(e <= 0.01 for e in errs.values())
    criterion(9, ok, "rel err of halving: " + ", ".join(f"{k} {e:.1e}" for k, e in errs.items())
              + " (tol 1e-2)")
    assert ok


def _closed_form_cases(rng):
    cases = []
    for i in range(20):
        kind = i % 5
        if kind == 0:
            k, b = int(rng.integers(0, 5)), rng.uniform(0.5, 3.0)
            f = (lambda k, b: lambda t: k * np.log(np.maximum(t, 1e-300)) - b * t)(k, b)
            cases.append((f"t^{k} e^(-{b:.3f} t)", f, 0.0, math.inf, (),
                          math.factorial(k) / b ** (k + 1), 1e-300 if k else 0.0))
        elif kind == 1:
            c, a0 = rng.uniform(-5, 5), rng.uniform(-2, 2)
            b0 = a0 + rng.uniform(0.5, 4)
            cases.append((f"e^({c:.3f} t)", (lambda c: lambda t: c * t)(c), a0, b0, (),
                          (math.exp(c * b0) - math.exp(c * a0)) / c, 0.0))
        elif kind == 2:
            s = rng.uniform(1.5, 4.0)
            cases.append((f"t^-{s:.3f}", (lambda s: lambda t: -s * np.log(t))(s), 1.0,
                          math.inf, (), 1 / (s - 1), 0.0))
        elif kind == 3:
            beta = rng.uniform(0.2, 5.0)
            cases.append((f"e^(-{beta:.3f} t^2)", (lambda b: lambda t: -b * t * t)(beta), 0.0,
                          math.inf, (), 0.5 * math.sqrt(math.pi / beta), 0.0))
        else:
            w = rng.uniform(0.5, 6.0)
            L = (math.pi / 2 + rng.uniform(-1.0, 1.0)) / w + 2 * math.pi / w * rng.integers(0, 4)
            cases.append((f"cos({w:.3f} t) on [0,{L:.3f}]",
                          (lambda w: lambda t: np.log(np.abs(np.cos(w * t))))(w), 0.0, L,
                          (lambda w: lambda t: np.sign(np.cos(w * t)))(w),
                          math.sin(w * L) / w, 0.0))
    return cases


def test_quadrature_oracles(criterion):
    rng = np.random.default_rng(20261016)
    tol = DEFAULT_SPEC.rel_tol
    worst, failures = 0.0, []
    for name, f, a, b, sign, exact, _ in _closed_form_cases(rng):
        if sign:
            w = float(name.split("(")[1].split()[0])
            zeros = [(k + 0.5) * math.pi / w for k in range(int(b * w / math.pi) + 1)]
            res = integrate(f, a, b, sign=sign, breakpoints=[z for z in zeros if a < z < b])
        else:
            res = integrate(f, a, b)
        err = rel(float(res.value), exact)
        worst = max(worst, err)
        if err > tol:
            failures.append((name, err))
    # additivity and log-scaling on a fixed smooth integrand
    g = lambda t: -0.5 * t + np.sin(3 * t)
    add_errs, shift_errs = [], []
    for _ in range(10):
        a0, m, w = rng.uniform(0, 3), rng.uniform(0.1, 3), rng.uniform(0.1, 3)
        whole = integrate(g, a0, a0 + m + w).log
        parts = log_add(integrate(g, a0, a0 + m).log, integrate(g, a0 + m, a0 + m + w).log)
        add_errs.append(abs(parts - whole))
        c = rng.uniform(-700, 700)
        shifted = integrate(lambda t: g(t) + c, a0, a0 + m).log
        shift_errs.append(abs(shifted - c - integrate(g, a0, a0 + m).log) / max(1, abs(c)))
    machine = 64 * np.finfo(float).eps
    ok = not failures and max(add_errs) <= 1e-12 and max(shift_errs) <= machine
    criterion(10, ok, f"20 closed forms, worst rel err {worst:.1e} (tol {tol:g}), "
              f"failures {failures or 'none'}; additivity {max(add_errs):.1e}; "
              f"log shift {max(shift_errs):.1e}")
    assert ok
