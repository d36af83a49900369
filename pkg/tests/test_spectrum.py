import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import frozen
from asygeo.asymptotics import PGrid
from asygeo.errors import DegenerateProfileError, DomainError
from asygeo.manifold import make_model
from asygeo.spectrum import (EigenResult, RadialProfile, SolverConfig, default_radius_schedule,
                             infinity_eigenvalue_sweep, lambda_1p_ball, lambda_1p_manifold,
                             log_sandwich_constant, mazya_f, mazya_mp, mazya_mp_ball,
                             rayleigh_quotient, sandwich_check, tail_limit_log)

H = make_model("hyperbolic", 2)
E = make_model("euclidean", 2)


def test_quotient_of_linear_profile_is_ten():
    t = np.linspace(0, 1, 11)
    assert rayleigh_quotient(E, 1.0, 2.0, RadialProfile(t, 1 - t)) == pytest.approx(10.0, rel=1e-12)


@settings(max_examples=15)
@given(c=st.floats(1e-3, 1e3), p=st.floats(1.2, 20))
def test_quotient_homogeneous(c, p):
    t = np.linspace(0, 2, 30)
    vals = np.cos(np.pi * t / 4)
    vals[-1] = 0.0
    u = RadialProfile(t, vals)
    cu = RadialProfile(t, c * u.values)
    assert rayleigh_quotient(H, 2.0, p, cu) == pytest.approx(rayleigh_quotient(H, 2.0, p, u),
                                                             rel=1e-10)


def test_profile_invariants():
    t = np.linspace(0, 1, 5)
    with pytest.raises(DegenerateProfileError):
        RadialProfile(t, np.ones(5))          # u(R) != 0
    with pytest.raises(DegenerateProfileError):
        RadialProfile(t, np.zeros(5))
    with pytest.raises((DegenerateProfileError, DomainError)):
        RadialProfile(np.array([0.0, 0.5, 0.5, 1.0]), np.array([1.0, 0.5, 0.5, 0.0]))


@pytest.mark.parametrize("M, R, p, want, tol", [
    (E, 1.0, 2.0, frozen.EUCLID_BALL_P2, 1e-5),
    (E, 1.0, 3.0, frozen.EUCLID_BALL_P3, 1e-4),
    (H, 20.0, 2.0, frozen.HYPERBOLIC_R20_P2, 2e-3),
    (H, 20.0, 3.0, frozen.HYPERBOLIC_R20_P3, 2e-3),
], ids=["euclid-p2", "euclid-p3", "hyp-p2", "hyp-p3"])
def test_ball_eigenvalue_against_shooting_oracle(M, R, p, want, tol):
    res = lambda_1p_ball(M, R, p)
    assert res.lam == pytest.approx(want, rel=tol)
    # discrete minimum over a subspace: never below the true eigenvalue
    assert res.lam >= want * (1 - 1e-9)


def test_refinement_converges():
    coarse = lambda_1p_ball(E, 1.0, 2.0, SolverConfig(nodes=100)).lam
    fine = lambda_1p_ball(E, 1.0, 2.0, SolverConfig(nodes=400)).lam
    assert abs(fine - math.pi ** 2) < abs(coarse - math.pi ** 2)
    est = lambda_1p_ball(E, 1.0, 2.0, SolverConfig(nodes=400, estimate_error=True))
    assert abs(est.lam - math.pi ** 2) / math.pi ** 2 <= est.discretization_error


def test_history_never_below_result():
    res = lambda_1p_ball(H, 5.0, 4.0)
    assert min(res.history) == res.log_lambda
    assert res.history[0] >= res.log_lambda


@pytest.mark.parametrize("p", [2.0, 3.0, 6.0])
def test_domain_monotonicity(p):
    lams = [lambda_1p_ball(H, R, p).log_lambda for R in (5.0, 10.0, 20.0)]
    assert lams[0] >= lams[1] >= lams[2]


def test_euclidean_scaling_law():
    # lambda(B_R) = lambda(B_1) / R^p by homogeneity
    one = lambda_1p_ball(E, 1.0, 3.0).log_lambda
    ten = lambda_1p_ball(E, 10.0, 3.0).log_lambda
    assert ten == pytest.approx(one - 3 * math.log(10.0), abs=1e-9)
    assert math.exp(lambda_1p_ball(E, 1e3, 2.0).log_lambda) <= 1e-3


@pytest.mark.parametrize("p", [2.0, 3.0, 10.0])
def test_manifold_eigenvalue_hyperbolic(p):
    res = lambda_1p_manifold(H, p)
    assert res.scaled == pytest.approx(2.0, rel=1e-3)
    assert isinstance(res, EigenResult)


def test_manifold_eigenvalue_euclidean_is_zero():
    res = lambda_1p_manifold(E, 2.0)
    assert res.log_lambda == -math.inf and res.scaled == 0.0


def test_manifold_needs_three_radii():
    with pytest.raises(DomainError):
        lambda_1p_manifold(H, 2.0, [5.0, 10.0])
    assert len(default_radius_schedule(H, 2.0)) == 4


def test_mazya_f_values():
    assert math.exp(mazya_f(H, 30.0, 2.0).log_abs) == pytest.approx(4.0, rel=0.1)
    fs = [mazya_f(H, r, 2.0).log_abs for r in (20.0, 25.0, 30.0)]
    assert fs[0] >= fs[1] >= fs[2]
    for r in (0.5, 2.0, 7.0):
        assert math.exp(mazya_f(E, r, 2.0).log_abs) == pytest.approx(3 / r ** 2, rel=1e-8)


def test_mazya_constant():
    hyp = mazya_mp(H, 2.0)
    assert 1.0 <= math.exp(hyp.log_mp) <= 4.0 + 1e-9
    euc = mazya_mp(E, 2.0)
    assert euc.attained_at_infinity and euc.log_mp == -math.inf
    assert all(hyp.log_mp <= v + 1e-12 for _, v in hyp.samples)


@pytest.mark.parametrize("p", [2.0, 5.0, 20.0])
@pytest.mark.parametrize("M", [H, E], ids=["hyperbolic", "euclidean"])
def test_sandwich(M, p):
    res = sandwich_check(M, p, 10.0)
    assert res.lower_ok and res.upper_ok


@pytest.mark.parametrize("p", [100.0, 1000.0])
def test_sandwich_constant_root_tends_to_one(p):
    root = math.exp(log_sandwich_constant(p) / p)
    assert root == pytest.approx((p - 1) ** ((p - 1) / p) / p, rel=1e-12)
    assert abs(root - 1) < 6 * math.log(p) / p


def test_ball_mazya_below_manifold_bound():
    ball = mazya_mp_ball(H, 10.0, 3.0)
    assert math.isfinite(ball.log_mp)


def test_tail_limit():
    assert math.exp(tail_limit_log(2.0, 2.0)) == pytest.approx(4.0)
    assert tail_limit_log(0.0, 3.0) == -math.inf


def test_eigen_sweep_monotone_hyperbolic():
    rep = infinity_eigenvalue_sweep(H, PGrid.parse("geom:2:50:6"))
    assert rep.limit_estimate == pytest.approx(2.0, rel=0.03)
    assert not any("monotonicity violated" in n for n in rep.notes)
