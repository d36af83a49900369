import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

import frozen
from asygeo.asymptotics import PGrid
from asygeo.capacity import (ball_independence_check, capacitary_potential, domain_bracket,
                             flux_upper_bound, infinity_capacity_sweep, isoperimetric_lower_bound,
                             log_cap_ball, log_cap_condenser, radius_for_volume)
from asygeo.errors import DomainError, ParabolicError
from asygeo.manifold import log_volume, make_model

H = make_model("hyperbolic", 2)
E = make_model("euclidean", 2)


def test_euclidean_p2_is_4pi():
    c = log_cap_ball(E, 1.0, 2.0)
    assert math.exp(c.log_cap) == pytest.approx(frozen.EUCLID_CAP2, rel=1e-9)
    assert c.scaled == pytest.approx(2 * math.sqrt(4 * math.pi), rel=1e-9)


@pytest.mark.parametrize("p", [3.0, 4.5, 100.0])
def test_euclidean_parabolic_for_p_at_least_3(p):
    c = log_cap_ball(E, 1.0, p)
    assert c.divergent and c.is_zero and c.scaled == 0.0


@pytest.mark.parametrize("p", [1.5, 2.5, 2.99])
def test_euclidean_finite_below_3(p):
    # int_1^inf (4 pi t^2)^{1/(1-p)} dt = (4 pi)^{1/(1-p)} / (2/(p-1) - 1)
    a = 2.0 / (p - 1.0)
    want = (1 - p) * (math.log(4 * math.pi) / (1 - p) - math.log(a - 1))
    assert log_cap_ball(E, 1.0, p).log_cap == pytest.approx(want, rel=1e-8)


def test_hyperbolic_scaled_capacities_approach_two_from_above():
    vals = [log_cap_ball(H, 1.0, p).scaled for p in (10, 100, 1000, 10000)]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert vals[-1] == pytest.approx(2.0, rel=2e-3)
    assert all(v > 2.0 for v in vals)


@given(r1=st.floats(0.2, 5), dr=st.floats(0.01, 5), p=st.floats(1.1, 50))
def test_ball_capacity_monotone_in_radius(r1, dr, p):
    assert log_cap_ball(H, r1, p).log_cap <= log_cap_ball(H, r1 + dr, p).log_cap + 1e-9


@given(r=st.floats(0.1, 10), p=st.floats(1.05, 1e3))
def test_flux_bound_is_the_ball_capacity(r, p):
    assert flux_upper_bound(H, r, p) == log_cap_ball(H, r, p)


def test_potential():
    assert capacitary_potential(H, 1.0, 2.0, 1.0) == 1.0
    assert capacitary_potential(E, 1.0, 2.0, 2.0) == pytest.approx(0.5, rel=1e-9)
    assert capacitary_potential(H, 1.0, 2.0, 20.0) < 1e-8
    xs = [1.0, 1.5, 2.0, 4.0, 8.0]
    us = [capacitary_potential(H, 1.0, 3.0, x) for x in xs]
    assert all(a > b for a, b in zip(us, us[1:]))
    with pytest.raises(ParabolicError):
        capacitary_potential(E, 1.0, 3.0, 2.0)
    with pytest.raises(DomainError):
        capacitary_potential(H, 1.0, 2.0, 0.5)


def test_condenser_closed_form_and_order():
    c = log_cap_condenser(E, 1.0, 2.0, 2.0)
    assert math.exp(c.log_cap) == pytest.approx(frozen.EUCLID_CONDENSER_12_P2, rel=1e-9)
    for p in (1.5, 3.0, 30.0):
        assert log_cap_condenser(H, 1, 3, p).log_cap <= log_cap_condenser(H, 1, 2, p).log_cap
    with pytest.raises(DomainError):
        log_cap_condenser(H, 2.0, 1.0, 2.0)


@pytest.mark.parametrize("M", [H, E], ids=["hyperbolic", "euclidean"])
def test_condenser_distance_law(M):
    errs = [abs(log_cap_condenser(M, 1, 2, p).root - 1.0) for p in (10, 100, 1000)]
    assert errs[-1] < 0.01
    assert errs[0] > errs[1] > errs[2]


def test_isoperimetric_equality_case():
    v1 = math.exp(log_volume(H, 1.0))
    lb = isoperimetric_lower_bound(H, v1, 2.0)
    assert lb.log_abs == pytest.approx(log_cap_ball(H, 1.0, 2.0).log_cap, rel=1e-9)
    assert isoperimetric_lower_bound(E, 4 * math.pi / 3, 2.0).log_abs == pytest.approx(
        math.log(4 * math.pi), rel=1e-8)
    vols = [1.0, 5.0, 50.0]
    lbs = [isoperimetric_lower_bound(H, v, 3.0).log_abs for v in vols]
    assert lbs[0] <= lbs[1] <= lbs[2]
    assert radius_for_volume(E, 4 * math.pi / 3) == pytest.approx(1.0, rel=1e-12)


def test_domain_bracket_orders():
    lo, hi = domain_bracket(H, 1.0, 2.0, 5.0)
    assert lo.log_cap <= hi.log_cap


def test_sweeps():
    grid = PGrid.parse("geom:10:1e4:12")
    rep = infinity_capacity_sweep(H, 1.0, grid)
    assert rep.limit_estimate == pytest.approx(2.0, rel=0.02)
    assert rep.liminf_estimate <= rep.limsup_estimate
    zero = infinity_capacity_sweep(E, 1.0, PGrid.parse("3,5,10"))
    assert zero.limit_estimate == 0.0 and zero.limsup_estimate == 0.0
    assert infinity_capacity_sweep(make_model("example31", 2), 1.0, grid).limsup_estimate == 0.0


def test_ball_independence():
    assert ball_independence_check(H, 1.0, 2.0, 1e3).ratio == pytest.approx(1.0, rel=0.01)
    assert ball_independence_check(H, 1.5, 1.5, 50).ratio == 1.0
    flagged = ball_independence_check(E, 1.0, 2.0, 2.5)
    assert math.isfinite(flagged.ratio)
    with pytest.raises(ParabolicError):
        ball_independence_check(E, 1.0, 2.0, 10.0)


@pytest.mark.parametrize("p", [1.0, 0.5, -2.0, math.inf, math.nan])
def test_p_must_exceed_one(p):
    with pytest.raises(DomainError, match="p must exceed 1"):
        log_cap_ball(H, 1.0, p)


@pytest.mark.parametrize("p", [3.5, 4.0, 4.5])
def test_polynomial_profile_against_beta_oracle(p):
    # S = 4 pi t^2 (1+t)^2 decays as a power law; with x = t/(1+t) the tail
    # integral is an incomplete Beta function
    from scipy.special import beta as B, betainc

    M = make_model("custom", 2, {"phi": "t*(1+t)"})
    a = 1.0 / (1.0 - p)
    al, be = 1 + 2 * a, -4 * a - 1
    exact = a * math.log(4 * math.pi) + math.log(B(al, be) * (1 - betainc(al, be, 0.5)))
    assert log_cap_ball(M, 1.0, p).log_cap == pytest.approx((1 - p) * exact, rel=1e-9)


@pytest.mark.parametrize("p", [5.0, 6.0])
def test_polynomial_profile_parabolic(p):
    M = make_model("custom", 2, {"phi": "t*(1+t)"})
    assert log_cap_ball(M, 1.0, p).is_zero
