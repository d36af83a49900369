import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import frozen
from asygeo.errors import DomainError, ExpressionError
from asygeo.manifold import (area_volume, load_manifold, log_area, log_omega, log_volume,
                             make_model, rescale)

BUILTINS = ["hyperbolic", "euclidean", "example31", "example32"]


@pytest.mark.parametrize("n, area", [(1, 2 * math.pi), (2, 4 * math.pi), (3, 2 * math.pi ** 2)])
def test_sphere_area(n, area):
    assert math.exp(log_omega(n)) == pytest.approx(area, rel=1e-14)


def test_hyperbolic_warp():
    M = make_model("hyperbolic", 2)
    assert M.phi(np.array([1.0]))[0] == pytest.approx(math.sinh(1.0), rel=1e-14)
    assert log_area(M, 1.0) == pytest.approx(frozen.HYPERBOLIC_LOG_S1, rel=1e-14)
    assert log_area(M, 1.0) == pytest.approx(2.853903, abs=1e-6)


def test_euclidean_area_and_volume():
    M = make_model("euclidean", 2)
    assert math.exp(log_area(M, 1.0)) == pytest.approx(4 * math.pi, rel=1e-14)
    assert log_volume(M, 1.0) == pytest.approx(math.log(4 * math.pi / 3), rel=1e-10)


def test_hyperbolic_volume_closed_form():
    assert log_volume(make_model("hyperbolic", 2), 1.0) == pytest.approx(frozen.HYPERBOLIC_LOG_V1,
                                                                         rel=1e-10)


def test_example32_area():
    M = make_model("example32", 2)
    assert log_area(M, 2.0) == pytest.approx(frozen.EXAMPLE32_LOG_S2, rel=1e-14)
    t = np.geomspace(1, 1e6, 2000)
    # derivative of t (4 + sin ln t) stays positive
    assert np.all(4 + np.sin(np.log(t)) + np.cos(np.log(t)) > 0)
    assert np.all(np.diff(M.log_area(t)) > 0)


def test_example31_plateau_value_and_volume_bound():
    M = make_model("example31", 2)
    assert log_area(M, 5.0) == pytest.approx(3.0, abs=1e-14)  # plateau [3, x_2]
    assert log_volume(M, 4.0) >= 3.0


@pytest.mark.parametrize("kind", BUILTINS)
def test_volume_strictly_increasing(kind):
    M = make_model(kind, 2)
    r = np.linspace(0.5, 30, 25)
    lv = [log_volume(M, x) for x in r]
    assert all(b > a for a, b in zip(lv, lv[1:]))
    assert all(math.isfinite(log_area(M, x)) for x in r)


@pytest.mark.parametrize("kind", ["hyperbolic", "euclidean", "example32"])
@pytest.mark.parametrize("r", [0.7, 2.0, 9.0])
def test_volume_derivative_is_area(kind, r):
    M = make_model(kind, 2)
    h = 1e-5 * r
    fd = (log_volume(M, r + h) - log_volume(M, r - h)) / (2 * h)
    pair = area_volume(M, r)
    assert fd == pytest.approx(math.exp(pair.log_area - pair.log_volume), rel=1e-7)


def test_pole_domain_error():
    with pytest.raises(DomainError):
        log_area(make_model("hyperbolic", 2), 0.0)


def test_custom_profile_matches_builtin():
    M = make_model("custom", 2, {"phi": "sinh(t)"})
    H = make_model("hyperbolic", 2)
    for t in (0.3, 1.0, 40.0):
        assert log_area(M, t) == pytest.approx(log_area(H, t), rel=1e-12)


def test_custom_rejects_bad_input():
    with pytest.raises(ExpressionError):
        make_model("custom", 2, {"phi": "sinh(t"})
    with pytest.raises(DomainError):
        make_model("custom", 2, {"phi": "cos(t)"})  # turns negative
    with pytest.raises(DomainError):
        make_model("custom", 2, {})
    with pytest.raises(DomainError):
        make_model("warped", 2)
    with pytest.raises(DomainError):
        make_model("hyperbolic", 0)


def test_tabulated_profile_close_to_euclidean():
    pts = [[t, t] for t in np.linspace(0, 5, 21).tolist()]
    M = make_model("tabulated", 2, {"points": pts})
    E = make_model("euclidean", 2)
    assert log_volume(M, 3.0) == pytest.approx(log_volume(E, 3.0), rel=1e-9)
    # linear extension of ln(phi) beyond the table keeps it finite
    assert math.isfinite(log_area(M, 50.0))


def test_load_manifold_variants(tmp_path):
    assert load_manifold("hyperbolic:3").n == 3
    assert load_manifold("euclidean").n == 2
    j = tmp_path / "m.json"
    j.write_text(json.dumps({"kind": "custom", "n": 2, "phi": "t"}))
    assert log_volume(load_manifold(str(j)), 1.0) == pytest.approx(math.log(4 * math.pi / 3),
                                                                   rel=1e-9)
    t = tmp_path / "m.toml"
    t.write_text('kind = "hyperbolic"\nn = 2\nscale = 2.0\n')
    assert load_manifold(str(t)).scale == 2.0
    with pytest.raises(DomainError):
        load_manifold("nowhere:2")
    with pytest.raises(DomainError):
        load_manifold(str(tmp_path / "missing.json"))


@given(lam=st.floats(0.25, 4), t=st.floats(0.1, 10))
def test_rescale_area_law(lam, t):
    # distances scale by lam, areas of n-spheres by lam^n
    H = make_model("hyperbolic", 2)
    R = rescale(H, lam)
    assert log_area(R, lam * t) == pytest.approx(log_area(H, t) + 2 * math.log(lam), rel=1e-12)
