import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mrfv import time_integrator as T


def decay(t, u):
    return -u


def zero(t, u):
    return np.zeros_like(u)


def test_tableau_consistency():
    tab = T.TABLEAU
    assert sum(tab.b_hat) == pytest.approx(1.0)
    assert sum(tab.b_check) == pytest.approx(1.0)
    assert tab.c == (0.0, 1.0, 0.5)
    assert (tab.a21, tab.a31, tab.a32, tab.order) == (1.0, 0.25, 0.25, 3)


def test_limiter_examples():
    assert T.limiter(0.0, 1.0) == pytest.approx(0.1)
    assert T.limiter(1e9, 1.0) == pytest.approx(0.01)
    assert T.limiter(2.0, 2.0) == pytest.approx(0.09 * math.exp(-1) + 0.01)
    assert T.limiter(2.0, 2.0) == pytest.approx(0.043109, abs=1e-6)


def test_new_dt_examples():
    assert T.new_dt(0.3, 1e-3, 1e-3, 5.0) == pytest.approx(0.3, rel=1e-15)
    # candidate dt/2 is far outside the cap S/2 = 0.005
    assert T.new_dt(0.3, 8e-3, 1e-3, 1e6) == pytest.approx(0.3 * (1 - 0.005), rel=1e-14)
    assert T.new_dt(0.3, 1e-12, 1e-3, 0.0) == pytest.approx(0.3 * 1.05, rel=1e-14)
    assert T.new_dt(0.3, 0.0, 1e-3, 0.0) == pytest.approx(0.3 * 1.05, rel=1e-14)
    # inside the cap the candidate is returned
    assert T.new_dt(1.0, 1e-3 / 1.003 ** 3, 1e-3, 0.0) == pytest.approx(1.003, rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(dt=st.floats(1e-6, 1e3), ratio=st.floats(1e-6, 1e6), t=st.floats(0, 1e4))
def test_new_dt_change_is_capped(dt, ratio, t):
    s = T.limiter(t, dt)
    out = T.new_dt(dt, 1e-3 * ratio, 1e-3, t)
    assert abs(out - dt) <= 0.5 * s * dt * (1 + 1e-12)
    # direction follows the error ratio
    if ratio > 1 + 1e-9:
        assert out < dt
    elif ratio < 1 - 1e-9:
        assert out > dt


def test_new_dt_validation():
    with pytest.raises(ValueError):
        T.new_dt(0.0, 1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        T.limiter(0.0, 0.0)


def test_rk3_zero_divergence():
    u = np.random.default_rng(0).random(10)
    assert np.array_equal(T.rk3_step(zero, u, 0.1), u)


def test_rk3_exponential():
    out = T.rk3_step(decay, np.array([1.0]), 0.1)[0]
    assert out == pytest.approx(0.904833333333, abs=1e-12)
    assert abs(out - math.exp(-0.1)) < 0.1 ** 4


def test_rk3_third_order():
    errs = [abs(T.rk3_step(decay, np.array([1.0]), h)[0] - math.exp(-h)) for h in (0.1, 0.05)]
    # local error O(h^4)
    assert errs[0] / errs[1] == pytest.approx(16.0, rel=0.05)


def test_rk3_uses_stage_times():
    # u' = t: exact integral dt^2/2 + t dt is reproduced by the quadrature
    out = T.rk3_step(lambda t, u: np.full_like(u, t), np.array([0.0]), 0.5, t=1.0)
    assert out[0] == pytest.approx(0.5 * 0.25 + 0.5, rel=1e-15)


def test_rkf_zero_divergence():
    ctrl = T.RkfController(dt=0.2, delta_desired=1e-3)
    u = np.ones(4)
    new, delta, ctrl2 = T.rkf_step(zero, u, ctrl)
    assert delta == 0.0
    assert np.array_equal(new, u)
    assert ctrl2.dt == pytest.approx(0.2 * 1.05)
    assert ctrl2.t == pytest.approx(0.2)


def test_rkf_delta_scales_with_third_power():
    deltas = []
    for h in (0.04, 0.02):
        _, d, _ = T.rkf_step(decay, np.array([1.0, 0.5]), T.RkfController(dt=h, delta_desired=1e-3))
        deltas.append(d)
    assert deltas[0] / deltas[1] == pytest.approx(8.0, abs=2.0)


def test_rkf_respects_dt_max():
    ctrl = T.RkfController(dt=1.0, delta_desired=1.0, dt_max=1.01)
    _, _, ctrl2 = T.rkf_step(zero, np.ones(2), ctrl)
    assert ctrl2.dt == 1.01


def test_controller_validation():
    with pytest.raises(ValueError):
        T.RkfController(dt=0.0, delta_desired=1.0)
    with pytest.raises(ValueError):
        T.RkfController(dt=1.0, delta_desired=0.0)
