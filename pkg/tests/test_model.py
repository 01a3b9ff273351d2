import math

import numpy as np
import pytest
from scipy.integrate import simpson

from mrfv import model as M
from mrfv import _kernels as K


@pytest.fixture(scope="module")
def sed():
    return M.make_sedimentation_example1()


@pytest.fixture(scope="module")
def traffic():
    return M.make_traffic_example2()


def test_sedimentation_preset_fields(sed):
    p = sed.preset
    assert (p.v_inf, p.K, p.u_max, p.sigma_0, p.u_c, p.beta) == (1e-4, 5.0, 1.0, 1.0, 0.1, 6.0)
    assert (p.delta_rho, p.g, p.H) == (1660.0, 9.81, 1.0)
    assert sed.boundary is M.Boundary.ZERO_FLUX
    assert sed.domain == (0.0, 1.0)
    assert np.all(sed.initial_datum(np.linspace(0, 1, 11)) == 0.08)


def test_sedimentation_flux_values(sed):
    assert sed.flux(0.0) == 0.0
    assert sed.flux(1.0) == 0.0
    assert sed.flux(-0.3) == 0.0
    assert sed.flux(0.5) == pytest.approx(1.5625e-6, rel=1e-14)


def test_sedimentation_norms(sed):
    # b'(0) = v_inf is the largest slope of b on [0, u_max]
    assert sed.lipschitz_b == pytest.approx(1e-4, rel=1e-12)
    assert sed.sup_a == pytest.approx(3.5981e-5, rel=1e-4)


def test_traffic_preset_fields(traffic):
    p = traffic.preset
    assert traffic.boundary is M.Boundary.PERIODIC
    assert traffic.domain == (0.0, 10.0)
    assert p.theta == pytest.approx(0.38833, abs=1e-5)
    assert p.u_c == pytest.approx(16.7512, abs=1e-4)
    assert traffic.flux_modulator.position == 5.0
    x = np.array([0.0, 1.25, 2.5])
    assert np.allclose(traffic.initial_datum(x), 50 * (1 + np.sin(0.4 * np.pi * x)))


def test_traffic_flux_and_norms(traffic):
    assert traffic.flux(10.0) == pytest.approx(700.0, rel=1e-14)
    assert traffic.lipschitz_b == pytest.approx(70.0, rel=1e-12)
    # sup of a on the plateau above u*
    assert traffic.sup_a == pytest.approx(8.0196, rel=1e-4)


def test_traffic_flux_continuous_at_gel_point(traffic):
    uc = traffic.preset.u_c
    lin = traffic.preset.v_max * uc
    log = traffic.preset.v_max * traffic.preset.theta * uc * math.log(traffic.preset.u_max / uc)
    assert log == pytest.approx(lin, rel=1e-9)
    assert traffic.flux(uc * (1 + 1e-12)) == pytest.approx(traffic.flux(uc), rel=1e-9)


def test_integrated_diffusion_vanishes_below_gel_point(sed, traffic):
    for spec in (sed, traffic):
        uc = spec.preset.u_c
        u = np.linspace(0.0, uc, 101)
        assert np.all(M.eval_integrated_diffusion(spec, u) == 0.0)
    assert M.eval_integrated_diffusion(traffic, 16.7512) == 0.0


def test_sedimentation_A_matches_simpson(sed):
    p = sed.preset
    x = np.linspace(p.u_c, 0.2, 10 ** 6 + 1)
    # one-sided integrand: a jumps at u_c
    a = p._a_factor() * (p.u_max - x) ** p.K * x ** (p.beta - 1)
    ref = simpson(a, x=x)
    assert M.eval_integrated_diffusion(sed, 0.2) > 0.0
    assert M.eval_integrated_diffusion(sed, 0.2) == pytest.approx(ref, rel=1e-8)


def test_traffic_A_third_branch(traffic):
    p = traffic.preset
    k, c1, pc, a_star, slope = p.a_constants()
    assert slope == pytest.approx(0.94864, abs=1e-5)
    # the affine branch continues the middle branch at u*, which fixes its intercept
    us = p.u_star
    assert M.eval_integrated_diffusion(traffic, us * (1 + 1e-10)) == pytest.approx(
        M.eval_integrated_diffusion(traffic, us * (1 - 1e-10)), rel=1e-8)
    A100 = M.eval_integrated_diffusion(traffic, 100.0)
    assert A100 == pytest.approx(a_star + slope * (100.0 - us), rel=1e-14)
    assert A100 == pytest.approx(212.7643, abs=0.05)


def test_traffic_A_matches_quadrature(traffic):
    p = traffic.preset
    for u in (20.0, 60.0, 78.0, 150.0, 219.0):
        pieces = [b for b in (p.u_c, p.u_star) if b < u]
        edges = pieces + [u]
        ref = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            x = np.linspace(lo, hi, 200001)
            x[0], x[-1] = lo * (1 + 1e-13), hi * (1 - 1e-13)
            ref += simpson(p.diffusion(x), x=x)
        assert M.eval_integrated_diffusion(traffic, u) == pytest.approx(ref, rel=1e-7)


def test_closed_kernels_match_python(sed, traffic):
    for spec in (sed, traffic):
        u = np.linspace(-0.1 * spec.u_max, 1.1 * spec.u_max, 2001)
        assert np.allclose(K.eval_array(0, u, spec.kernel), spec.flux(u), rtol=1e-12, atol=0)
        A = spec.integrated_diffusion(u)
        assert np.allclose(K.eval_array(1, u, spec.kernel), A, rtol=1e-11, atol=1e-14 * np.max(A))


def test_table_kernel_accuracy(sed):
    kp = M.build_table_kernel(sed)
    u = np.random.default_rng(0).uniform(0, 1, 5000)
    b = sed.flux(u)
    assert np.max(np.abs(K.eval_array(0, u, kp) - b)) <= 1e-9 * np.max(b)
    A = sed.integrated_diffusion(u)
    assert np.max(np.abs(K.eval_array(1, u, kp) - A)) <= 1e-9 * np.max(A)


def test_constant_datum_regular(sed):
    assert M.check_initial_regularity(sed, 128) == (True, 0.0)
    const = M.make_problem("sedimentation-ex1", initial="constant:0.3")
    assert M.check_initial_regularity(const, 128) == (True, 0.0)


def test_step_datum_crossing_gel_point_reports_finite_growth(sed):
    step = sed.with_initial_datum(lambda x: np.where(np.asarray(x) < 0.5, 0.05, 0.3), (0.5,))
    ms = [M.regularity_sum(step, J) for J in (128, 256, 512, 1024)]
    assert all(np.isfinite(ms))
    # a jump in A(u0) makes the sum scale like 1/dx: it doubles with J
    assert np.allclose(np.array(ms[1:]) / np.array(ms[:-1]), 2.0, rtol=1e-6)
    bounded, m = M.check_initial_regularity(step, 128)
    assert not bounded and m == pytest.approx(ms[-1])


def test_smooth_datum_regular(sed):
    smooth = M.make_problem("sedimentation-ex1", initial="smooth")
    ok, m = M.check_initial_regularity(smooth, 128)
    assert ok and m > 0.0


def test_invariants_hold(sed, traffic):
    for spec in (sed, traffic):
        assert all(M.check_invariants(spec).values())


def test_make_problem_overrides_and_errors():
    spec = M.make_problem("sedimentation-ex1", {"v_inf": 2e-4})
    assert spec.flux(0.5) == pytest.approx(2 * 1.5625e-6)
    with pytest.raises(ValueError):
        M.make_problem("nope")
    with pytest.raises(ValueError):
        M.make_problem("sedimentation-ex1", {"bogus": 1})
    with pytest.raises(ValueError):
        M.make_problem("sedimentation-ex1", initial="step:1")
    conv = M.make_problem("traffic-ex2", light_blocks="convective")
    assert conv.flux_modulator.blocks == "convective"


def test_non_integer_exponent_uses_tables():
    spec = M.make_problem("sedimentation-ex1", {"K": 4.5})
    u = np.linspace(0.0, 1.0, 777)
    assert np.allclose(K.eval_array(0, u, spec.kernel), spec.flux(u), rtol=1e-12, atol=0)
    A = spec.integrated_diffusion(u)
    assert np.allclose(K.eval_array(1, u, spec.kernel), A, rtol=1e-8, atol=1e-12 * A.max())


def test_custom_problem():
    spec = M.make_problem("custom", {"flux": [0.0, 1.0, -1.0], "diffusion": [0.1], "u_c": 0.2,
                                     "boundary": "periodic"}, initial="constant:0.5")
    assert spec.flux(0.5) == pytest.approx(0.25)
    assert spec.integrated_diffusion(0.7) == pytest.approx(0.05)
    assert spec.integrated_diffusion(0.1) == 0.0
    assert spec.periodic
    with pytest.raises(ValueError):
        M.make_problem("custom", {"flux": [0.0, 1.0]})


def test_traffic_light_phases():
    light = M.TrafficLight(5.0)
    assert light.value(0.0) == 1.0
    assert light.value(0.2) == 0.0
    assert light.value(1.25) == 0.0
    assert light.value(0.5) == 1.0
    with pytest.raises(ValueError):
        M.TrafficLight(5.0, blocks="sideways")
