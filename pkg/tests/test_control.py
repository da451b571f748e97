import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wecsim.control import (
    AnfisNet,
    MeasurementState,
    PdParams,
    anfis_adapt,
    anfis_consequent_gradient,
    anfis_evaluate,
    anfis_init_from_pd,
    load_anfis,
    measure_frequency_phase,
    normalized_firing,
    pd_control_step,
    save_anfis,
    wrap_angle,
)
from wecsim.grid import BusState
from wecsim.oracles import random_net

TWO_PI = 2 * math.pi
e_f = st.floats(-3.0, 3.0)
e_th = st.floats(-math.pi, math.pi)


def grid_net(m=3, cons=None):
    c = np.linspace(-1.0, 1.0, m)
    if cons is None:
        cons = np.zeros((m * m, 3))
    return AnfisNet(c, np.full(m, 0.5), c, np.full(m, 0.5), np.asarray(cons, float))


# measurement


def test_filter_fixed_point():
    s = MeasurementState(50.0, 0.0)
    out = measure_frequency_phase(s, BusState(), 50.0, 0.0, 1e-4)
    assert out.f_meas == 50.0
    assert out.theta_err == 0.0


def test_filter_step_response_one_time_constant():
    tau = 0.02
    dt = tau / 100
    bus = BusState(omega_e=TWO_PI * 51.0)
    s = MeasurementState(50.0, 0.0)
    for k in range(100):
        s = measure_frequency_phase(s, bus, 50.0, k * dt, dt, tau)
    assert (s.f_meas - 50.0) == pytest.approx(1 - math.exp(-1), abs=0.005)


@given(st.floats(0.0, 10.0))
def test_phase_error_zero_on_reference(t):
    bus = BusState(theta_e=TWO_PI * 50.0 * t)
    out = measure_frequency_phase(MeasurementState(), bus, 50.0, t, 1e-4)
    assert abs(out.theta_err) < 1e-9


@given(st.floats(-1e4, 1e4))
def test_wrap_range(x):
    w = wrap_angle(x)
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(x), abs_tol=1e-9)


def test_wrap_examples():
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)


def test_measure_rejects_bad_dt():
    with pytest.raises(ValueError):
        measure_frequency_phase(MeasurementState(), BusState(), 50.0, 0.0, 0.0)


# PD


def test_pd_examples():
    pd = PdParams(k_p=1000.0, k_d=0.0)
    assert pd_control_step(MeasurementState(50.0, 0.5), 50.0, pd) == 500.0
    pd = PdParams(k_p=0.0, k_d=100.0)
    assert pd_control_step(MeasurementState(50.1, 0.0), 50.0, pd) == pytest.approx(62.83, abs=0.01)


@given(st.floats(-2, 2), e_th, st.floats(-2, 2), e_th, st.floats(-3, 3))
def test_pd_linear(df1, th1, df2, th2, a):
    pd = PdParams()
    u = lambda df, th: pd_control_step(MeasurementState(50.0 + df, th), 50.0, pd)
    lhs = u(df1 + a * df2, th1 + a * th2)
    rhs = u(df1, th1) + a * u(df2, th2)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-6)


def test_pd_validation():
    with pytest.raises(ValueError):
        PdParams(k_p=-1.0)
    with pytest.raises(ValueError, match="pll.tau"):
        PdParams(tau_meas=0.0)


# ANFIS forward pass


@given(e_f, e_th, st.floats(-1e5, 1e5))
def test_constant_consequents_give_constant_output(x, y, b):
    net = grid_net(cons=np.tile((0.0, 0.0, b), (9, 1)))
    assert anfis_evaluate(net, x, y) == pytest.approx(b, rel=1e-12, abs=1e-9)


def test_dominant_rule():
    cons = np.zeros((9, 3))
    cons[4] = (0.0, 0.0, 10.0)
    net = AnfisNet(np.array([-100.0, 0.0, 100.0]), np.full(3, 0.5), np.array([-100.0, 0.0, 100.0]), np.full(3, 0.5), cons)
    assert anfis_evaluate(net, 0.0, 0.0) == pytest.approx(10.0, rel=1e-12)


def test_symmetric_net_is_zero_at_origin():
    pd = PdParams()
    net = anfis_init_from_pd(pd)
    assert anfis_evaluate(net, 0.0, 0.0) == 0.0


@given(e_f, e_th)
def test_output_is_convex_combination(x, y):
    net = random_net(np.random.default_rng(1), m=4)
    c = net.consequents
    ys = c[:, 0] * x + c[:, 1] * y + c[:, 2]
    u = anfis_evaluate(net, x, y)
    assert ys.min() - 1e-6 * np.abs(ys).max() <= u <= ys.max() + 1e-6 * np.abs(ys).max()


@given(st.floats(-50, 50), st.floats(-50, 50))
def test_firing_normalised(x, y):
    wn, _, _ = normalized_firing(grid_net(), x, y)
    assert wn.sum() == pytest.approx(1.0, rel=1e-12)
    assert np.all(wn >= 0)


def test_far_inputs_clamp_to_box():
    net = grid_net()
    assert anfis_evaluate(net, 1e6, -1e6) == anfis_evaluate(net, 1.0, -1.0)


@pytest.mark.parametrize("m", [2, 3, 5, 7])
def test_rule_count(m):
    assert anfis_init_from_pd(PdParams(), m=m).n_rules == m * m


def test_init_validation():
    with pytest.raises(ValueError):
        anfis_init_from_pd(PdParams(), m=1)
    with pytest.raises(ValueError):
        anfis_init_from_pd(PdParams(), ranges=((1.0, -1.0), (-1.0, 1.0)))
    with pytest.raises(ValueError):
        AnfisNet(np.zeros(2), np.ones(2), np.zeros(2), np.ones(2), np.zeros((3, 3)))


def test_init_from_pd_reproduces_pd():
    pd = PdParams()
    net = anfis_init_from_pd(pd)
    rng = np.random.default_rng(0)
    for df, th in zip(rng.uniform(-2, 2, 500), rng.uniform(-math.pi, math.pi, 500)):
        u_pd = pd_control_step(MeasurementState(50.0 + df, th), 50.0, pd)
        u_nn = anfis_evaluate(net, df, th)
        assert u_nn == pytest.approx(u_pd, rel=1e-3, abs=1e-6 * net.scale[2])


# ANFIS adaptation


def test_adapt_without_error_is_identity():
    net = anfis_init_from_pd(PdParams(), learn_rate=1e-3)
    assert anfis_adapt(net, 0.0, 0.0, 123.0, 1e-4) is net


def test_adapt_frozen_when_learn_rate_zero():
    net = anfis_init_from_pd(PdParams(), learn_rate=0.0)
    assert anfis_adapt(net, 0.3, 0.1, 0.0, 1e-4) is net


@settings(deadline=None)
@given(st.floats(-2, 2).filter(lambda v: abs(v) > 1e-3), st.floats(-3, 3).filter(lambda v: abs(v) > 1e-3))
def test_adapt_direction(x, y):
    base = anfis_init_from_pd(PdParams(), learn_rate=1e-6)
    # zero consequents keep the subtraction below exact
    net = AnfisNet(
        base.centers_f, base.widths_f, base.centers_theta, base.widths_theta,
        np.zeros_like(base.consequents), base.learn_rate, base.k_p, base.k_d, base.scale,
    )
    new = anfis_adapt(net, x, y, 0.0, 1e-4)
    eps = net.k_p * y + net.k_d * TWO_PI * x
    delta = new.consequents - net.consequents
    wn, xf, xt = normalized_firing(net, x, y)
    expect = np.outer(wn, (xf, xt, 1.0))
    # each rule moves along its own firing-weighted regressor, signed by the error
    mask = np.abs(expect) > 1e-12 * np.abs(expect).max()
    ratio = delta[mask] / expect[mask]
    assert np.all(np.sign(ratio) == np.sign(eps))
    np.testing.assert_allclose(ratio, ratio[0], rtol=1e-9)


def test_adapt_step_clamped():
    net = anfis_init_from_pd(PdParams(), learn_rate=10.0)
    new = anfis_adapt(net, 2.0, 3.0, 0.0, 1e-4)
    assert np.all(np.abs(new.consequents - net.consequents) <= 0.01 * net.scale + 1e-9)


def test_adapt_rejects_bad_dt():
    with pytest.raises(ValueError):
        anfis_adapt(anfis_init_from_pd(PdParams()), 0.1, 0.1, 0.0, -1.0)


@settings(max_examples=50)
@given(st.integers(0, 10_000), e_f, e_th)
def test_gradient_matches_finite_difference(seed, x, y):
    net = random_net(np.random.default_rng(seed))
    g = anfis_consequent_gradient(net, x, y)
    r = seed % net.n_rules
    h = 1e-3
    for col in range(3):
        up = net.consequents.copy()
        dn = net.consequents.copy()
        up[r, col] += h
        dn[r, col] -= h
        fd = (
            anfis_evaluate(AnfisNet(net.centers_f, net.widths_f, net.centers_theta, net.widths_theta, up), x, y)
            - anfis_evaluate(AnfisNet(net.centers_f, net.widths_f, net.centers_theta, net.widths_theta, dn), x, y)
        ) / (2 * h)
        assert fd == pytest.approx(g[r, col], rel=1e-4, abs=1e-6)


@pytest.mark.slow
def test_adaptation_stays_bounded():
    pd = PdParams()
    net = anfis_init_from_pd(pd, learn_rate=1e-4)
    rng = np.random.default_rng(5)
    n = 1_000_000
    xs = rng.uniform(-2, 2, n)
    ys = rng.uniform(-math.pi, math.pi, n)
    for x, y in zip(xs, ys):
        net = anfis_adapt(net, x, y, 0.0, 50e-6)
    assert np.all(np.isfinite(net.consequents))
    assert np.all(np.abs(net.consequents) <= 1e3 * net.scale)


def test_save_load_round_trip(tmp_path):
    net = anfis_init_from_pd(PdParams(), m=4, learn_rate=3e-4)
    net = anfis_adapt(net, 0.4, -0.7, 0.0, 1e-4)
    path = tmp_path / "net.txt"
    save_anfis(net, path)
    back = load_anfis(path)
    for name in ("centers_f", "widths_f", "centers_theta", "widths_theta", "consequents", "scale"):
        np.testing.assert_array_equal(getattr(back, name), getattr(net, name))
    assert (back.learn_rate, back.k_p, back.k_d, back.plant_sign) == (net.learn_rate, net.k_p, net.k_d, net.plant_sign)


def test_load_rejects_ragged(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("1 2 3\n")
    with pytest.raises(ValueError):
        load_anfis(p)
