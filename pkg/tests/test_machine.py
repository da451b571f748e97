import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wecsim.machine import (
    DqVoltage,
    MachineParams,
    MachineState,
    SingularInductanceError,
    copper_losses,
    electromagnetic_torque,
    machine_derivatives,
    steady_state_currents,
    steady_state_phasor_oracle,
    stator_power,
    total_inductances,
)

P = MachineParams()
current = st.floats(-500, 500, allow_nan=False)
volt = st.floats(-400, 400, allow_nan=False)
speed = st.floats(100, 200, allow_nan=False)


def states():
    return st.builds(MachineState, current, current, current, current, speed, st.floats(-10, 10))


@pytest.mark.parametrize(
    "l_ls, l_lr, l_m, expected",
    [
        (0.0, 0.0, 0.01, (0.01, 0.01)),
        (0.002, 0.002, 0.05, (0.052, 0.052)),
        (0.001, 0.003, 0.04, (0.041, 0.043)),
    ],
)
def test_total_inductances(l_ls, l_lr, l_m, expected):
    got = total_inductances(SimpleNamespace(l_ls=l_ls, l_lr=l_lr, l_m=l_m))
    assert got == pytest.approx(expected, abs=1e-15)


def test_params_validation():
    with pytest.raises(ValueError, match="machine.r_s"):
        MachineParams(r_s=-1.0)
    with pytest.raises(ValueError, match="pole_pairs"):
        MachineParams(pole_pairs=0)
    with pytest.raises(ValueError):
        MachineParams(pole_pairs=1.5)
    assert issubclass(SingularInductanceError, ValueError)


def test_electrical_accessors():
    s = MachineState(omega_m=150.0, theta_m=0.25)
    assert s.electrical_speed(2) == 300.0
    assert s.electrical_angle(2) == 0.5


def test_torque_examples():
    assert electromagnetic_torque(MachineState(), P) == 0.0
    p = MachineParams(l_m=0.04)
    assert electromagnetic_torque(MachineState(i_qs=10.0, i_dr=5.0), p) == pytest.approx(6.0, rel=1e-12)


@given(current, current)
def test_torque_cancels_without_rotor_current(i_qs, i_ds):
    assert electromagnetic_torque(MachineState(i_qs=i_qs, i_ds=i_ds), P) == 0.0


def test_derivatives_at_origin_are_zero():
    d = machine_derivatives(MachineState(), DqVoltage(), 2 * math.pi * 50, 0.0, P)
    assert all(v == 0.0 for v in d.as_tuple())


def test_derivatives_voltage_step():
    l_s, l_r = total_inductances(P)
    det = l_s * l_r - P.l_m**2
    d = machine_derivatives(MachineState(), DqVoltage(u_qs=100.0), 314.0, 0.0, P)
    assert d.i_qs == pytest.approx(100 * l_r / det, rel=1e-12)
    assert d.i_qr == pytest.approx(-100 * P.l_m / det, rel=1e-12)
    assert d.i_ds == 0.0 and d.i_dr == 0.0 and d.omega_m == 0.0


@given(states())
def test_torque_balance_stops_acceleration(s):
    t_e = electromagnetic_torque(s, P)
    d = machine_derivatives(s, DqVoltage(u_qs=300.0), 314.0, t_e, P)
    assert d.omega_m == 0.0
    assert d.theta_m == s.omega_m


@given(states(), volt, volt, volt, volt, st.floats(-5, 5))
def test_derivatives_linear_in_voltage(s, a, b, c, d, alpha):
    w = 314.0
    f0 = np.array(machine_derivatives(s, DqVoltage(), w, 0.0, P).as_tuple()[:4])
    f1 = np.array(machine_derivatives(s, DqVoltage(a, b, c, d), w, 0.0, P).as_tuple()[:4])
    fa = np.array(machine_derivatives(s, DqVoltage(alpha * a, alpha * b, alpha * c, alpha * d), w, 0.0, P).as_tuple()[:4])
    scale = np.abs(f0).max() + np.abs(f1 - f0).max() * max(1.0, abs(alpha)) + 1.0
    np.testing.assert_allclose(fa - f0, alpha * (f1 - f0), atol=1e-9 * scale)


@given(states(), volt, volt, st.floats(200, 400))
def test_instantaneous_energy_balance(s, u_qs, u_ds, w):
    """Stator power = copper losses + d(magnetic energy)/dt + mechanical power."""
    v = DqVoltage(u_qs, u_ds)
    d = machine_derivatives(s, v, w, 0.0, P)
    l_s, l_r = total_inductances(P)
    dw_mag = 1.5 * (
        l_s * (s.i_qs * d.i_qs + s.i_ds * d.i_ds)
        + l_r * (s.i_qr * d.i_qr + s.i_dr * d.i_dr)
        + P.l_m * (d.i_qs * s.i_qr + s.i_qs * d.i_qr + d.i_ds * s.i_dr + s.i_ds * d.i_dr)
    )
    p_in, _ = stator_power(s, v)
    resid = p_in - copper_losses(s, P) - dw_mag - electromagnetic_torque(s, P) * s.omega_m
    scale = abs(p_in) + abs(dw_mag) + abs(electromagnetic_torque(s, P) * s.omega_m) + 1.0
    assert abs(resid) <= 1e-9 * scale


def test_stator_power_examples():
    assert stator_power(MachineState(), DqVoltage()) == (0.0, 0.0)
    assert stator_power(MachineState(i_qs=10.0), DqVoltage(u_qs=100.0)) == (1500.0, 0.0)
    assert stator_power(MachineState(i_ds=10.0), DqVoltage(u_qs=100.0)) == (0.0, 1500.0)


def test_phasor_oracle_limits():
    v = P.rated_voltage / math.sqrt(3)
    t0, i0, _ = steady_state_phasor_oracle(P, 0.0, v, 50.0)
    assert t0 == 0.0
    assert i0 == pytest.approx(v / abs(P.r_s + 1j * 2 * math.pi * 50 * (P.l_ls + P.l_m)))
    assert abs(steady_state_phasor_oracle(P, 1e-9, v, 50.0)[0]) < 1e-3


@pytest.mark.parametrize("s", [0.002, 0.005, 0.01])
def test_phasor_motor_generator_symmetry(s):
    v = P.rated_voltage / math.sqrt(3)
    t_m = steady_state_phasor_oracle(P, s, v, 50.0)[0]
    t_g = steady_state_phasor_oracle(P, -s, v, 50.0)[0]
    assert t_m > 0 > t_g
    assert abs(t_g) == pytest.approx(t_m, rel=0.1)


@pytest.mark.parametrize("slip", [-0.05, -0.02, -0.01, 0.0, 0.01, 0.02, 0.05])
def test_linear_steady_state_matches_phasor(slip):
    """dq steady state from the 4x4 solve versus the complex equivalent circuit."""
    w = 2 * math.pi * 50
    v_ph = P.rated_voltage / math.sqrt(3)
    st_dq = steady_state_currents(P, DqVoltage(u_qs=v_ph * math.sqrt(2)), w, (1 - slip) * w / 2)
    t_ph, i_ph, p_ph = steady_state_phasor_oracle(P, slip, v_ph, 50.0)
    assert electromagnetic_torque(st_dq, P) == pytest.approx(t_ph, rel=1e-9, abs=1e-9)
    assert math.hypot(st_dq.i_qs, st_dq.i_ds) / math.sqrt(2) == pytest.approx(i_ph, rel=1e-9)
    assert stator_power(st_dq, DqVoltage(u_qs=v_ph * math.sqrt(2)))[0] == pytest.approx(p_ph, rel=1e-9)
    d = machine_derivatives(st_dq, DqVoltage(u_qs=v_ph * math.sqrt(2)), w, 0.0, P)
    assert max(abs(x) for x in d.as_tuple()[:4]) < 1e-6 * max(abs(x) for x in st_dq.as_tuple()[:4])


@settings(deadline=None, max_examples=20)
@given(st.floats(-0.06, 0.06).filter(lambda s: abs(s) > 1e-3))
def test_steady_state_torque_is_monotone_through_synchronism(slip):
    v = P.rated_voltage / math.sqrt(3)
    t = steady_state_phasor_oracle(P, slip, v, 50.0)[0]
    assert math.copysign(1.0, t) == math.copysign(1.0, slip)
