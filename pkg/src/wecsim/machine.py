"""Park dq model of the squirrel-cage induction generator.

All quantities are in SI units, amplitude-invariant dq scaling (peak phase
values), motor current convention: a positive ``p_active`` is drawn from the
bus and a positive torque accelerates the rotor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np


class SingularInductanceError(ValueError):
    """The per-axis inductance matrix is not invertible."""


@dataclass(frozen=True)
class MachineParams:
    """
    Induction machine constants.

    Parameters
    ----------
    r_s, r_r : float
        Stator and (stator-referred) rotor resistance (ohm).
    l_ls, l_lr : float
        Stator and rotor leakage inductance (H).
    l_m : float
        Magnetizing inductance (H).
    j_inertia : float
        Combined rotor and load inertia. The swing law uses ``1/(2*j_inertia)``;
        pass half the SI inertia in kg m^2 to recover the conventional ``1/J``.
    pole_pairs : int
        Number of pole pairs.
    rated_power : float
        VA.
    rated_voltage : float
        Line-to-line RMS volts.
    rated_frequency : float
        Hz.
    """

    r_s: float = 0.016
    l_ls: float = 0.12e-3
    r_r: float = 0.014
    l_lr: float = 0.12e-3
    l_m: float = 4.5e-3
    j_inertia: float = 5.0
    pole_pairs: int = 2
    rated_power: float = 275e3
    rated_voltage: float = 400.0
    rated_frequency: float = 50.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not math.isfinite(v) or v <= 0:
                raise ValueError(f"machine.{f.name} must be finite and > 0, got {v!r}")
        if int(self.pole_pairs) != self.pole_pairs:
            raise ValueError("machine.pole_pairs must be an integer >= 1")
        if self.det() <= 0:
            raise SingularInductanceError("(l_ls + l_m)*(l_lr + l_m) - l_m**2 must be > 0")

    def det(self) -> float:
        l_s, l_r = total_inductances(self)
        return l_s * l_r - self.l_m**2

    @property
    def v_phase_peak(self) -> float:
        return self.rated_voltage * math.sqrt(2.0 / 3.0)

    @property
    def omega_sync_mech(self) -> float:
        return 2.0 * math.pi * self.rated_frequency / self.pole_pairs


@dataclass(frozen=True)
class MachineState:
    i_qs: float = 0.0
    i_ds: float = 0.0
    i_qr: float = 0.0
    i_dr: float = 0.0
    omega_m: float = 0.0
    theta_m: float = 0.0

    def electrical_speed(self, pole_pairs: int) -> float:
        """Rotor electrical angular velocity, ``omega_m * p``."""
        return self.omega_m * pole_pairs

    def electrical_angle(self, pole_pairs: int) -> float:
        return self.theta_m * pole_pairs

    def as_tuple(self) -> tuple[float, ...]:
        return (self.i_qs, self.i_ds, self.i_qr, self.i_dr, self.omega_m, self.theta_m)


@dataclass(frozen=True)
class DqVoltage:
    u_qs: float = 0.0
    u_ds: float = 0.0
    u_qr: float = 0.0
    u_dr: float = 0.0


def total_inductances(params: MachineParams) -> tuple[float, float]:
    """Total stator and rotor self inductances ``(l_s, l_r)``."""
    return params.l_ls + params.l_m, params.l_lr + params.l_m


def electromagnetic_torque(state: MachineState, params: MachineParams) -> float:
    """
    ``1.5*p*(lam_ds*i_qs - lam_qs*i_ds)`` with stator flux linkages.

    The ``l_s`` products cancel identically and are dropped before evaluation,
    so stator-only currents give exactly zero torque.
    """
    return 1.5 * params.pole_pairs * params.l_m * (state.i_dr * state.i_qs - state.i_qr * state.i_ds)


def machine_derivatives(
    state: MachineState,
    voltage: DqVoltage,
    omega_frame: float,
    t_mech: float,
    params: MachineParams,
) -> MachineState:
    """
    Time derivatives of the machine state.

    The flux-linkage balance of each axis pair is solved for the current
    derivatives by inverting ``[[l_s, l_m], [l_m, l_r]]``.

    Parameters
    ----------
    omega_frame : float
        Electrical speed of the synchronous reference frame (rad/s).
    t_mech : float
        Shaft load torque (N m); positive opposes rotation, so a driving
        turbine torque is negative.

    Returns
    -------
    MachineState
        Field-wise derivatives (A/s, rad/s^2, rad/s).
    """
    l_s, l_r = total_inductances(params)
    l_m = params.l_m
    det = l_s * l_r - l_m * l_m
    if det <= 0:
        raise SingularInductanceError(f"inductance determinant {det} <= 0")

    i_qs, i_ds, i_qr, i_dr = state.i_qs, state.i_ds, state.i_qr, state.i_dr
    lam_qs = l_s * i_qs + l_m * i_qr
    lam_ds = l_s * i_ds + l_m * i_dr
    lam_qr = l_r * i_qr + l_m * i_qs
    lam_dr = l_r * i_dr + l_m * i_ds
    omega_slip = omega_frame - state.omega_m * params.pole_pairs

    dlam_qs = voltage.u_qs - params.r_s * i_qs - omega_frame * lam_ds
    dlam_ds = voltage.u_ds - params.r_s * i_ds + omega_frame * lam_qs
    dlam_qr = voltage.u_qr - params.r_r * i_qr - omega_slip * lam_dr
    dlam_dr = voltage.u_dr - params.r_r * i_dr + omega_slip * lam_qr

    t_e = electromagnetic_torque(state, params)
    return MachineState(
        i_qs=(l_r * dlam_qs - l_m * dlam_qr) / det,
        i_ds=(l_r * dlam_ds - l_m * dlam_dr) / det,
        i_qr=(l_s * dlam_qr - l_m * dlam_qs) / det,
        i_dr=(l_s * dlam_dr - l_m * dlam_ds) / det,
        omega_m=(t_e - t_mech) / (2.0 * params.j_inertia),
        theta_m=state.omega_m,
    )


def stator_power(state: MachineState, voltage: DqVoltage) -> tuple[float, float]:
    """Stator active and reactive power drawn from the bus (W, var)."""
    p = 1.5 * (voltage.u_qs * state.i_qs + voltage.u_ds * state.i_ds)
    q = 1.5 * (voltage.u_qs * state.i_ds - voltage.u_ds * state.i_qs)
    return p, q


def magnetic_energy(state: MachineState, params: MachineParams) -> float:
    l_s, l_r = total_inductances(params)
    return 0.75 * (
        l_s * (state.i_qs**2 + state.i_ds**2)
        + l_r * (state.i_qr**2 + state.i_dr**2)
        + 2.0 * params.l_m * (state.i_qs * state.i_qr + state.i_ds * state.i_dr)
    )


def copper_losses(state: MachineState, params: MachineParams) -> float:
    return 1.5 * (
        params.r_s * (state.i_qs**2 + state.i_ds**2)
        + params.r_r * (state.i_qr**2 + state.i_dr**2)
    )


def steady_state_currents(
    params: MachineParams, voltage: DqVoltage, omega_frame: float, omega_m: float
) -> MachineState:
    """dq currents with all current derivatives zero at fixed speeds.

    Solves the 4x4 linear system obtained by dropping the d/dt terms.
    """
    l_s, l_r = total_inductances(params)
    l_m = params.l_m
    w, ws = omega_frame, omega_frame - omega_m * params.pole_pairs
    a = np.array(
        [
            [params.r_s, w * l_s, 0.0, w * l_m],
            [-w * l_s, params.r_s, -w * l_m, 0.0],
            [0.0, ws * l_m, params.r_r, ws * l_r],
            [-ws * l_m, 0.0, -ws * l_r, params.r_r],
        ]
    )
    b = np.array([voltage.u_qs, voltage.u_ds, voltage.u_qr, voltage.u_dr])
    i_qs, i_ds, i_qr, i_dr = np.linalg.solve(a, b)
    return MachineState(float(i_qs), float(i_ds), float(i_qr), float(i_dr), omega_m, 0.0)


def steady_state_phasor_oracle(
    params: MachineParams, slip: float, v_phase: float, f: float
) -> tuple[float, float, float]:
    """
    Per-phase T-equivalent circuit solution.

    Parameters
    ----------
    slip : float
        ``(omega_sync - omega_r) / omega_sync``; negative when generating.
    v_phase : float
        Phase voltage, RMS.
    f : float
        Supply frequency (Hz).

    Returns
    -------
    torque : float
        Air-gap torque (N m), motor convention.
    stator_current : float
        RMS stator current (A).
    p_active : float
        Three-phase active power drawn from the supply (W).
    """
    w = 2.0 * math.pi * f
    x_ls, x_lr, x_m = w * params.l_ls, w * params.l_lr, w * params.l_m
    z_m = 1j * x_m
    if slip == 0.0:
        z = params.r_s + 1j * x_ls + z_m
        i_s = v_phase / z
        i_r = 0.0
        torque = 0.0
    else:
        z_r = params.r_r / slip + 1j * x_lr
        z = params.r_s + 1j * x_ls + z_m * z_r / (z_m + z_r)
        i_s = v_phase / z
        i_r = i_s * z_m / (z_m + z_r)
        omega_sync_mech = w / params.pole_pairs
        torque = 3.0 * abs(i_r) ** 2 * (params.r_r / slip) / omega_sync_mech
    p_active = 3.0 * (v_phase * i_s.conjugate()).real
    return torque, abs(i_s), p_active


__all__ = [
    "MachineParams",
    "MachineState",
    "DqVoltage",
    "SingularInductanceError",
    "total_inductances",
    "electromagnetic_torque",
    "machine_derivatives",
    "stator_power",
    "magnetic_energy",
    "copper_losses",
    "steady_state_currents",
    "steady_state_phasor_oracle",
]
