"""Closed-loop simulation of the isolated wind-generator bus.

The continuous plant (machine currents, rotor speed and angle, bus speed and
phase, plus an energy accumulator used for auditing) is advanced with a
fixed-step classical RK4. Wind, consumer load and dump command are held
constant over each step; measurement, control and quantisation happen between
steps.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .control import (
    AnfisNet,
    MeasurementState,
    PdParams,
    anfis_adapt,
    anfis_evaluate,
    anfis_init_from_pd,
    measure_frequency_phase,
    pd_control_step,
)
from .grid import (
    BusState,
    DumpLoadParams,
    GridParams,
    LoadSchedule,
    dump_power,
    dump_quantize,
    scheduled_load_power,
)
from .machine import (
    DqVoltage,
    MachineParams,
    MachineState,
    electromagnetic_torque,
    steady_state_currents,
)
from .turbine import TurbineParams, WindModel, aerodynamic_power, generate_wind_series

CSV_COLUMNS = (
    "t",
    "f_hz",
    "speed_pu",
    "p_turbine_kw",
    "p_gen_kw",
    "p_load_kw",
    "p_dump_kw",
    "dump_cmd",
    "wind_mps",
)


class SimulationError(RuntimeError):
    """The integrated state became non-finite."""


@dataclass(frozen=True)
class Scenario:
    """
    A complete, declarative experiment.

    ``initial_slip=None`` starts the generator at the slip where its torque
    balances the turbine at t = 0; a number forces that slip instead.
    """

    name: str = "sc1"
    duration: float = 3.0
    dt: float = 50e-6
    controller: str = "pd"
    machine: MachineParams = field(default_factory=MachineParams)
    turbine: TurbineParams = field(default_factory=TurbineParams)
    wind: WindModel = field(default_factory=WindModel)
    grid: GridParams = field(default_factory=GridParams)
    loads: LoadSchedule = field(default_factory=lambda: LoadSchedule.step(50e3, 40e3, 1.0, 2.0))
    dump: DumpLoadParams = field(default_factory=DumpLoadParams)
    pd: PdParams = field(default_factory=PdParams)
    anfis_mfs: int = 5
    anfis_learn_rate: float = 1e-4
    anfis_ranges: tuple = ((-2.0, 2.0), (-math.pi, math.pi))
    sample_every: int = 20
    seed: int = 42
    settle_time: float = 0.3
    v_pu: float = 1.0
    initial_slip: float | None = None

    def __post_init__(self):
        if not self.duration > 0 or not self.dt > 0:
            raise ValueError("sim.duration and sim.dt must be > 0")
        if self.controller not in ("pd", "anfis"):
            raise ValueError(f"sim.controller must be 'pd' or 'anfis', got {self.controller!r}")
        if int(self.sample_every) != self.sample_every or self.sample_every < 1:
            raise ValueError("sim.sample_every must be an integer >= 1")
        if not self.v_pu > 0:
            raise ValueError("grid.v_pu must be > 0")
        if not 0 <= self.settle_time < self.duration:
            raise ValueError("sim.settle_time must lie in [0, duration)")
        if self.anfis_learn_rate < 0:
            raise ValueError("anfis.learn_rate must be >= 0")
        _check_aligned(self.duration, self.dt, "sim.duration")
        for e in self.loads.events:
            if e.time > self.duration:
                raise ValueError(f"load event at {e.time} s lies beyond the run")
            _check_aligned(e.time, self.dt, "load event time")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))

    def time_at(self, k: int) -> float:
        # rounding keeps event instants exact, e.g. 20000 * 5e-5 == 1.0
        return round(k * self.dt, 12)


def _check_aligned(t, dt, what):
    k = round(t / dt)
    if abs(k * dt - t) > 1e-9 * max(1.0, abs(t)):
        raise ValueError(f"{what} {t} is not a multiple of dt={dt}")


@dataclass(frozen=True)
class SystemState:
    machine: MachineState
    bus: BusState
    meas: MeasurementState
    anfis: AnfisNet | None = None
    dump_command: int = 0
    t: float = 0.0
    energy: float = 0.0


@dataclass
class RunSummary:
    f_max_dev_hz: float
    f_rms_dev_hz: float
    speed_mean_pu: float
    energy_residual_pct: float


@dataclass
class RunRecord:
    """Sampled columns (see ``CSV_COLUMNS``) plus run-level bookkeeping."""

    columns: dict
    summary: RunSummary | None = None
    energy_residual_pct: float = 0.0
    final_state: SystemState | None = None
    scenario: Scenario | None = None
    wall_time: float = 0.0

    def __getitem__(self, name):
        return self.columns[name]

    def __len__(self):
        return len(self.columns["t"])


class _Plant:
    """Flat-tuple right-hand side of the coupled continuous dynamics.

    State layout: ``(i_qs, i_ds, i_qr, i_dr, omega_m, theta_m, omega_e,
    theta_e, energy)``.
    """

    def __init__(self, sc: Scenario):
        m = sc.machine
        self.turbine = sc.turbine
        self.l_s = m.l_ls + m.l_m
        self.l_r = m.l_lr + m.l_m
        self.l_m = m.l_m
        self.det = self.l_s * self.l_r - self.l_m**2
        self.r_s, self.r_r = m.r_s, m.r_r
        self.p = m.pole_pairs
        self.inv_2j = 1.0 / (2.0 * m.j_inertia)
        self.u_qs = sc.v_pu * sc.grid.v_nominal * math.sqrt(2.0 / 3.0)
        self.w_ref = sc.grid.omega_ref
        # d omega_e/dt = surplus * swing_gain / omega_e
        self.swing_gain = self.w_ref**2 / (2.0 * sc.grid.h_sc * sc.grid.s_base)

    def voltage(self) -> DqVoltage:
        return DqVoltage(u_qs=self.u_qs)

    def t_mech(self, wind, omega_m):
        # NaN speed also lands here; _check_finite reports it after the step
        if not (wind > 0.0 and omega_m > 0.0):
            return 0.0
        return -aerodynamic_power(wind, omega_m, self.turbine) / omega_m

    def rhs(self, x, wind, p_out):
        i_qs, i_ds, i_qr, i_dr, w_m, _, w_e, _, _ = x
        l_s, l_r, l_m, det = self.l_s, self.l_r, self.l_m, self.det
        lam_qs = l_s * i_qs + l_m * i_qr
        lam_ds = l_s * i_ds + l_m * i_dr
        lam_qr = l_r * i_qr + l_m * i_qs
        lam_dr = l_r * i_dr + l_m * i_ds
        w_sl = w_e - self.p * w_m
        d_qs = self.u_qs - self.r_s * i_qs - w_e * lam_ds
        d_ds = -self.r_s * i_ds + w_e * lam_qs
        d_qr = -self.r_r * i_qr - w_sl * lam_dr
        d_dr = -self.r_r * i_dr + w_sl * lam_qr
        t_e = 1.5 * self.p * l_m * (i_dr * i_qs - i_qr * i_ds)
        surplus = -1.5 * self.u_qs * i_qs - p_out
        return (
            (l_r * d_qs - l_m * d_qr) / det,
            (l_r * d_ds - l_m * d_dr) / det,
            (l_s * d_qr - l_m * d_qs) / det,
            (l_s * d_dr - l_m * d_ds) / det,
            (t_e - self.t_mech(wind, w_m)) * self.inv_2j,
            w_m,
            surplus * self.swing_gain / w_e,
            w_e,
            surplus,
        )

    def step(self, x, h, wind, p_out):
        f = self.rhs
        k1 = f(x, wind, p_out)
        h2 = 0.5 * h
        k2 = f(tuple(a + h2 * b for a, b in zip(x, k1)), wind, p_out)
        k3 = f(tuple(a + h2 * b for a, b in zip(x, k2)), wind, p_out)
        k4 = f(tuple(a + h * b for a, b in zip(x, k3)), wind, p_out)
        h6 = h / 6.0
        return tuple(
            a + h6 * (b1 + 2.0 * (b2 + b3) + b4) for a, b1, b2, b3, b4 in zip(x, k1, k2, k3, k4)
        )


_STATE_NAMES = ("i_qs", "i_ds", "i_qr", "i_dr", "omega_m", "theta_m", "omega_e", "theta_e", "energy")


def _check_finite(x, t):
    if not math.isfinite(sum(x)):
        bad = [n for n, v in zip(_STATE_NAMES, x) if not math.isfinite(v)] or ["state sum (overflow)"]
        raise SimulationError(f"non-finite state at t={t:.6f} s in {', '.join(bad)}")


@lru_cache(maxsize=16)
def _plant_for(sc: Scenario) -> _Plant:
    return _Plant(sc)


def _pack(state: SystemState):
    m, b = state.machine, state.bus
    return (m.i_qs, m.i_ds, m.i_qr, m.i_dr, m.omega_m, m.theta_m, b.omega_e, b.theta_e, state.energy)


def rk4_step(state: SystemState, scenario: Scenario, wind_now: float) -> SystemState:
    """Advance the continuous states by one ``scenario.dt``.

    Load, dump command and wind are held at their values at ``state.t``.
    Measurement, controller and dump command are returned unchanged.
    """
    if not math.isfinite(wind_now):
        raise SimulationError(f"non-finite wind input at t={state.t:.6f} s")
    plant = _plant_for(scenario)
    p_out = scheduled_load_power(state.t, scenario.loads) + dump_power(
        state.dump_command, scenario.v_pu, scenario.dump
    )
    x = plant.step(_pack(state), scenario.dt, wind_now, p_out)
    t = state.t + scenario.dt
    _check_finite(x, t)
    return replace(
        state,
        machine=MachineState(*x[:6]),
        bus=BusState(state.bus.v_pu, x[6], x[7]),
        t=t,
        energy=x[8],
    )


def equilibrium_slip(sc: Scenario, wind: float) -> float:
    """Slip at which the steady-state generator torque cancels the turbine torque."""
    m = sc.machine
    plant = _plant_for(sc)
    v = plant.voltage()
    w_ref = sc.grid.omega_ref

    def residual(s):
        w_m = (1.0 - s) * w_ref / m.pole_pairs
        t_e = electromagnetic_torque(steady_state_currents(m, v, w_ref, w_m), m)
        return t_e - plant.t_mech(wind, w_m)

    if residual(0.0) <= 0.0:
        return 0.0
    return brentq(residual, -0.2, 0.0, xtol=1e-15, rtol=1e-15)


def initial_state(sc: Scenario, wind0: float) -> SystemState:
    """Approximate operating point at t = 0.

    Machine currents are at their steady state for the initial slip, the bus
    runs at ``f_ref`` and the bus phase is offset so the PD phase term already
    asks for the initial generation surplus.
    """
    m = sc.machine
    plant = _plant_for(sc)
    slip = equilibrium_slip(sc, wind0) if sc.initial_slip is None else sc.initial_slip
    w_ref = sc.grid.omega_ref
    ms = steady_state_currents(m, plant.voltage(), w_ref, (1.0 - slip) * w_ref / m.pole_pairs)
    p_gen = -1.5 * plant.u_qs * ms.i_qs
    surplus = p_gen - scheduled_load_power(0.0, sc.loads)
    theta0 = 0.0
    if sc.pd.k_p > 0:
        theta0 = min(max(surplus / sc.pd.k_p, 0.0), math.pi - 0.3)
    anfis = None
    if sc.controller == "anfis":
        anfis = anfis_init_from_pd(sc.pd, sc.anfis_mfs, sc.anfis_ranges, sc.anfis_learn_rate)
    return SystemState(
        machine=ms,
        bus=BusState(sc.v_pu, w_ref, theta0),
        meas=MeasurementState(sc.grid.f_ref, theta0),
        anfis=anfis,
    )


class _BusView:
    __slots__ = ("omega_e", "theta_e")

    def __init__(self, omega_e, theta_e):
        self.omega_e = omega_e
        self.theta_e = theta_e


def run_scenario(scenario: Scenario, wind_series: np.ndarray | None = None) -> RunRecord:
    """
    Run one closed-loop experiment.

    Parameters
    ----------
    wind_series : ndarray, optional
        Wind speed per step (length ``n_steps + 1``). Generated from
        ``scenario.seed`` when omitted.
    """
    sc = scenario
    t0 = time.perf_counter()
    n = sc.n_steps
    dt = sc.dt
    f_ref = sc.grid.f_ref
    if wind_series is None:
        wind_series = generate_wind_series(replace(sc.wind, seed=sc.seed), dt, n + 1)
    elif len(wind_series) < n + 1:
        raise ValueError(f"wind series needs {n + 1} samples, got {len(wind_series)}")
    bad = np.flatnonzero(~np.isfinite(wind_series[: n + 1]))
    if bad.size:
        raise SimulationError(f"non-finite wind input at t={sc.time_at(int(bad[0])):.6f} s")
    wind = wind_series.tolist()

    plant = _plant_for(sc)
    state0 = initial_state(sc, wind[0])
    x = _pack(state0)
    meas = state0.meas
    net = state0.anfis
    pd = sc.pd
    tau = pd.tau_meas
    use_anfis = sc.controller == "anfis"
    w_sync_nom = sc.grid.omega_ref / sc.machine.pole_pairs

    n_samples = n // sc.sample_every + 1
    cols = {c: np.empty(n_samples) for c in CSV_COLUMNS}
    cols["dump_cmd"] = np.empty(n_samples, dtype=np.int64)
    j = 0
    cmd = 0
    for k in range(n + 1):
        t = sc.time_at(k)
        if k > 0:
            meas = measure_frequency_phase(meas, _BusView(x[6], x[7]), f_ref, t, dt, tau)
        if use_anfis:
            e_f = meas.f_meas - f_ref
            u = anfis_evaluate(net, e_f, meas.theta_err)
            net = anfis_adapt(net, e_f, meas.theta_err, u, dt)
        else:
            u = pd_control_step(meas, f_ref, pd)
        cmd = dump_quantize(u, sc.dump)
        p_dump = dump_power(cmd, sc.v_pu, sc.dump)
        p_load = scheduled_load_power(t, sc.loads)

        if k % sc.sample_every == 0:
            cols["t"][j] = t
            cols["f_hz"][j] = x[6] / (2.0 * math.pi)
            cols["speed_pu"][j] = x[4] / w_sync_nom
            cols["p_turbine_kw"][j] = -plant.t_mech(wind[k], x[4]) * x[4] / 1e3
            cols["p_gen_kw"][j] = -1.5 * plant.u_qs * x[0] / 1e3
            cols["p_load_kw"][j] = p_load / 1e3
            cols["p_dump_kw"][j] = p_dump / 1e3
            cols["dump_cmd"][j] = cmd
            cols["wind_mps"][j] = wind[k]
            j += 1
        if k == n:
            break
        x = plant.step(x, dt, wind[k], p_load + p_dump)
        _check_finite(x, sc.time_at(k + 1))

    final = SystemState(
        machine=MachineState(*x[:6]),
        bus=BusState(sc.v_pu, x[6], x[7]),
        meas=meas,
        anfis=net,
        dump_command=cmd,
        t=sc.time_at(n),
        energy=x[8],
    )
    g = sc.grid
    d_kinetic = g.kinetic_energy(x[6]) - g.kinetic_energy(state0.bus.omega_e)
    residual = 100.0 * abs(x[8] - d_kinetic) / (g.s_base * sc.duration)
    rec = RunRecord(
        columns=cols,
        energy_residual_pct=residual,
        final_state=final,
        scenario=sc,
    )
    rec.summary = summarize_run(rec, f_ref, sc.settle_time)
    rec.wall_time = time.perf_counter() - t0
    return rec


def summarize_run(record: RunRecord, f_ref: float, settle_time: float) -> RunSummary:
    """Frequency deviation statistics over ``t >= settle_time``."""
    t = np.asarray(record["t"])
    mask = t >= settle_time
    if not mask.any():
        raise ValueError(f"no samples at or after settle_time={settle_time}")
    dev = np.abs(np.asarray(record["f_hz"])[mask] - f_ref)
    return RunSummary(
        f_max_dev_hz=float(dev.max()),
        f_rms_dev_hz=float(np.sqrt(np.mean(dev * dev))),
        speed_mean_pu=float(np.mean(np.asarray(record["speed_pu"])[mask])),
        energy_residual_pct=float(record.energy_residual_pct),
    )
