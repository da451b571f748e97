"""Self-check suites: each one pits an implementation against an independent route.

Every suite returns a :class:`SuiteResult`; ``passed`` compares the measured
figure against the tolerance the suite was designed around.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .control import AnfisNet, PdParams, anfis_consequent_gradient, anfis_evaluate
from .grid import DUMP_LEVELS, DumpLoadParams, LoadSchedule, dump_power, dump_quantize
from .machine import (
    DqVoltage,
    MachineParams,
    MachineState,
    electromagnetic_torque,
    machine_derivatives,
    steady_state_phasor_oracle,
)
from .sim import Scenario, _pack, run_scenario
from .turbine import WindModel

PHASOR_SLIPS = (-0.05, -0.02, -0.01, 0.01, 0.02, 0.05)


@dataclass
class SuiteResult:
    name: str
    value: float
    tolerance: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: {self.value:.6g} (require {self.tolerance}) {self.detail}".rstrip()


def settled_dq_torque(
    params: MachineParams, slip: float, duration: float = 1.0, dt: float = 1e-4
) -> float:
    """Electromagnetic torque after driving the dq model from rest currents
    at rated voltage and frequency with the rotor speed held at ``slip``."""
    w = 2.0 * math.pi * params.rated_frequency
    w_m = (1.0 - slip) * w / params.pole_pairs
    v = DqVoltage(u_qs=params.v_phase_peak)
    x = np.zeros(4)

    def f(i):
        st = MachineState(i[0], i[1], i[2], i[3], w_m, 0.0)
        d = machine_derivatives(st, v, w, 0.0, params)
        return np.array((d.i_qs, d.i_ds, d.i_qr, d.i_dr))

    for _ in range(int(round(duration / dt))):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return electromagnetic_torque(MachineState(*x, w_m, 0.0), params)


def phasor_equivalence(params: MachineParams | None = None, slips=PHASOR_SLIPS, rtol=0.01):
    params = params or MachineParams()
    v_phase = params.rated_voltage / math.sqrt(3.0)
    worst, details = 0.0, []
    for s in slips:
        t_dq = settled_dq_torque(params, s)
        t_ph, _, _ = steady_state_phasor_oracle(params, s, v_phase, params.rated_frequency)
        rel = abs(t_dq - t_ph) / abs(t_ph)
        worst = max(worst, rel)
        details.append(f"s={s:+.2f}:{t_dq:.1f}/{t_ph:.1f}")
    return SuiteResult("phasor-equivalence", worst, f"< {rtol:g} relative", worst < rtol, " ".join(details))


def random_net(rng: np.random.Generator, m: int | None = None) -> AnfisNet:
    m = m or int(rng.integers(2, 7))
    cf = np.sort(rng.uniform(-2, 2, m)) + np.arange(m) * 1e-3
    ct = np.sort(rng.uniform(-math.pi, math.pi, m)) + np.arange(m) * 1e-3
    return AnfisNet(
        cf,
        rng.uniform(0.3, 1.5, m),
        ct,
        rng.uniform(0.5, 2.0, m),
        rng.normal(0.0, 1.0, (m * m, 3)) * np.array([6e4, 1e5, 5e4]),
    )


def gradient_check(n: int = 100, seed: int = 0, rtol: float = 1e-5):
    """Analytic consequent sensitivities versus central differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        net = random_net(rng)
        e_f = rng.uniform(-2, 2)
        e_t = rng.uniform(-math.pi, math.pi)
        g = anfis_consequent_gradient(net, e_f, e_t)
        fd = np.empty_like(g)
        scale = np.abs(net.consequents).max(axis=0)
        for idx in np.ndindex(*g.shape):
            h = 1e-6 * scale[idx[1]]
            c = net.consequents.copy()
            c[idx] += h
            up = anfis_evaluate(replace(net, consequents=c), e_f, e_t)
            c[idx] -= 2 * h
            dn = anfis_evaluate(replace(net, consequents=c), e_f, e_t)
            fd[idx] = (up - dn) / (2 * h)
        rel = np.linalg.norm(fd - g) / np.linalg.norm(g)
        worst = max(worst, rel)
    return SuiteResult("anfis-gradient", worst, f"< {rtol:g} relative", worst < rtol, f"{n} nets")


def power_balance_residual(record) -> float:
    """Independent quadrature of the bus power balance from a per-step record.

    Load and dump are held over each step (left Riemann sum is exact); the
    generator power is smooth (trapezoid). Returns percent of
    ``s_base * duration``.
    """
    sc = record.scenario
    if sc.sample_every != 1:
        raise ValueError("power-balance quadrature needs sample_every = 1")
    dt = sc.dt
    p_gen = np.asarray(record["p_gen_kw"]) * 1e3
    held = (np.asarray(record["p_load_kw"]) + np.asarray(record["p_dump_kw"])) * 1e3
    integral = np.trapezoid(p_gen, dx=dt) - held[:-1].sum() * dt
    w = 2.0 * math.pi * np.asarray(record["f_hz"])
    g = sc.grid
    d_kin = g.kinetic_energy(w[-1]) - g.kinetic_energy(w[0])
    return 100.0 * abs(integral - d_kin) / (g.s_base * sc.duration)


def energy_audit(scenario: Scenario | None = None, limit_pct: float = 0.1):
    sc = replace(scenario or Scenario(), sample_every=1)
    rec = run_scenario(sc)
    quad = power_balance_residual(rec)
    worst = max(quad, rec.energy_residual_pct)
    return SuiteResult(
        "energy-audit",
        worst,
        f"< {limit_pct:g} % of s_base*duration",
        worst < limit_pct,
        f"quadrature={quad:.3g}% accumulator={rec.energy_residual_pct:.3g}% dt={sc.dt:g}",
    )


def convergence_scenario(dt: float, duration: float = 0.2, initial_slip: float = -0.05) -> Scenario:
    """Open-loop run with constant wind starting off equilibrium, so RK4 is
    the only discretisation."""
    return Scenario(
        name="convergence",
        duration=duration,
        dt=dt,
        pd=PdParams(0.0, 0.0),
        wind=WindModel(turbulence_intensity=0.0),
        loads=LoadSchedule(50e3),
        settle_time=0.0,
        sample_every=10**9,
        initial_slip=initial_slip,
    )


_STATE_SCALE = np.array([300.0, 300.0, 300.0, 300.0, 1.0, 1.0, 1.0, 1.0, 1e5])


def richardson_ratio(dt: float = 1e-3, refine: int = 16) -> float:
    def end(h):
        return np.array(_pack(run_scenario(convergence_scenario(h)).final_state))

    ref = end(dt / refine)
    e1 = np.linalg.norm((end(dt) - ref) / _STATE_SCALE)
    e2 = np.linalg.norm((end(dt / 2) - ref) / _STATE_SCALE)
    return e1 / e2


def convergence(lo: float = 12.0, hi: float = 20.0):
    r = richardson_ratio()
    return SuiteResult("rk4-order", r, f"in [{lo:g}, {hi:g}]", lo <= r <= hi, "dt=1e-3 vs 5e-4")


def dump_quantization(params: DumpLoadParams | None = None):
    """Exhaustive check over the 256 levels: monotone, surjective, 1-LSB round trip."""
    params = params or DumpLoadParams()
    lsb = params.p_max / DUMP_LEVELS
    u = np.linspace(-0.1 * params.p_max, 1.1 * params.p_max, 20 * (DUMP_LEVELS + 1) + 1)
    u = np.concatenate([u, np.arange(DUMP_LEVELS + 1) * lsb, (np.arange(DUMP_LEVELS) + 0.5) * lsb])
    u.sort()
    cmds = np.array([dump_quantize(x, params) for x in u])
    monotone = bool(np.all(np.diff(cmds) >= 0))
    surjective = set(cmds.tolist()) == set(range(DUMP_LEVELS + 1))
    err = max(
        abs(dump_power(c, 1.0, params) - min(max(x, 0.0), params.p_max)) for c, x in zip(cmds, u)
    )
    ok = monotone and surjective and err <= lsb
    return SuiteResult(
        "dump-quantization",
        err / lsb,
        "<= 1 LSB, monotone, surjective",
        ok,
        f"monotone={monotone} surjective={surjective}",
    )


def all_suites():
    return [phasor_equivalence(), gradient_check(), energy_audit(), convergence(), dump_quantization()]
