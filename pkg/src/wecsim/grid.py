"""Isolated bus: lumped-inertia frequency dynamics, consumer loads, dump load."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

DUMP_LEVELS = 255


@dataclass(frozen=True)
class BusState:
    """Bus voltage magnitude (pu), electrical speed (rad/s) and unwrapped phase (rad)."""

    v_pu: float = 1.0
    omega_e: float = 2.0 * math.pi * 50.0
    theta_e: float = 0.0

    def __post_init__(self):
        if not self.v_pu > 0:
            raise ValueError(f"v_pu must be > 0, got {self.v_pu!r}")
        if not self.omega_e > 0:
            raise ValueError(f"omega_e must be > 0, got {self.omega_e!r}")
        if not math.isfinite(self.theta_e):
            raise ValueError("theta_e must be finite")

    @property
    def frequency(self) -> float:
        return self.omega_e / (2.0 * math.pi)


@dataclass(frozen=True)
class GridParams:
    """
    ``h_sc`` is the inertia constant (s) of the synchronous compensator and
    connected rotating mass on ``s_base`` (VA).
    """

    h_sc: float = 2.0
    s_base: float = 300e3
    f_ref: float = 50.0
    v_nominal: float = 400.0

    def __post_init__(self):
        for name in ("h_sc", "s_base", "f_ref", "v_nominal"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"grid.{name} must be finite and > 0, got {v!r}")

    @property
    def omega_ref(self) -> float:
        return 2.0 * math.pi * self.f_ref

    def kinetic_energy(self, omega_e: float) -> float:
        """Stored rotational energy (J) at electrical speed ``omega_e``."""
        w_pu = omega_e / self.omega_ref
        return self.h_sc * self.s_base * w_pu * w_pu


@dataclass(frozen=True)
class LoadEvent:
    time: float
    power: float
    connect: bool = True


@dataclass(frozen=True)
class LoadSchedule:
    main_power: float = 50e3
    events: tuple[LoadEvent, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.main_power >= 0:
            raise ValueError(f"main load must be >= 0, got {self.main_power!r}")
        times = [e.time for e in self.events]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("load event times must be strictly increasing")
        for e in self.events:
            if e.time < 0 or e.power < 0:
                raise ValueError(f"invalid load event {e}")

    @classmethod
    def step(cls, main_power, secondary_power, t_connect, t_disconnect):
        return cls(
            main_power,
            (
                LoadEvent(t_connect, secondary_power, True),
                LoadEvent(t_disconnect, secondary_power, False),
            ),
        )


def scheduled_load_power(t: float, schedule: LoadSchedule) -> float:
    """Total consumer demand at time ``t`` (W).

    Events are replayed in order; a disconnect removes the power that an
    earlier connect of the same size added.
    """
    p = schedule.main_power
    for e in schedule.events:
        if e.time > t:
            break
        p += e.power if e.connect else -e.power
    return max(p, 0.0)


@dataclass(frozen=True)
class DumpLoadParams:
    p_max: float = 450e3
    n_bits: int = 8

    def __post_init__(self):
        if not (math.isfinite(self.p_max) and self.p_max > 0):
            raise ValueError(f"dump.p_max must be > 0, got {self.p_max!r}")
        if self.n_bits != 8:
            raise ValueError("dump load command is 8-bit")


def dump_quantize(u_demand: float, params: DumpLoadParams) -> int:
    """Map a power demand (W) to the 8-bit switch command, rounding half away from zero."""
    u = min(max(u_demand, 0.0), params.p_max)
    # u >= 0 so floor(x + 0.5) is half-away-from-zero
    return int(math.floor(u / params.p_max * DUMP_LEVELS + 0.5))


def dump_power(command: int, v_pu: float, params: DumpLoadParams) -> float:
    """Averaged power of the binary-weighted resistor ladder (W)."""
    if not 0 <= command <= DUMP_LEVELS:
        raise ValueError(f"dump command {command} outside 0..{DUMP_LEVELS}")
    return command / DUMP_LEVELS * params.p_max * v_pu * v_pu


def grid_frequency_derivative(
    bus: BusState, p_gen: float, p_load: float, p_dump: float, params: GridParams
) -> tuple[float, float]:
    """
    Swing equation of the lumped bus inertia.

    Returns
    -------
    domega_e : float
        rad/s^2.
    dtheta_e : float
        rad/s, equal to ``bus.omega_e``.
    """
    w_ref = params.omega_ref
    w_pu = bus.omega_e / w_ref
    dw_pu = (p_gen - p_load - p_dump) / (params.s_base * 2.0 * params.h_sc * w_pu)
    return dw_pu * w_ref, bus.omega_e
