"""Plain-text ``key = value`` configuration and the built-in study-case presets.

Keys are namespaced (``machine.r_s``, ``load.main_kw`` ...). ``#`` starts a
comment. Every omitted key takes its default; unknown keys are rejected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .control import PdParams
from .grid import DumpLoadParams, GridParams, LoadSchedule
from .machine import MachineParams
from .sim import Scenario
from .turbine import DEFAULT_CP_COEFFICIENTS, TurbineParams, WindModel


class ConfigError(ValueError):
    def __init__(self, message, key=None, line=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")
        self.key = key
        self.line = line


def _floats(n):
    def parse(text):
        vals = tuple(float(v) for v in text.replace(",", " ").split())
        if len(vals) != n:
            raise ValueError(f"expected {n} numbers")
        return vals

    return parse


def _opt_float(text):
    return None if text.strip().lower() in ("none", "auto", "") else float(text)


def _int(text):
    v = float(text)
    if v != int(v):
        raise ValueError("expected an integer")
    return int(v)


def _fmt(v):
    if v is None:
        return "auto"
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


# key: (parser, default, check or None, description of the check)
SCHEMA = {
    "machine.r_s": (float, 0.016, "pos"),
    "machine.l_ls": (float, 0.12e-3, "pos"),
    "machine.r_r": (float, 0.014, "pos"),
    "machine.l_lr": (float, 0.12e-3, "pos"),
    "machine.l_m": (float, 4.5e-3, "pos"),
    "machine.j_inertia": (float, 5.0, "pos"),
    "machine.pole_pairs": (_int, 2, "pos"),
    "machine.rated_power": (float, 275e3, "pos"),
    "machine.rated_voltage": (float, 400.0, "pos"),
    "machine.rated_frequency": (float, 50.0, "pos"),
    "turbine.rated_power": (float, 275e3, "pos"),
    "turbine.rated_wind": (float, 8.0, "pos"),
    "turbine.rotor_radius": (float, 24.0, "pos"),
    "turbine.air_density": (float, 1.225, "pos"),
    "turbine.gear_ratio": (_opt_float, None, None),
    "turbine.cp_coefficients": (_floats(6), DEFAULT_CP_COEFFICIENTS, None),
    "wind.mean": (float, 8.0, "pos"),
    "wind.ti": (float, 0.1, "nonneg"),
    "wind.tau": (float, 2.0, "pos"),
    "grid.h_sc": (float, 2.0, "pos"),
    "grid.s_base": (float, 300e3, "pos"),
    "grid.f_ref": (float, 50.0, "pos"),
    "grid.v_nominal": (float, 400.0, "pos"),
    "grid.v_pu": (float, 1.0, "pos"),
    "dump.p_max": (float, 450e3, "pos"),
    "load.main_kw": (float, 50.0, "nonneg"),
    "load.secondary_kw": (float, 40.0, "nonneg"),
    "load.t_connect": (float, 1.0, "nonneg"),
    "load.t_disconnect": (float, 2.0, "nonneg"),
    "pd.kp": (float, 2.5e5, "nonneg"),
    "pd.kd": (float, 5.0e4, "nonneg"),
    "pll.tau": (float, 0.02, "pos"),
    "anfis.mfs": (_int, 5, None),
    "anfis.learn_rate": (float, 1e-4, "nonneg"),
    "anfis.ef_range": (_floats(2), (-2.0, 2.0), None),
    "anfis.etheta_range": (_floats(2), (-math.pi, math.pi), None),
    "sim.name": (str, "sc1", None),
    "sim.controller": (str, "pd", None),
    "sim.duration": (float, 3.0, "pos"),
    "sim.dt": (float, 50e-6, "pos"),
    "sim.sample_every": (_int, 20, "pos"),
    "sim.seed": (_int, 42, "nonneg"),
    "sim.settle_time": (float, 0.3, "nonneg"),
    "sim.initial_slip": (_opt_float, None, None),
    "output.path": (str, "", None),
    "output.sidecar": (lambda s: s.strip().lower() in ("1", "true", "yes", "on"), True, None),
}

PRESETS = {
    "sc1": {},
    "sc2": {"sim.name": "sc2", "sim.controller": "anfis"},
}


@dataclass
class Config:
    """Fully resolved configuration; ``values`` holds every schema key."""

    values: dict

    def __getitem__(self, key):
        return self.values[key]

    def to_text(self) -> str:
        return "".join(f"{k} = {_fmt(v)}\n" for k, v in self.values.items())

    def with_overrides(self, **overrides) -> "Config":
        vals = dict(self.values)
        for k, v in overrides.items():
            if k not in SCHEMA:
                raise ConfigError(f"unknown key {k!r}", key=k)
            vals[k] = v
        cfg = Config(vals)
        cfg.validate()
        return cfg

    def validate(self):
        v = self.values
        for key, (_, _, check) in SCHEMA.items():
            x = v[key]
            if check == "pos" and not (isinstance(x, (int, float)) and math.isfinite(x) and x > 0):
                raise ConfigError(f"{key} must be a finite number > 0, got {x!r}", key=key)
            if check == "nonneg" and not (isinstance(x, (int, float)) and math.isfinite(x) and x >= 0):
                raise ConfigError(f"{key} must be a finite number >= 0, got {x!r}", key=key)
        if v["anfis.mfs"] < 2:
            raise ConfigError("anfis.mfs must be >= 2", key="anfis.mfs")
        for key in ("anfis.ef_range", "anfis.etheta_range"):
            lo, hi = v[key]
            if not lo < hi:
                raise ConfigError(f"{key} must satisfy lo < hi, got {v[key]!r}", key=key)
        if v["sim.controller"] not in ("pd", "anfis"):
            raise ConfigError("sim.controller must be 'pd' or 'anfis'", key="sim.controller")
        if not v["wind.ti"] < 0.5:
            raise ConfigError("wind.ti must be < 0.5", key="wind.ti")
        if not v["load.t_connect"] < v["load.t_disconnect"]:
            raise ConfigError("load.t_connect must precede load.t_disconnect", key="load.t_connect")
        if v["load.t_disconnect"] > v["sim.duration"]:
            raise ConfigError("load.t_disconnect lies beyond sim.duration", key="load.t_disconnect")
        if v["turbine.gear_ratio"] is not None and not v["turbine.gear_ratio"] >= 1:
            raise ConfigError("turbine.gear_ratio must be >= 1", key="turbine.gear_ratio")
        # remaining constraints live in the dataclasses
        try:
            self.scenario()
        except ConfigError:
            raise
        except ValueError as e:
            raise ConfigError(str(e)) from None

    def scenario(self) -> Scenario:
        v = self.values
        machine = MachineParams(
            r_s=v["machine.r_s"],
            l_ls=v["machine.l_ls"],
            r_r=v["machine.r_r"],
            l_lr=v["machine.l_lr"],
            l_m=v["machine.l_m"],
            j_inertia=v["machine.j_inertia"],
            pole_pairs=v["machine.pole_pairs"],
            rated_power=v["machine.rated_power"],
            rated_voltage=v["machine.rated_voltage"],
            rated_frequency=v["machine.rated_frequency"],
        )
        turbine = TurbineParams(
            rated_power=v["turbine.rated_power"],
            rated_wind=v["turbine.rated_wind"],
            rotor_radius=v["turbine.rotor_radius"],
            air_density=v["turbine.air_density"],
            gear_ratio=v["turbine.gear_ratio"],
            cp_coefficients=v["turbine.cp_coefficients"],
            sync_speed_mech=machine.omega_sync_mech,
        )
        return Scenario(
            name=v["sim.name"],
            duration=v["sim.duration"],
            dt=v["sim.dt"],
            controller=v["sim.controller"],
            machine=machine,
            turbine=turbine,
            wind=WindModel(v["wind.mean"], v["wind.ti"], v["wind.tau"], v["sim.seed"]),
            grid=GridParams(v["grid.h_sc"], v["grid.s_base"], v["grid.f_ref"], v["grid.v_nominal"]),
            loads=LoadSchedule.step(
                v["load.main_kw"] * 1e3,
                v["load.secondary_kw"] * 1e3,
                v["load.t_connect"],
                v["load.t_disconnect"],
            ),
            dump=DumpLoadParams(v["dump.p_max"]),
            pd=PdParams(v["pd.kp"], v["pd.kd"], v["pll.tau"]),
            anfis_mfs=v["anfis.mfs"],
            anfis_learn_rate=v["anfis.learn_rate"],
            anfis_ranges=(v["anfis.ef_range"], v["anfis.etheta_range"]),
            sample_every=v["sim.sample_every"],
            seed=v["sim.seed"],
            settle_time=v["sim.settle_time"],
            v_pu=v["grid.v_pu"],
            initial_slip=v["sim.initial_slip"],
        )


def default_values(preset: str = "sc1") -> dict:
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
    vals = {k: d for k, (_, d, _) in SCHEMA.items()}
    vals.update(PRESETS[preset])
    return vals


def parse_config(text: str, preset: str = "sc1") -> Config:
    """Parse a ``key = value`` document on top of ``preset`` defaults."""
    vals = default_values(preset)
    seen = {}
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=n)
        key, _, value = (s.strip() for s in line.partition("="))
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r}", key=key, line=n)
        if key in seen:
            raise ConfigError(f"{key} already set on line {seen[key]}", key=key, line=n)
        seen[key] = n
        try:
            vals[key] = SCHEMA[key][0](value)
        except ValueError as e:
            raise ConfigError(f"{key}: cannot parse {value!r} ({e})", key=key, line=n) from None
    cfg = Config(vals)
    cfg.validate()
    return cfg


def preset_config(name: str) -> Config:
    return parse_config("", preset=name)
