"""Fixed-pitch wind rotor and a stochastic wind-speed source."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

BETZ_LIMIT = 16.0 / 27.0
DEFAULT_CP_COEFFICIENTS = (0.5176, 116.0, 0.4, 5.0, 21.0, 0.0068)


def power_coefficient(lam: float, coefficients=DEFAULT_CP_COEFFICIENTS) -> float:
    """
    Power coefficient of a fixed-pitch rotor (pitch angle zero).

    Uses the six-coefficient exponential fit
    ``Cp = c1*(c2/li - c4)*exp(-c5/li) + c6*lam`` with ``1/li = 1/lam - 0.035``.
    ``c3`` multiplies the pitch angle and therefore drops out. Negative values
    are clamped to zero.
    """
    if not lam > 0:
        raise ValueError(f"tip-speed ratio must be > 0, got {lam!r}")
    c1, c2, _, c4, c5, c6 = coefficients
    inv_li = 1.0 / lam - 0.035
    if inv_li <= 0.0:
        # beyond the fit's pole; the rotor only produces drag here
        return 0.0
    cp = c1 * (c2 * inv_li - c4) * math.exp(-c5 * inv_li) + c6 * lam
    return cp if cp > 0.0 else 0.0


def optimal_tip_speed_ratio(coefficients=DEFAULT_CP_COEFFICIENTS, step: float = 0.01):
    """Scan ``lam`` over (0, 15] and return ``(lambda_opt, cp_max)``."""
    grid = np.arange(1, int(round(15.0 / step)) + 1) * step
    cps = np.array([power_coefficient(x, coefficients) for x in grid])
    k = int(np.argmax(cps))
    return float(grid[k]), float(cps[k])


@dataclass(frozen=True)
class TurbineParams:
    """
    Rotor aerodynamics and drivetrain.

    ``gear_ratio=None`` places the optimum tip-speed ratio at rated wind and
    generator synchronous speed (``sync_speed_mech``, rad/s).
    """

    rated_power: float = 275e3
    rated_wind: float = 8.0
    rotor_radius: float = 24.0
    air_density: float = 1.225
    gear_ratio: float | None = None
    cp_coefficients: tuple = DEFAULT_CP_COEFFICIENTS
    sync_speed_mech: float = 2.0 * math.pi * 50.0 / 2
    lambda_opt: float = field(init=False)
    cp_max: float = field(init=False)

    def __post_init__(self):
        for name in ("rated_power", "rated_wind", "rotor_radius", "air_density", "sync_speed_mech"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"turbine.{name} must be finite and > 0, got {v!r}")
        if len(self.cp_coefficients) != 6:
            raise ValueError("turbine.cp_coefficients needs six values")
        lam_opt, cp_max = optimal_tip_speed_ratio(tuple(self.cp_coefficients))
        if cp_max >= BETZ_LIMIT:
            raise ValueError(f"Cp curve peaks at {cp_max:.3f}, above the Betz limit")
        object.__setattr__(self, "cp_coefficients", tuple(float(c) for c in self.cp_coefficients))
        object.__setattr__(self, "lambda_opt", lam_opt)
        object.__setattr__(self, "cp_max", cp_max)
        if self.gear_ratio is None:
            omega_rotor = lam_opt * self.rated_wind / self.rotor_radius
            object.__setattr__(self, "gear_ratio", self.sync_speed_mech / omega_rotor)
        if not (math.isfinite(self.gear_ratio) and self.gear_ratio >= 1.0):
            raise ValueError(f"turbine.gear_ratio must be >= 1, got {self.gear_ratio!r}")

    @property
    def swept_area(self) -> float:
        return math.pi * self.rotor_radius**2


def aerodynamic_power(wind: float, omega_gen_mech: float, params: TurbineParams) -> float:
    """Shaft power captured from the wind (W)."""
    if wind <= 0.0:
        return 0.0
    lam = omega_gen_mech / params.gear_ratio * params.rotor_radius / wind
    if lam <= 0.0:
        return 0.0
    cp = power_coefficient(lam, params.cp_coefficients)
    return 0.5 * params.air_density * params.swept_area * cp * wind**3


def turbine_torque(wind: float, omega_gen_mech: float, params: TurbineParams) -> float:
    """Torque on the generator shaft (N m), negative because it drives the rotor."""
    if wind == 0.0:
        return 0.0
    return -aerodynamic_power(wind, omega_gen_mech, params) / omega_gen_mech


@dataclass(frozen=True)
class WindModel:
    mean_speed: float = 8.0
    turbulence_intensity: float = 0.1
    correlation_time: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if not self.mean_speed > 0:
            raise ValueError(f"wind.mean must be > 0, got {self.mean_speed!r}")
        if not 0.0 <= self.turbulence_intensity < 0.5:
            raise ValueError(f"wind.ti must lie in [0, 0.5), got {self.turbulence_intensity!r}")
        if not self.correlation_time > 0:
            raise ValueError(f"wind.tau must be > 0, got {self.correlation_time!r}")


def generate_wind_series(model: WindModel, dt: float, n_steps: int) -> np.ndarray:
    """
    Ornstein-Uhlenbeck wind speed, Euler-Maruyama discretised.

    ``v[0]`` is the mean; samples are clamped to ``[0.5, 1.5] * mean``.
    """
    if not dt > 0 or n_steps < 1:
        raise ValueError("need dt > 0 and n_steps >= 1")
    mean = model.mean_speed
    sigma = model.turbulence_intensity * mean
    a = dt / model.correlation_time
    gain = sigma * math.sqrt(2.0 * a)
    xi = np.random.default_rng(model.seed).standard_normal(n_steps)
    lo, hi = 0.5 * mean, 1.5 * mean

    v = np.empty(n_steps)
    v[0] = x = mean
    for k in range(1, n_steps):
        x = x + a * (mean - x) + gain * xi[k - 1]
        x = lo if x < lo else hi if x > hi else x
        v[k] = x
    return v
