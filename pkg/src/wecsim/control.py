"""Frequency regulators driving the dump load.

Two laws share the same error signals, the bus frequency error ``e_f`` (Hz)
and the wrapped phase error ``e_theta`` (rad) against a constant-frequency
reference ramp:

* a PD law, proportional on phase and derivative (frequency) action, and
* a first-order Sugeno fuzzy network with online consequent adaptation.

Both return a dump-load power demand in watts; positive surplus of frequency
or phase asks for more dumping.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap_angle(x: float) -> float:
    """Wrap to (-pi, pi]."""
    w = math.remainder(x, TWO_PI)
    return math.pi if w == -math.pi else w


@dataclass(frozen=True)
class MeasurementState:
    f_meas: float = 50.0
    theta_err: float = 0.0


@dataclass(frozen=True)
class PdParams:
    k_p: float = 2.5e5
    k_d: float = 5.0e4
    tau_meas: float = 0.02

    def __post_init__(self):
        if not (self.k_p >= 0 and self.k_d >= 0):
            raise ValueError("pd gains must be >= 0")
        if not self.tau_meas > 0:
            raise ValueError("pll.tau must be > 0")


def measure_frequency_phase(state, bus, f_ref, t, dt, tau=0.02) -> MeasurementState:
    """One step of the frequency filter plus the exact wrapped phase error.

    ``bus`` only needs ``omega_e`` and ``theta_e`` attributes.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    f_true = bus.omega_e / TWO_PI
    f_meas = state.f_meas + dt / tau * (f_true - state.f_meas)
    return MeasurementState(f_meas, wrap_angle(bus.theta_e - TWO_PI * f_ref * t))


def pd_control_step(meas: MeasurementState, f_ref: float, params: PdParams) -> float:
    return params.k_p * meas.theta_err + params.k_d * TWO_PI * (meas.f_meas - f_ref)


@dataclass(frozen=True)
class AnfisNet:
    """
    Two-input first-order Sugeno network on a full grid of Gaussian MFs.

    Rule ``r = i*m + j`` pairs frequency MF ``i`` with phase MF ``j``; its
    consequent row is ``(a_f, a_theta, b)`` and its output
    ``a_f*e_f + a_theta*e_theta + b``.

    Attributes
    ----------
    centers_f, widths_f, centers_theta, widths_theta : ndarray, shape (m,)
        Membership functions ``exp(-0.5*((x - c)/w)**2)``.
    consequents : ndarray, shape (m*m, 3)
    learn_rate : float
        NLMS step size; zero freezes the network.
    k_p, k_d : float
        Reference PD gains defining the adaptation error.
    scale : ndarray, shape (3,)
        Per-column consequent scale; one step moves a parameter by at most
        1 % of it.
    plant_sign : int
        +1: more dump power lowers frequency.
    """

    centers_f: np.ndarray
    widths_f: np.ndarray
    centers_theta: np.ndarray
    widths_theta: np.ndarray
    consequents: np.ndarray
    learn_rate: float = 0.0
    k_p: float = 0.0
    k_d: float = 0.0
    scale: np.ndarray = None
    plant_sign: int = 1

    def __post_init__(self):
        m = len(self.centers_f)
        if m < 2 or len(self.centers_theta) < 2:
            raise ValueError("need at least two membership functions per input")
        if np.any(self.widths_f <= 0) or np.any(self.widths_theta <= 0):
            raise ValueError("membership widths must be > 0")
        if self.consequents.shape != (m * len(self.centers_theta), 3):
            raise ValueError("consequents must have one (a_f, a_theta, b) row per rule")
        if self.scale is None:
            s = np.maximum(np.abs(self.consequents).max(axis=0), 1.0)
            object.__setattr__(self, "scale", s)

    @property
    def n_rules(self) -> int:
        return self.consequents.shape[0]

    @property
    def box(self):
        return (
            (float(self.centers_f.min()), float(self.centers_f.max())),
            (float(self.centers_theta.min()), float(self.centers_theta.max())),
        )


def _firing(net: AnfisNet, e_f: float, e_theta: float) -> np.ndarray:
    zf = (e_f - net.centers_f) / net.widths_f
    zt = (e_theta - net.centers_theta) / net.widths_theta
    return np.outer(np.exp(-0.5 * zf * zf), np.exp(-0.5 * zt * zt)).ravel()


def normalized_firing(net: AnfisNet, e_f: float, e_theta: float):
    """Normalised rule strengths and the inputs actually used.

    Inputs far outside the MF grid can underflow every strength to zero; they
    are then clamped into the grid box.
    """
    w = _firing(net, e_f, e_theta)
    total = w.sum()
    if not total > 1e-300:
        (flo, fhi), (tlo, thi) = net.box
        e_f = min(max(e_f, flo), fhi)
        e_theta = min(max(e_theta, tlo), thi)
        w = _firing(net, e_f, e_theta)
        total = w.sum()
    return w / total, e_f, e_theta


def anfis_evaluate(net: AnfisNet, e_f: float, e_theta: float) -> float:
    wn, e_f, e_theta = normalized_firing(net, e_f, e_theta)
    c = net.consequents
    y = c[:, 0] * e_f + c[:, 1] * e_theta + c[:, 2]
    return float(wn @ y)


def anfis_consequent_gradient(net: AnfisNet, e_f: float, e_theta: float) -> np.ndarray:
    """``d u / d consequents``, same shape as ``net.consequents``."""
    wn, e_f, e_theta = normalized_firing(net, e_f, e_theta)
    return np.outer(wn, (e_f, e_theta, 1.0))


def anfis_adapt(net: AnfisNet, e_f: float, e_theta: float, u_applied: float, dt: float) -> AnfisNet:
    """
    Normalised-LMS step on the rule consequents.

    The error signal is the PD-form regulation error
    ``plant_sign*(k_p*e_theta + k_d*2*pi*e_f)``; premise parameters stay
    fixed. ``u_applied`` and ``dt`` are accepted for interface symmetry with
    the simulation loop and do not enter the update.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    eps = net.plant_sign * (net.k_p * e_theta + net.k_d * TWO_PI * e_f)
    if eps == 0.0 or net.learn_rate == 0.0:
        return net
    wn, e_f, e_theta = normalized_firing(net, e_f, e_theta)
    x = np.array((e_f, e_theta, 1.0))
    delta = (net.learn_rate * eps / (1.0 + e_f * e_f + e_theta * e_theta)) * np.outer(wn, x)
    lim = 0.01 * net.scale
    np.clip(delta, -lim, lim, out=delta)
    return AnfisNet(
        net.centers_f,
        net.widths_f,
        net.centers_theta,
        net.widths_theta,
        net.consequents + delta,
        net.learn_rate,
        net.k_p,
        net.k_d,
        net.scale,
        net.plant_sign,
    )


def anfis_init_from_pd(
    pd: PdParams,
    m: int = 5,
    ranges=((-2.0, 2.0), (-math.pi, math.pi)),
    learn_rate: float = 0.0,
    u_scale: float | None = None,
) -> AnfisNet:
    """
    Network whose every rule carries the PD law, so it reproduces
    ``pd_control_step`` exactly until adaptation moves it.

    ``u_scale`` sets the clamp scale of the bias column (W); by default the
    PD output at the corner of the input box.
    """
    if m < 2:
        raise ValueError("anfis.mfs must be >= 2")
    (flo, fhi), (tlo, thi) = ranges
    if not (flo < fhi and tlo < thi):
        raise ValueError(f"degenerate ANFIS input ranges {ranges!r}")
    cf = np.linspace(flo, fhi, m)
    ct = np.linspace(tlo, thi, m)
    wf = np.full(m, (cf[1] - cf[0]) / math.sqrt(2.0))
    wt = np.full(m, (ct[1] - ct[0]) / math.sqrt(2.0))
    a_f = pd.k_d * TWO_PI
    cons = np.tile((a_f, pd.k_p, 0.0), (m * m, 1))
    if u_scale is None:
        u_scale = a_f * max(abs(flo), abs(fhi)) + pd.k_p * max(abs(tlo), abs(thi))
    scale = np.array([max(a_f, 1.0), max(pd.k_p, 1.0), max(u_scale, 1.0)])
    return AnfisNet(cf, wf, ct, wt, cons, learn_rate, pd.k_p, pd.k_d, scale)


def save_anfis(net: AnfisNet, path) -> None:
    """Write one rule per line: ``c_f c_theta w_f w_theta a_f a_theta b``."""
    m_t = len(net.centers_theta)
    lines = [
        "# wecsim anfis v1",
        f"# learn_rate {net.learn_rate!r}",
        f"# k_p {net.k_p!r}",
        f"# k_d {net.k_d!r}",
        f"# plant_sign {net.plant_sign}",
        "# scale " + " ".join(repr(float(s)) for s in net.scale),
        "# c_f c_theta w_f w_theta a_f a_theta b",
    ]
    for r, (a_f, a_t, b) in enumerate(net.consequents):
        i, j = divmod(r, m_t)
        vals = (net.centers_f[i], net.centers_theta[j], net.widths_f[i], net.widths_theta[j], a_f, a_t, b)
        lines.append(" ".join(repr(float(v)) for v in vals))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_anfis(path) -> AnfisNet:
    meta = {}
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) >= 2 and parts[0] in ("learn_rate", "k_p", "k_d", "plant_sign", "scale"):
                meta[parts[0]] = [float(p) for p in parts[1:]]
            continue
        rows.append([float(v) for v in line.split()])
    a = np.array(rows)
    if a.ndim != 2 or a.shape[1] != 7:
        raise ValueError(f"{path}: expected 7 columns per rule line")
    cf, idx_f = np.unique(a[:, 0], return_index=True)
    ct, idx_t = np.unique(a[:, 1], return_index=True)
    if len(cf) * len(ct) != len(a):
        raise ValueError(f"{path}: rules do not form a full MF grid")
    return AnfisNet(
        cf,
        a[idx_f, 2],
        ct,
        a[idx_t, 3],
        a[:, 4:7].copy(),
        meta.get("learn_rate", [0.0])[0],
        meta.get("k_p", [0.0])[0],
        meta.get("k_d", [0.0])[0],
        np.array(meta["scale"]) if "scale" in meta else None,
        int(meta.get("plant_sign", [1])[0]),
    )
