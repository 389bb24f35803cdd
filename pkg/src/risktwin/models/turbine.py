"""Horizontal-axis wind turbine: BEM blade loads, rotor dynamics with a
brake, power curve, tapered-tower stress, and the three limit states
(blade flapwise moment, hub shaft moment, tower stress).

All per-element aero quantities broadcast over a leading sample axis, so
a whole ensemble of wind realizations evaluates in one vectorized pass.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate

from .tables import LookupTable, default_table

NO_INDUCTION = "no-induction"
BEM_ITERATIVE = "bem-iterative"


@dataclass(frozen=True)
class TurbineParams:
    # tower
    tower_height: float = 80.0      # H, m
    base_diameter: float = 10.0     # D, m
    top_diameter: float = 4.0       # d, m
    wall_thickness: float = 0.02    # m
    # rotor
    rotor_radius: float = 20.3      # R, m
    n_blades: int = 3               # B
    blade_mass: float = 4000.0      # kg
    friction_coeff: float = 0.01    # k_f, 1/s
    omega_max: float = 1.8          # brake engagement speed, rad/s
    air_density: float = 1.29       # rho, kg/m^3
    gust_factor: float = 1.0        # eta
    blade_inertia: float | None = None   # I_b; uniform-rod default m R^2 / 3
    # lookup tables
    chord: LookupTable = field(default_factory=lambda: default_table("blade_chord.txt"))
    lift: LookupTable = field(default_factory=lambda: default_table("lift_coeff.txt"))
    drag: LookupTable = field(default_factory=lambda: default_table("drag_coeff.txt"))
    power: LookupTable = field(default_factory=lambda: default_table("power_coeff.txt"))
    # BEM controls
    bem_mode: str = NO_INDUCTION
    tip_loss: bool = False
    relaxation: float = 0.5
    bem_tol: float = 1e-6
    bem_max_iter: int = 200
    tower_grid: int = 64

    def __post_init__(self):
        if self.omega_max <= 0:
            raise ValueError("omega_max must be > 0")
        if self.bem_mode not in (NO_INDUCTION, BEM_ITERATIVE):
            raise ValueError(f"unknown BEM mode '{self.bem_mode}'")
        if self.tower_grid < 64:
            raise ValueError("tower grid needs at least 64 heights")

    @property
    def inertia_per_blade(self) -> float:
        if self.blade_inertia is not None:
            return self.blade_inertia
        return self.blade_mass * self.rotor_radius**2 / 3.0

    @property
    def radii(self) -> np.ndarray:
        """BEM element stations: the chord table's radii."""
        return self.chord.x

    @cached_property
    def _tower_factors(self):
        """Per-height factors so sigma(h) = hypot(F_N*K1, V_w^2*K2)."""
        h = np.linspace(0.0, self.tower_height, self.tower_grid)
        d_h = self.base_diameter + (self.top_diameter - self.base_diameter) * h / self.tower_height
        i_t = math.pi * d_h**3 * self.wall_thickness / 8.0
        k1 = (self.tower_height - h) * d_h / (2.0 * i_t)
        shear = np.empty_like(h)
        big_h = self.tower_height
        for i, hi in enumerate(h):
            integrand = lambda z, hi=hi: (
                (z - hi) * (z / big_h) ** 0.3
                * (self.base_diameter + (self.top_diameter - self.base_diameter) * z / big_h)
            )
            shear[i], _ = integrate.quad(integrand, hi, big_h, limit=200)
        k2 = 0.5 * self.air_density * self.gust_factor * shear * d_h / (2.0 * i_t)
        return h, k1, k2

    @cached_property
    def _tower_pareto(self):
        """Heights that can host the stress maximum: the Pareto frontier of
        (K1, K2), since hypot(F K1, V^2 K2) is monotone in both factors."""
        _, k1, k2 = self._tower_factors
        order = np.argsort(-k1, kind="stable")
        keep = []
        best_k2 = -np.inf
        for idx in order:
            if k2[idx] > best_k2:
                keep.append(idx)
                best_k2 = k2[idx]
        keep = np.sort(np.array(keep))
        return k1[keep], k2[keep]


@dataclass
class TurbineState:
    omega: float = 0.0          # rad/s
    yaw: float = 0.0            # theta_Y, rad
    pitch: float = 0.0          # theta_p, rad
    brake: bool = False
    wind_speed: float = 0.0     # V_w, m/s
    wind_dir: float = 0.0       # theta_w, rad
    clock: float = 0.0          # s


def effective_normal_wind(v_w, theta_w, yaw):
    """Wind speed component perpendicular to the rotor plane:
    V_0 = V_w * sin|theta_w - theta_Y|."""
    return np.asarray(v_w, dtype=float) * np.abs(np.sin(np.asarray(theta_w) - yaw))


@dataclass
class BladeLoads:
    """Per-element aero solution; arrays have shape (n_samples, n_elements)."""

    radii: np.ndarray
    p_n: np.ndarray
    p_t: np.ndarray
    a: np.ndarray
    a_prime: np.ndarray
    theta_rel: np.ndarray
    theta_att: np.ndarray
    converged: np.ndarray       # per-sample bool
    iterations: int = 0


def _coefficients(params: TurbineParams, theta_att):
    att_deg = np.degrees(theta_att)
    return params.lift(att_deg), params.drag(att_deg)


def _induction_update(params, sigma, theta_rel, c_n, c_t, r):
    sin_t = np.sin(theta_rel)
    cos_t = np.cos(theta_rel)
    f = np.ones_like(sin_t)
    if params.tip_loss:
        sin_safe = np.maximum(sin_t, 1e-9)
        arg = np.exp(-params.n_blades * (params.rotor_radius - r) / (2.0 * r * sin_safe))
        f = np.maximum((2.0 / math.pi) * np.arccos(np.clip(arg, -1.0, 1.0)), 1e-3)
    with np.errstate(divide="ignore", invalid="ignore"):
        a_new = 1.0 / (4.0 * f * sin_t**2 / (sigma * c_n) + 1.0)
        ap_new = 1.0 / (4.0 * f * sin_t * cos_t / (sigma * c_t) - 1.0)
    a_new = np.where(c_n > 0, a_new, 0.0)
    ap_new = np.where(np.isfinite(ap_new), ap_new, 0.0)
    return a_new, ap_new


def bem_solve(v0, omega: float, pitch: float,
              params: TurbineParams = None, mode: str | None = None) -> BladeLoads:
    """Per-element blade loads for normal wind v0 (scalar or (n,) array).

    no-induction mode fixes a = a' = 0 (vortex effect neglected);
    bem-iterative fixed-points the induction factors with under-relaxation,
    flagging any sample that fails to converge within the iteration cap.
    """
    params = params or TurbineParams()
    mode = mode or params.bem_mode
    v0 = np.atleast_1d(np.asarray(v0, dtype=float))
    if np.any(v0 < 0) or omega < 0:
        raise ValueError("v0 and omega must be non-negative")
    r = params.radii
    c = params.chord.y
    n = v0.shape[0]
    shape = (n, r.size)
    v0c = v0[:, None]
    tangential = np.broadcast_to(omega * r, shape)

    a = np.zeros(shape)
    ap = np.zeros(shape)
    converged = np.ones(n, dtype=bool)
    iterations = 0

    if mode == BEM_ITERATIVE:
        sigma = c * params.n_blades / (2.0 * math.pi * r)
        converged = np.zeros(n, dtype=bool)
        for iterations in range(1, params.bem_max_iter + 1):
            theta_rel = np.arctan2((1.0 - a) * v0c, (1.0 + ap) * tangential)
            c_l, c_d = _coefficients(params, theta_rel - pitch)
            c_n = c_l * np.cos(theta_rel) + c_d * np.sin(theta_rel)
            c_t = c_l * np.sin(theta_rel) - c_d * np.cos(theta_rel)
            a_new, ap_new = _induction_update(params, sigma, theta_rel, c_n, c_t, r)
            resid = np.maximum(np.abs(a_new - a), np.abs(ap_new - ap)).max(axis=1)
            converged = resid < params.bem_tol
            if converged.all():
                break
            a = a + params.relaxation * (a_new - a)
            ap = ap + params.relaxation * (ap_new - ap)

    if mode == BEM_ITERATIVE:
        axial = (1.0 - a) * v0c
        tang = (1.0 + ap) * tangential
    else:
        axial = np.broadcast_to(v0c, shape)
        tang = tangential
    theta_rel = np.arctan2(axial, tang)
    theta_att = theta_rel - pitch
    v_rel_sq = axial * axial + tang * tang
    c_l, c_d = _coefficients(params, theta_att)
    q = (0.5 * params.air_density) * v_rel_sq * c
    sin_t = np.sin(theta_rel)
    cos_t = np.cos(theta_rel)
    p_n = q * (c_l * cos_t + c_d * sin_t)
    p_t = q * (c_l * sin_t - c_d * cos_t)
    return BladeLoads(radii=r, p_n=p_n, p_t=p_t, a=a, a_prime=ap,
                      theta_rel=theta_rel, theta_att=theta_att,
                      converged=converged, iterations=iterations)


_moment_weight_cache: dict[bytes, tuple[np.ndarray, np.ndarray]] = {}


def _station_weights(radii: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-station weights turning a load profile into the exact integrals
    of r*p(r) and p(r) for the piecewise-linear interpolant: M = p @ w."""
    r = np.asarray(radii, dtype=float)
    key = r.tobytes()
    hit = _moment_weight_cache.get(key)
    if hit is not None:
        return hit
    if r.size < 2:
        raise ValueError("need at least two blade elements")
    dr = np.diff(r)
    if np.any(dr <= 0):
        raise ValueError("element radii must be strictly increasing")
    r0, r1 = r[:-1], r[1:]
    a = (r1**3 - r0**3) / (3.0 * dr)
    b = (r1**2 - r0**2) / (2.0 * dr)
    w_moment = np.zeros_like(r)
    # p0 coefficient: r1*b - a ; p1 coefficient: a - r0*b
    np.add.at(w_moment, np.arange(r.size - 1), r1 * b - a)
    np.add.at(w_moment, np.arange(1, r.size), a - r0 * b)
    w_span = np.zeros_like(r)
    np.add.at(w_span, np.arange(r.size - 1), 0.5 * dr)
    np.add.at(w_span, np.arange(1, r.size), 0.5 * dr)
    _moment_weight_cache[key] = (w_moment, w_span)
    return w_moment, w_span


def _linear_load_moment(p, radii) -> np.ndarray:
    """Exact integral of r * p(r) for a piecewise-linear load profile."""
    w_moment, _ = _station_weights(radii)
    return np.atleast_2d(np.asarray(p, dtype=float)) @ w_moment


def shaft_torque(p_t, radii) -> np.ndarray:
    """Shaft torque from the tangential load profile (per-blade integral)."""
    return _linear_load_moment(p_t, radii)


def flap_moment(p_n, radii) -> np.ndarray:
    """Flapwise root bending moment from the normal load profile."""
    return _linear_load_moment(p_n, radii)


def rotor_thrust(p_n, radii) -> np.ndarray:
    """Integral of p_N over the span (trapezoid is exact for linear loads)."""
    _, w_span = _station_weights(radii)
    return np.atleast_2d(np.asarray(p_n, dtype=float)) @ w_span


def rotor_step(omega: float, m_shaft: float, dt: float,
               params: TurbineParams = None) -> tuple[float, bool]:
    """Explicit-Euler rotor speed update with the brake clamp.

    omega_dot = M_shaft / (B I_b) - k_f omega; the brake holds omega at
    omega_max while the unclamped update would exceed it.
    """
    params = params or TurbineParams()
    if dt <= 0:
        raise ValueError("dt must be > 0")
    omega_dot = m_shaft / (params.n_blades * params.inertia_per_blade) - params.friction_coeff * omega
    omega_new = omega + dt * omega_dot
    if omega_new >= params.omega_max:
        return params.omega_max, True
    return max(omega_new, 0.0), False


def turbine_power(v0, omega: float, params: TurbineParams = None) -> np.ndarray:
    """P = 1/2 rho V0^3 (pi R^2) C_p(lambda), lambda = omega R / V0."""
    params = params or TurbineParams()
    v0 = np.asarray(v0, dtype=float)
    area = math.pi * params.rotor_radius**2
    lam = omega * params.rotor_radius / np.where(v0 > 0, v0, 1.0)
    c_p = params.power(lam, warn_clamp=True)
    return np.where(v0 > 0, 0.5 * params.air_density * v0**3 * area * c_p, 0.0)


def tower_stress(f_n, v_w, params: TurbineParams = None,
                 grid: int | None = None):
    """Max-over-height tower stress and the full profile.

    sigma(h) = sqrt(sigma_1^2 + sigma_2^2) with sigma_1 from the rotor
    thrust moment F_N (H - h) and sigma_2 from the height-sheared wind
    pressure integral; both divided through the local thin-walled annulus
    modulus. Broadcasts over sample arrays f_n, v_w.
    """
    params = params or TurbineParams()
    if grid is not None and grid != params.tower_grid:
        params = dataclasses.replace(params, tower_grid=grid)
    f_n = np.atleast_1d(np.asarray(f_n, dtype=float))
    v_w = np.atleast_1d(np.asarray(v_w, dtype=float))
    if np.any(f_n < 0) or np.any(v_w < 0):
        raise ValueError("f_n and v_w must be non-negative")
    _, k1, k2 = params._tower_factors
    sigma1 = f_n[:, None] * k1
    sigma2 = (v_w[:, None] ** 2) * k2
    profile = np.hypot(sigma1, sigma2)
    return profile.max(axis=1), profile


def tower_stress_max(f_n, v_w, params: TurbineParams = None) -> np.ndarray:
    """Max-over-height stress only, evaluated on the Pareto heights."""
    params = params or TurbineParams()
    f_n = np.atleast_1d(np.asarray(f_n, dtype=float))
    v_w = np.atleast_1d(np.asarray(v_w, dtype=float))
    k1, k2 = params._tower_pareto
    return np.hypot(f_n[:, None] * k1, (v_w[:, None] ** 2) * k2).max(axis=1)


def tower_shear_moment(h: float, v_w: float, params: TurbineParams = None) -> float:
    """M_2(h): distributed wind-pressure moment about height h (quadrature)."""
    params = params or TurbineParams()
    big_h = params.tower_height

    def integrand(z):
        d_z = params.base_diameter + (params.top_diameter - params.base_diameter) * z / big_h
        return (z - h) * (v_w * (z / big_h) ** 0.15) ** 2 * params.gust_factor * d_z

    val, _ = integrate.quad(integrand, h, big_h, limit=200)
    return 0.5 * params.air_density * val


def turbine_limit_states(thresholds, m_flap, m_shaft, sigma_tower_max,
                         omega: float, params: TurbineParams = None):
    """(g_blade, g_hub, g_tower) per sample.

    thresholds columns: (M_flap^thr, M_shaft^thr, sigma_tower^thr). The hub
    uses the net shaft moment after the friction/brake correction
    M_shaft - B I_b k_f omega.
    """
    params = params or TurbineParams()
    thr = np.atleast_2d(np.asarray(thresholds, dtype=float))
    m_flap = np.asarray(m_flap, dtype=float)
    m_shaft = np.asarray(m_shaft, dtype=float)
    m_net = m_shaft - params.n_blades * params.inertia_per_blade * params.friction_coeff * omega
    g_blade = thr[:, 0] - np.abs(m_flap)
    g_hub = thr[:, 1] - np.abs(m_net)
    g_tower = thr[:, 2] - np.asarray(sigma_tower_max, dtype=float)
    return g_blade, g_hub, g_tower
