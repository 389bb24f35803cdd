"""Cantilever beam with a three-motor mechanical arm pressing from below.

The beam is held at the wall and at a vertical support l1 from the wall;
the sensor reads the support reaction. The arm (base at (0.3, -0.3) m)
can push up at its endpoint; the contact abscissa enters the reaction and
the bending limit state. Angles are clockwise-positive, in radians.

Two coordinate conventions for the contact abscissa are supported: the
printed one (endpoint u-coordinate used directly) and a support-relative
one (endpoint u minus l1); see BeamArmParams.lc_convention.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

UNCONTROLLED = "uncontrolled"
CONTROLLED = "controlled"


@dataclass(frozen=True)
class BeamArmParams:
    # beam geometry/mechanics
    l: float = 1.0              # full length, m
    l1: float = 0.4             # wall-to-support distance, m
    l2: float = 0.6             # cantilever span, m
    h_b: float = 0.002          # thickness, m
    b_b: float = 0.04           # width, m (carried, unused by the limit states)
    inertia: float = 2.67e-11   # second moment I, m^4
    e_mod: float = 200e9        # Young's modulus, Pa (carried, unused)
    # arm geometry
    a0: float = 0.052           # base column, m (carried; kinematics sum starts at a1)
    a1: float = 0.093
    a2: float = 0.093
    a3: float = 0.078
    motor_weight: float = 5.5   # G_m, N
    base: tuple[float, float] = (0.3, -0.3)
    gravity: float = 9.80665    # kgf -> N conversion for the load channel
    n_stations: int = 64        # fixed beam evaluation grid
    n_segments: int = 4
    lc_convention: str = "printed"   # "printed" | "support-relative"

    def __post_init__(self):
        if abs(self.l - (self.l1 + self.l2)) > 1e-12:
            raise ValueError(f"l must equal l1 + l2, got {self.l} != {self.l1} + {self.l2}")
        for name in ("l", "l1", "l2", "h_b", "b_b", "a1", "a2", "a3"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.inertia <= 0:
            raise ValueError("I must be > 0")
        if self.lc_convention not in ("printed", "support-relative"):
            raise ValueError(f"unknown lc convention '{self.lc_convention}'")

    @property
    def arm_lengths(self) -> np.ndarray:
        return np.array([self.a1, self.a2, self.a3])

    @property
    def reach(self) -> float:
        return self.a1 + self.a2 + self.a3

    def stations(self) -> np.ndarray:
        """Evaluation abscissae strictly inside the cantilever span (0, l2)."""
        k = np.arange(self.n_stations)
        return self.l2 * (k + 0.5) / self.n_stations


@dataclass
class ArmPose:
    """Commanded angles plus realized perturbations; contact selects the phase."""

    theta: np.ndarray = field(default_factory=lambda: np.zeros(3))
    delta: np.ndarray = field(default_factory=lambda: np.zeros(3))
    contact: bool = False

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float).reshape(3)
        self.delta = np.asarray(self.delta, dtype=float).reshape(3)

    @property
    def phase(self) -> str:
        return CONTROLLED if self.contact else UNCONTROLLED


def _cumulative_sines(theta, delta):
    """sin/cos of the cumulative joint angles; broadcasts delta over rows."""
    ang = np.cumsum(np.atleast_2d(np.asarray(theta, dtype=float)
                                  + np.asarray(delta, dtype=float)), axis=-1)
    return np.sin(ang), np.cos(ang)


def arm_forward_kinematics(pose: ArmPose, params: BeamArmParams = BeamArmParams()):
    """Endpoint (u, v) and contact abscissa l_c for a pose.

    u - u0 = sum_i a_i sin(cumulative angle_i), v - v0 likewise with cos.
    """
    s, c = _cumulative_sines(pose.theta, pose.delta)
    a = params.arm_lengths
    u = params.base[0] + float(np.dot(s[0], a))
    v = params.base[1] + float(np.dot(c[0], a))
    l_c = u if params.lc_convention == "printed" else u - params.l1
    return (u, v), l_c


def contact_abscissa(theta, delta, params: BeamArmParams) -> np.ndarray:
    """Vectorized l_c over perturbation rows at a fixed commanded pose."""
    s, _ = _cumulative_sines(theta, delta)
    u = params.base[0] + s @ params.arm_lengths
    return u if params.lc_convention == "printed" else u - params.l1


def beam_support_reaction(w, f_c, l_c, phase: str, params: BeamArmParams = BeamArmParams()):
    """Support reaction R; w, f_c and the result share one force unit.

    Uncontrolled: R = (l/l1) w. Controlled: R = (l/l1) w - ((l_c + l1)/l1) f_c.
    """
    w = np.asarray(w, dtype=float)
    base = (params.l / params.l1) * w
    if phase == UNCONTROLLED:
        return base
    f_c = np.asarray(f_c, dtype=float)
    l_c = np.asarray(l_c, dtype=float)
    return base - (l_c + params.l1) / params.l1 * f_c


def beam_limit_state(w_n, sigma_max, u, phase: str,
                     f_c=0.0, l_c=0.0,
                     params: BeamArmParams = BeamArmParams()) -> np.ndarray:
    """Bending limit state G_b at abscissa u in (0, l2); w_n, f_c in newtons.

    Broadcasts sample columns (w_n, sigma_max, f_c, l_c) against a station
    grid u; returns shape (n_samples, n_stations).
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if np.any(u <= 0) or np.any(u >= params.l2):
        raise ValueError(f"stations must lie strictly inside (0, {params.l2})")
    w_n = np.asarray(w_n, dtype=float).reshape(-1, 1)
    sigma_max = np.asarray(sigma_max, dtype=float).reshape(-1, 1)
    half_h_over_i = params.h_b / (2.0 * params.inertia)
    g = sigma_max - w_n * (params.l2 - u) * half_h_over_i
    if phase == CONTROLLED:
        f_c = np.asarray(f_c, dtype=float).reshape(-1, 1)
        l_c = np.asarray(l_c, dtype=float).reshape(-1, 1)
        relief = f_c * (l_c - u) * half_h_over_i
        g = g + np.where(u < l_c, relief, 0.0)
    return g


def motor_moments(theta, delta, f_c, phase: str,
                  params: BeamArmParams = BeamArmParams()) -> np.ndarray:
    """Moments (m1, m2, m3) at the motors; broadcasts delta/f_c over rows.

    The motor-weight terms are always present; the contact-force terms only
    in the controlled phase, and m3 = 0 uncontrolled.
    """
    s, _ = _cumulative_sines(theta, delta)
    a = params.arm_lengths
    g_m = params.motor_weight
    m1 = g_m * (a[0] * s[..., 0] + (a[0] * s[..., 0] + a[1] * s[..., 1]))
    m2 = g_m * a[1] * s[..., 1]
    m3 = np.zeros_like(m1)
    if phase == CONTROLLED:
        f_c = np.asarray(f_c, dtype=float)
        m1 = m1 + f_c * (a[0] * s[..., 0] + a[1] * s[..., 1] + a[2] * s[..., 2])
        m2 = m2 + f_c * (a[1] * s[..., 1] + a[2] * s[..., 2])
        m3 = m3 + f_c * a[2] * s[..., 2]
    return np.stack([m1, m2, m3], axis=-1)


def motor_limit_states(m_max, theta, delta, f_c, phase: str,
                       params: BeamArmParams = BeamArmParams()) -> np.ndarray:
    """G_a^i = m_max - m_i per motor; shape (n_samples, 3)."""
    m = motor_moments(theta, delta, f_c, phase, params)
    return np.asarray(m_max, dtype=float).reshape(-1, 1) - m
