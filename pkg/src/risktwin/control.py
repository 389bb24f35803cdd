"""Risk-informed control: incremental arm steering under reliability
floors, and the turbine yaw/pitch decision rule.

The arm planner minimizes the linearized energy cost of one joint
increment subject to (a) the forward kinematics hitting the waypoint at
mean perturbations and (b) the predicted FOSM index of every motor
staying at or above the floor. Two kinematic equality constraints leave
one degree of freedom, parameterized by the first joint angle and scanned
on a grid with closed-form two-link inversion for the rest, then polished
locally around the cheapest feasible point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .models.beam_arm import BeamArmParams, motor_moments

GRID_POINTS = 512
WAYPOINT_TOL = 1e-4  # m


class UnreachableTargetError(ValueError):
    pass


class ConstraintInfeasibleError(RuntimeError):
    """No increment satisfies the reliability floor; carries the limiting
    motor and its predicted index so the operator sees why."""

    def __init__(self, motor: str, beta: float):
        super().__init__(f"reliability floor violated: {motor} at beta ~ {beta:.2f}")
        self.motor = motor
        self.beta = beta


@dataclass
class ArmStepReport:
    waypoint: tuple[float, float]
    dtheta: tuple[float, float, float]
    cost: float
    beta_pred: tuple[float, float, float]
    endpoint: tuple[float, float]
    phase: str


@dataclass
class ArmControlPlan:
    target: tuple[float, float]
    n_tau: int
    waypoints: list[tuple[float, float]]
    beta_floor: float
    status: str = "pending"        # pending | active | done | aborted
    abort_reason: str = ""
    steps: list[ArmStepReport] = field(default_factory=list)
    next_waypoint: int = 0

    @property
    def endpoint_error(self) -> float:
        if not self.steps:
            return math.nan
        last = self.steps[-1].endpoint
        return math.hypot(last[0] - self.target[0], last[1] - self.target[1])


def interpolate_path(p0, p_c, n_tau: int) -> list[tuple[float, float]]:
    """Linear interpolation: waypoint_tau = p0 + tau (p_c - p0) / n_tau."""
    if n_tau < 1:
        raise ValueError(f"n_tau must be >= 1, got {n_tau}")
    p0 = np.asarray(p0, dtype=float)
    p_c = np.asarray(p_c, dtype=float)
    return [tuple(p0 + tau * (p_c - p0) / n_tau) for tau in range(1, n_tau + 1)]


def expected_energy_cost(dtheta, theta, f_c: float, phase: str,
                         params: BeamArmParams = BeamArmParams()) -> float:
    """Linearized energy of an increment: sum_i |m_i(dTheta=0) dtheta_i|.

    Moments are evaluated at the current pose with perturbations at their
    mean (zero); valid in the small-increment regime.
    """
    m = motor_moments(np.asarray(theta, dtype=float), np.zeros(3), f_c, phase, params)[0]
    return float(np.sum(np.abs(m * np.asarray(dtheta, dtype=float))))


def _wrap(angle):
    return (np.asarray(angle) + math.pi) % (2.0 * math.pi) - math.pi


def _two_link_solutions(vec_u: float, vec_v: float, a2: float, a3: float):
    """Cumulative angles (c2, c3) of the inner two links reaching vec.

    Links contribute (a sin c, a cos c); solved in standard orientation
    and mapped back. Returns 0, 1, or 2 (c2, c3) pairs.
    """
    rho_sq = vec_u**2 + vec_v**2
    d = (rho_sq - a2**2 - a3**2) / (2.0 * a2 * a3)
    if d < -1.0 - 1e-12 or d > 1.0 + 1e-12:
        return []
    d = min(max(d, -1.0), 1.0)
    # standard-plane angle of the target vector with x = u, y = v
    alpha = math.atan2(vec_v, vec_u)
    sols = []
    for elbow in (math.acos(d), -math.acos(d)):
        psi2 = alpha - math.atan2(a3 * math.sin(elbow), a2 + a3 * math.cos(elbow))
        psi3 = psi2 + elbow
        # cumulative angle c relates to standard angle psi by c = pi/2 - psi
        c2 = math.pi / 2.0 - psi2
        c3 = math.pi / 2.0 - psi3
        sols.append((c2, c3))
    return sols


def _candidate_joints(theta1: float, target, params: BeamArmParams):
    """All joint triples placing the endpoint on target for a given theta1."""
    base = params.base
    joint2_u = base[0] + params.a1 * math.sin(theta1)
    joint2_v = base[1] + params.a1 * math.cos(theta1)
    out = []
    for c2, c3 in _two_link_solutions(target[0] - joint2_u, target[1] - joint2_v,
                                      params.a2, params.a3):
        theta2 = _wrap(c2 - theta1)
        theta3 = _wrap(c3 - c2)
        out.append(np.array([theta1, float(theta2), float(theta3)]))
    return out


def plan_arm_increment(theta_current, waypoint, beta_floor: float,
                       motor_beta: Callable, f_c_mean: float, phase: str,
                       params: BeamArmParams = BeamArmParams(),
                       grid_points: int = GRID_POINTS):
    """Cheapest joint increment reaching the waypoint under the beta floor.

    ``motor_beta(theta)`` returns the three predicted FOSM motor indices for
    a candidate pose under the current posterior. Raises
    UnreachableTargetError or ConstraintInfeasibleError (with the limiting
    motor) when no increment qualifies.
    """
    theta_current = np.asarray(theta_current, dtype=float)
    waypoint = (float(waypoint[0]), float(waypoint[1]))
    reach = params.reach
    dist = math.hypot(waypoint[0] - params.base[0], waypoint[1] - params.base[1])
    if dist > reach + 1e-12:
        raise UnreachableTargetError(
            f"waypoint {waypoint} lies {dist:.4f} m from the base; reach is {reach:.4f} m"
        )

    # moments for the cost are frozen at the current pose
    m_now = motor_moments(theta_current, np.zeros(3), f_c_mean, phase, params)[0]

    def cost_of(theta_new) -> float:
        d = _wrap(theta_new - theta_current)
        return float(np.sum(np.abs(m_now * d)))

    feasible_cache: dict[bytes, tuple] = {}
    limiting = (None, math.inf)

    def betas_for(theta_new):
        nonlocal limiting
        key = theta_new.tobytes()
        hit = feasible_cache.get(key)
        if hit is None:
            betas = np.asarray(motor_beta(theta_new), dtype=float)
            ok = bool(np.all(betas >= beta_floor))
            if not ok:
                worst = int(np.argmin(betas))
                if betas[worst] < limiting[1]:
                    limiting = (f"motor-{worst + 1}", float(betas[worst]))
            hit = (ok, betas)
            feasible_cache[key] = hit
        return hit

    grid = np.linspace(-math.pi, math.pi, grid_points, endpoint=False)
    candidates = []
    for theta1 in grid:
        for cand in _candidate_joints(float(theta1), waypoint, params):
            candidates.append((cost_of(cand), cand))
    if not candidates:
        raise UnreachableTargetError(f"no joint configuration reaches waypoint {waypoint}")

    # feasibility (the expensive posterior check) is probed in cost order,
    # so the typical call settles after a handful of evaluations
    best = None
    for c, cand in sorted(candidates, key=lambda x: x[0]):
        ok, betas = betas_for(cand)
        if ok:
            best = (c, cand, tuple(float(b) for b in betas))
            break
    if best is None:
        raise ConstraintInfeasibleError(*limiting)

    # local polish: golden-section on theta1 around the winning grid point
    def polished(t1):
        out = math.inf, None, None
        for cand in _candidate_joints(t1, waypoint, params):
            c = cost_of(cand)
            if c < out[0]:
                ok, betas = betas_for(cand)
                if ok:
                    out = (c, cand, tuple(float(b) for b in betas))
        return out

    step = grid[1] - grid[0]
    lo, hi = best[1][0] - step, best[1][0] + step
    phi = (math.sqrt(5.0) - 1.0) / 2.0
    for _ in range(40):
        m1 = hi - phi * (hi - lo)
        m2 = lo + phi * (hi - lo)
        r1, r2 = polished(m1), polished(m2)
        if r1[0] < best[0]:
            best = r1
        if r2[0] < best[0]:
            best = r2
        if r1[0] <= r2[0]:
            hi = m2
        else:
            lo = m1

    cost, theta_new, betas = best
    return _wrap(theta_new - theta_current), {
        "cost": cost,
        "beta_pred": betas,
        "theta_new": theta_new,
    }


def execute_arm_plan(plan: ArmControlPlan, session) -> list[ArmStepReport]:
    """Drive the session step loop until the plan finishes or aborts.

    Each session step consumes at most one waypoint, re-reading the pose
    and contact phase so the moment equations always match the physical
    phase. Returns the per-step reports (also stored on the plan).
    """
    session.set_arm_plan(plan)
    while plan.status in ("pending", "active"):
        session.step()
    return plan.steps


# ----------------------------------------------------------------------
# turbine yaw/pitch decision rule
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class TurbineCandidate:
    index: int
    m: int
    n: int
    yaw: float
    pitch: float
    beta_hat: float
    beta_by_component: dict
    power_hat: float
    chosen: bool = False


@dataclass
class TurbineDecision:
    candidates: list[TurbineCandidate]
    mode: str                     # "power" | "safety"

    @property
    def chosen(self) -> TurbineCandidate:
        return next(c for c in self.candidates if c.chosen)


def turbine_decide(yaw: float, pitch: float, predict: Callable,
                   delta_theta: float, beta_thr: float,
                   yaw_bounds: tuple[float, float],
                   pitch_bounds: tuple[float, float]) -> TurbineDecision:
    """Enumerate the 9 (yaw, pitch) neighbors and pick one.

    ``predict(yaw, pitch)`` returns (beta_by_component: dict, power_hat).
    Candidates meeting the reliability threshold compete on predicted
    power; if none qualifies the safest candidate wins. Ties break toward
    the smallest |m| + |n|, then candidate order. The (0, 0) do-nothing
    candidate always exists, so the rule never fails.
    """
    if delta_theta <= 0:
        raise ValueError("delta_theta must be > 0")
    cands = []
    idx = 0
    for m in (-1, 0, 1):
        for n in (-1, 0, 1):
            y = min(max(yaw + m * delta_theta, yaw_bounds[0]), yaw_bounds[1])
            p = min(max(pitch + n * delta_theta, pitch_bounds[0]), pitch_bounds[1])
            betas, power = predict(y, p)
            beta_hat = min(betas.values())
            cands.append(TurbineCandidate(
                index=idx, m=m, n=n, yaw=y, pitch=p,
                beta_hat=float(beta_hat),
                beta_by_component={k: float(v) for k, v in betas.items()},
                power_hat=float(power),
            ))
            idx += 1
    eligible = [c for c in cands if c.beta_hat >= beta_thr]
    if eligible:
        mode = "power"
        ranked = sorted(eligible, key=lambda c: (-c.power_hat, abs(c.m) + abs(c.n), c.index))
    else:
        mode = "safety"
        ranked = sorted(cands, key=lambda c: (-c.beta_hat, abs(c.m) + abs(c.n), c.index))
    winner = ranked[0].index
    cands = [TurbineCandidate(**{**c.__dict__, "chosen": c.index == winner}) for c in cands]
    return TurbineDecision(candidates=cands, mode=mode)
