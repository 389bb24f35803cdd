"""Session orchestration: offline preparation, simulated physical twins,
the online update loop, Risk Shadow frame emission, re-baselining, and
the forward/inverse turbine experiments.

One session owns one serialized step loop. Each step drains queued
commands, advances the twin, aggregates sensor readings into one
observation, updates the shared prior-ensemble posterior and every
failure-conditional ensemble, computes a reliability reading per
component, and appends a frame to the trace.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import control as ctl
from .ensemble import PrecomputedEnsemble, write_asset_manifest
from .inference import (
    NoiseModel,
    Observation,
    PosteriorWeightState,
    WeightCollapseError,
    init_weights,
    posterior_moment,
    sample_prior,
    update_weights,
)
from .models.beam_arm import ArmPose, arm_forward_kinematics, beam_support_reaction
from .models.beam_arm import CONTROLLED, UNCONTROLLED
from .models.turbine import (
    TurbineState,
    bem_solve,
    effective_normal_wind,
    flap_moment,
    rotor_step,
    rotor_thrust,
    shaft_torque,
    tower_stress,
    turbine_power,
)
from .models.wind import WindField
from .reliability import (
    BETA_CAP,
    ComponentReliability,
    LimitState,
    SamplerDegenerateError,
    UnreachableEventError,
    fosm_reliability,
    prior_reliability_index,
    reliability_index,
    risk_band,
    resample_with_jitter,
    sample_failure_conditional,
    weighted_indicator_probability,
)
from .scenario import ArmCtrl, BeamArmScenario, PlateScenario, TurbineCtrl, TurbineScenario
from .trace import TraceReader, TraceWriter


# ----------------------------------------------------------------------
# simulated physical twins
# ----------------------------------------------------------------------

@dataclass
class SensorDrift:
    amplitude: float = 0.0
    period_s: float = 86400.0

    def value(self, clock: float) -> float:
        if self.amplitude == 0.0:
            return 0.0
        return self.amplitude * math.sin(2.0 * math.pi * clock / self.period_s)


class PlateTwin:
    def __init__(self, scenario: PlateScenario, seed: int):
        self.scenario = scenario
        truth = scenario.config.get("truth", {})
        self.schedule = sorted(truth.get("schedule", [{"t": 0.0, "weight": 5.0, "u0": 0.375, "v0": 0.375}]),
                               key=lambda e: e["t"])
        d = truth.get("drift", {})
        self.drift = SensorDrift(float(d.get("amplitude", 0.0)), float(d.get("period_s", 86400.0)))
        self.rng = np.random.default_rng(seed)

    def truth_at(self, clock: float) -> dict:
        cur = self.schedule[0]
        for e in self.schedule:
            if e["t"] <= clock:
                cur = e
        return cur

    def advance(self, clock: float, dt: float):
        pass

    def read_channels(self, clock: float) -> np.ndarray:
        from .models.plate import plate_reactions

        e = self.truth_at(clock)
        f = plate_reactions(e["weight"], e["u0"], e["v0"], self.scenario.params)
        noise = self.rng.normal(0.0, self.scenario.noise.sigmas)
        return np.asarray(f) + noise + self.drift.value(clock)

    def state_echo(self, clock: float) -> dict:
        return {"truth": {k: float(v) for k, v in self.truth_at(clock).items()}}


class BeamArmTwin:
    """Holds the realized arm pose, the contact flag, and the true
    load/control force.

    A commanded increment executes with a fresh motor perturbation whose
    size scales with the increment (down to the encoder-resolved regime),
    and the controller reads the realized angles back from the encoders.
    """

    NOISE_REF = math.radians(10.0)   # increment at which the full sd applies

    def __init__(self, scenario: BeamArmScenario, seed: int):
        self.scenario = scenario
        truth = scenario.config.get("truth", {})
        self.weight = float(truth.get("weight", 0.5))           # kg
        self.f_c_true = float(truth.get("control_force", 6.0))  # N
        self.actuator_sd = math.radians(float(truth.get("actuator_noise_deg", 3.0)))
        self.contact_plane = float(truth.get("contact_plane_v", -0.045))
        d = truth.get("drift", {})
        self.drift = SensorDrift(float(d.get("amplitude", 0.0)), float(d.get("period_s", 86400.0)))
        root = np.random.default_rng(seed)
        self.act_rng, self.sense_rng = root.spawn(2)
        pose0 = truth.get("initial_pose_deg", [11.5, 72.3, -135.1])
        self.theta = np.array([math.radians(d) for d in pose0])
        self.contact = False
        self._update_contact()
        if self.contact:
            raise ValueError(
                f"initial arm pose {pose0} already touches the beam plane "
                f"v = {self.contact_plane}; start from a lowered pose"
            )

    def command_move(self, dtheta: np.ndarray):
        dtheta = np.asarray(dtheta, dtype=float)
        scale = min(float(np.max(np.abs(dtheta))) / self.NOISE_REF, 1.0)
        noise = (self.act_rng.normal(0.0, self.actuator_sd, 3) * scale
                 if self.actuator_sd > 0 else np.zeros(3))
        self.theta = self.theta + dtheta + noise
        self._update_contact()

    def _update_contact(self):
        pose = ArmPose(theta=self.theta)
        (u, v), _ = arm_forward_kinematics(pose, self.scenario.params)
        self.endpoint = (u, v)
        self.contact = bool(v >= self.contact_plane - 1e-9
                            and 0.0 <= u <= self.scenario.params.l)

    def ctrl(self) -> ArmCtrl:
        return ArmCtrl(theta=tuple(float(t) for t in self.theta), contact=self.contact)

    def advance(self, clock: float, dt: float):
        pass

    def read_channels(self, clock: float) -> np.ndarray:
        params = self.scenario.params
        pose = ArmPose(theta=self.theta, contact=self.contact)
        (_, _), l_c = arm_forward_kinematics(pose, params)
        if self.contact:
            r = beam_support_reaction(self.weight, self.f_c_true / params.gravity,
                                      l_c, CONTROLLED, params)
        else:
            r = beam_support_reaction(self.weight, 0.0, 0.0, UNCONTROLLED, params)
        noise = self.sense_rng.normal(0.0, self.scenario.noise.sigmas)
        return np.atleast_1d(r) + noise + self.drift.value(clock)

    def state_echo(self, clock: float) -> dict:
        return {
            "pose_deg": [float(math.degrees(t)) for t in self.theta],
            "endpoint": [float(self.endpoint[0]), float(self.endpoint[1])],
            "contact": self.contact,
            "truth": {"weight": self.weight, "control_force": self.f_c_true},
        }


class TurbineTwin:
    def __init__(self, scenario: TurbineScenario, seed: int):
        self.scenario = scenario
        root = np.random.default_rng(seed)
        wind_seed, sense_seed = root.integers(0, 2**63 - 1, size=2)
        self.wind = WindField(scenario.wind_spec, seed=int(wind_seed))
        self.sense_rng = np.random.default_rng(int(sense_seed))
        s = scenario.initial_state
        self.state = TurbineState(omega=s.omega, yaw=s.yaw, pitch=s.pitch)
        self.energy = 0.0
        self.power = 0.0
        self._true_wind = (0.0, 0.0)

    def set_angles(self, yaw: float | None = None, pitch: float | None = None):
        lo, hi = self.scenario.yaw_bounds
        if yaw is not None:
            self.state.yaw = min(max(yaw, lo), hi)
        lo, hi = self.scenario.pitch_bounds
        if pitch is not None:
            self.state.pitch = min(max(pitch, lo), hi)

    def advance(self, clock: float, dt: float):
        params = self.scenario.params
        v_w, th_w, _, _ = self.wind.step(clock)
        self._true_wind = (v_w, th_w)
        st = self.state
        st.wind_speed, st.wind_dir, st.clock = v_w, th_w, clock
        v0 = float(effective_normal_wind(v_w, th_w, st.yaw))
        loads = bem_solve(np.array([v0]), st.omega, st.pitch, params)
        m_shaft = float(shaft_torque(loads.p_t, loads.radii)[0])
        st.omega, st.brake = rotor_step(st.omega, m_shaft, dt, params)
        self.power = float(turbine_power(np.array([v0]), st.omega, params)[0])
        self.energy += self.power * dt

    def ctrl(self) -> TurbineCtrl:
        st = self.state
        return TurbineCtrl(omega=st.omega, yaw=st.yaw, pitch=st.pitch, clock=st.clock)

    def read_channels(self, clock: float) -> np.ndarray:
        v_w, th_w = self._true_wind
        noise = self.sense_rng.normal(0.0, self.scenario.noise.sigmas)
        return np.array([v_w, th_w]) + noise

    def state_echo(self, clock: float) -> dict:
        st = self.state
        return {
            "omega": float(st.omega),
            "yaw_deg": float(math.degrees(st.yaw)),
            "pitch_deg": float(math.degrees(st.pitch)),
            "brake": bool(st.brake),
            "wind_speed": float(st.wind_speed),
            "wind_dir_deg": float(math.degrees(st.wind_dir)),
            "power_w": float(self.power),
            "energy_j": float(self.energy),
        }


def make_twin(scenario, seed: int):
    if isinstance(scenario, PlateScenario):
        return PlateTwin(scenario, seed)
    if isinstance(scenario, BeamArmScenario):
        return BeamArmTwin(scenario, seed)
    if isinstance(scenario, TurbineScenario):
        return TurbineTwin(scenario, seed)
    raise TypeError(f"no twin for scenario type {type(scenario).__name__}")


# ----------------------------------------------------------------------
# offline phase
# ----------------------------------------------------------------------

@dataclass
class OfflineAssets:
    baseline_id: str
    ensemble_d: PrecomputedEnsemble
    limit_states: dict[str, LimitState] = field(default_factory=dict)
    prep_seconds: float = 0.0

    def save(self, out_dir: str | Path, scenario) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        entries = []
        path_d = out_dir / "ensemble_d.rtens"
        self.ensemble_d.save(path_d)
        entries.append({"file": path_d.name, "role": "D", "rows": self.ensemble_d.n,
                        "seed": self.ensemble_d.seed})
        for ls_id, ls in self.limit_states.items():
            if ls.ensemble_dr is not None:
                p = out_dir / f"ensemble_dr_{ls_id}.rtens"
                ls.ensemble_dr.save(p)
                entries.append({"file": p.name, "role": "D_R", "limit_state": ls_id,
                                "rows": ls.ensemble_dr.n, "beta0": ls.beta0})
            else:
                entries.append({"role": "none", "limit_state": ls_id, "beta0": ls.beta0})
        manifest = out_dir / "manifest.txt"
        write_asset_manifest(manifest, [
            {"scenario": scenario.id, "config_hash": scenario.config_hash,
             "baseline": self.baseline_id}, *entries,
        ], self.prep_seconds)
        return manifest


def run_offline_phase(scenario, seed: int | None = None,
                      out_dir: str | Path | None = None) -> OfflineAssets:
    """Prepare D, each D_R, and beta0 per limit state; deterministic per seed."""
    t0 = time.perf_counter()
    seed = scenario.seed if seed is None else seed
    ens_d = sample_prior(scenario.prior, scenario.measurement_model, scenario.n_samples,
                         seed, scenario_id=scenario.id)
    limit_states: dict[str, LimitState] = {}
    for k, sls in enumerate(scenario.limit_states()):
        g_ref = sls.static_evaluator(ens_d.samples)
        ens_d.limit_state_values[sls.id] = g_ref
        ls = LimitState(id=sls.id, component=sls.component, evaluator=sls.static_evaluator)
        if sls.prepare_dr:
            try:
                ls.beta0 = prior_reliability_index(ls, scenario.prior,
                                                   n_mc=max(scenario.n_samples, 10_000),
                                                   seed=seed + 1000 + k)
                ls.ensemble_dr = sample_failure_conditional(
                    ls, scenario.prior, scenario.n_failure, seed + 2000 + k,
                    model=scenario.measurement_model, scenario_id=scenario.id)
            except (UnreachableEventError, SamplerDegenerateError):
                # beyond the display floor: reads as beta = 10, the paper's
                # unloaded-motor convention, with no failure ensemble
                ls.beta0 = BETA_CAP
                ls.ensemble_dr = None
        ls.ensemble_d = ens_d
        limit_states[sls.id] = ls
    assets = OfflineAssets(
        baseline_id=f"{scenario.id}-{seed}-base0",
        ensemble_d=ens_d,
        limit_states=limit_states,
        prep_seconds=time.perf_counter() - t0,
    )
    if out_dir is not None:
        assets.save(out_dir, scenario)
    return assets


def aggregate_window(raw: np.ndarray, t: int, span_s: float) -> Observation:
    """Per-channel arithmetic mean of the window's raw readings."""
    raw = np.atleast_2d(np.asarray(raw, dtype=float))
    if raw.shape[0] < 1:
        raise ValueError("empty aggregation window")
    return Observation(t=t, values=tuple(float(v) for v in raw.mean(axis=0)),
                       n_raw=raw.shape[0], span_s=span_s)


# ----------------------------------------------------------------------
# session
# ----------------------------------------------------------------------

class Session:
    """One running twin with its serialized step loop."""

    def __init__(self, scenario, assets: OfflineAssets | None = None,
                 seed: int | None = None, trace_path: str | Path | None = None,
                 auto_control: bool | None = None):
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        self.assets = assets or run_offline_phase(scenario)
        self.id = f"{scenario.id}-{self.seed}"
        self.twin = make_twin(scenario, self.seed + 77)
        self.state_d: PosteriorWeightState = init_weights(self.assets.ensemble_d, scenario.alpha)
        self.scenario_limit_states = {sls.id: sls for sls in scenario.limit_states()}
        self.components: dict[str, ComponentReliability | None] = {}
        for ls_id, ls in self.assets.limit_states.items():
            if ls.ensemble_dr is not None:
                self.components[ls_id] = ComponentReliability.create(ls, ls.beta0, scenario.alpha)
            else:
                self.components[ls_id] = None
        self.t = 0
        self.clock = 0.0
        self.baseline_id = self.assets.baseline_id
        self._command_queue: list[dict] = []
        self.last_ack: dict | None = None
        self.arm_plan: ctl.ArmControlPlan | None = None
        if isinstance(scenario, TurbineScenario):
            default_auto = scenario.config.get("control", {}).get("auto", False)
            enabled = default_auto if auto_control is None else auto_control
            self.turbine_auto = {
                "enabled": bool(enabled),
                "delta_theta": scenario.delta_theta,
                "beta_thr": scenario.beta_thr,
            }
        else:
            self.turbine_auto = None
        self._next_decision = 0.0
        self.frames: list[dict] = []
        self.subscribers: list = []
        self._writer: TraceWriter | None = None
        if trace_path is not None:
            self._writer = TraceWriter(trace_path, scenario.id, scenario.config_hash, self.seed)
        self.degraded = False
        self.last_decision = None

    # ------------------------------------------------------------------
    # commands
    # ------------------------------------------------------------------

    def submit_command(self, cmd: dict) -> dict:
        """Validate now, mutate at the next step boundary; returns the ack."""
        name = cmd.get("type")
        try:
            if name == "arm.move_to":
                ack = self._plan_arm_move(cmd)
            elif name == "turbine.set":
                ack = self._validate_turbine_set(cmd)
            elif name == "turbine.auto":
                ack = self._validate_turbine_auto(cmd)
            else:
                return {"accepted": False, "error": f"unknown command '{name}'"}
        except (ctl.UnreachableTargetError, ValueError) as e:
            return {"accepted": False, "error": str(e)}
        except ctl.ConstraintInfeasibleError as e:
            return {"accepted": False, "error": str(e),
                    "limiting_component": e.motor, "beta_tilde": e.beta}
        self._command_queue.append(cmd)
        public = {k: v for k, v in cmd.items() if not k.startswith("_")}
        self._append_trace("command", {"command": public, "ack": ack})
        self.last_ack = ack
        return ack

    def _plan_arm_move(self, cmd: dict) -> dict:
        if not isinstance(self.scenario, BeamArmScenario):
            raise ValueError("arm commands only apply to the beam-arm scenario")
        target = (float(cmd["u_c"]), float(cmd["v_c"]))
        n_tau = int(cmd.get("n_tau", self.scenario.config.get("control", {}).get("n_tau", 10)))
        beta_floor = float(cmd.get("beta_floor",
                                   self.scenario.config.get("control", {}).get("beta_floor", 3.1)))
        params = self.scenario.params
        dist = math.hypot(target[0] - params.base[0], target[1] - params.base[1])
        if dist > params.reach + 1e-12:
            raise ctl.UnreachableTargetError(
                f"target {target} lies {dist:.4f} m from the base; reach is "
                f"{params.reach:.4f} m")
        pose = ArmPose(theta=self.twin.theta)
        (u0, v0), _ = arm_forward_kinematics(pose, self.scenario.params)
        waypoints = ctl.interpolate_path((u0, v0), target, n_tau)
        # validate the first increment against the current posterior
        dtheta, info = ctl.plan_arm_increment(
            self.twin.theta, waypoints[0], beta_floor,
            self._motor_beta_fn(), self._posterior_fc_mean(), self.twin.ctrl().phase,
            self.scenario.params)
        plan = ctl.ArmControlPlan(target=target, n_tau=n_tau, waypoints=waypoints,
                                  beta_floor=beta_floor)
        cmd["_plan"] = plan
        return {"accepted": True, "plan": {"target": list(target), "n_tau": n_tau,
                                           "beta_floor": beta_floor,
                                           "first_step_cost": info["cost"]}}

    def _validate_turbine_set(self, cmd: dict) -> dict:
        if not isinstance(self.scenario, TurbineScenario):
            raise ValueError("turbine commands only apply to the turbine scenario")
        yaw = math.radians(float(cmd["yaw_deg"]))
        pitch = math.radians(float(cmd["pitch_deg"]))
        yb, pb = self.scenario.yaw_bounds, self.scenario.pitch_bounds
        if not (yb[0] - 1e-12 <= yaw <= yb[1] + 1e-12):
            raise ValueError(f"yaw {cmd['yaw_deg']} deg outside bounds")
        if not (pb[0] - 1e-12 <= pitch <= pb[1] + 1e-12):
            raise ValueError(f"pitch {cmd['pitch_deg']} deg outside bounds")
        return {"accepted": True, "set": {"yaw_deg": float(cmd["yaw_deg"]),
                                          "pitch_deg": float(cmd["pitch_deg"])}}

    def _validate_turbine_auto(self, cmd: dict) -> dict:
        if not isinstance(self.scenario, TurbineScenario):
            raise ValueError("turbine commands only apply to the turbine scenario")
        return {"accepted": True, "auto": {"enabled": bool(cmd.get("enabled", True))}}

    def set_arm_plan(self, plan: ctl.ArmControlPlan):
        plan.status = "active"
        self.arm_plan = plan

    def _drain_commands(self):
        for cmd in self._command_queue:
            name = cmd.get("type")
            if name == "arm.move_to":
                self.set_arm_plan(cmd["_plan"])
            elif name == "turbine.set":
                self.twin.set_angles(math.radians(float(cmd["yaw_deg"])),
                                     math.radians(float(cmd["pitch_deg"])))
            elif name == "turbine.auto":
                self.turbine_auto = {
                    "enabled": bool(cmd.get("enabled", True)),
                    "delta_theta": math.radians(float(cmd.get("delta_theta_deg",
                                                math.degrees(self.scenario.delta_theta)))),
                    "beta_thr": float(cmd.get("beta_thr", self.scenario.beta_thr)),
                }
        self._command_queue.clear()

    # ------------------------------------------------------------------
    # posterior helpers
    # ------------------------------------------------------------------

    def _posterior_fc_mean(self) -> float:
        idx = self.scenario.prior.index("f_c")
        return posterior_moment(self.state_d, self.state_d.ensemble.samples[:, idx])

    def _motor_beta_fn(self, max_rows: int = 20_000):
        scen = self.scenario
        samples = self.state_d.ensemble.samples
        weights = self.state_d.weights
        # planner-side estimator: a deterministic row stride keeps candidate
        # screening cheap at large N without breaking reproducibility
        stride = max(1, samples.shape[0] // max_rows)
        samples = samples[::stride]
        weights = weights[::stride]
        weights = weights / weights.sum()
        phase_contact = self.twin.contact

        def motor_beta(theta_cand: np.ndarray) -> np.ndarray:
            from .models.beam_arm import motor_limit_states

            g = motor_limit_states(samples[:, scen.X_MMAX], theta_cand,
                                   samples[:, scen.X_DTH], samples[:, scen.X_FC],
                                   CONTROLLED if phase_contact else UNCONTROLLED,
                                   scen.params)
            mu = weights @ g
            var = np.einsum("i,ij->j", weights, (g - mu) ** 2)
            betas = np.where(var > 0, mu / np.sqrt(np.maximum(var, 1e-300)), BETA_CAP)
            return np.minimum(betas, BETA_CAP)

        return motor_beta

    def posterior_mean_wind(self) -> tuple[float, float]:
        scen = self.scenario
        dv = posterior_moment(self.state_d, self.state_d.ensemble.samples[:, scen.X_DV])
        dth = posterior_moment(self.state_d, self.state_d.ensemble.samples[:, scen.X_DTH])
        v = max(float(scen.wind_spec.speed_mean(self.clock)) + dv, 0.0)
        th = float(scen.wind_spec.direction_mean(self.clock)) + dth
        return v, th

    def _turbine_predict_fn(self):
        """FOSM index per component and predicted power for candidate angles,
        evaluated at the posterior-mean wind and the current rotor speed."""
        scen = self.scenario
        params = scen.params
        v_w, th_w = self.posterior_mean_wind()
        omega = self.twin.state.omega
        thr = self.state_d.ensemble.samples[:, scen.X_THR]
        w = self.state_d.weights
        mu_thr = w @ thr
        sd_thr = np.sqrt(np.maximum(np.einsum("i,ij->j", w, (thr - mu_thr) ** 2), 1e-300))

        def predict(yaw: float, pitch: float):
            v0 = float(effective_normal_wind(v_w, th_w, yaw))
            loads = bem_solve(np.array([v0]), omega, pitch, params)
            m_flap = float(flap_moment(loads.p_n, loads.radii)[0])
            m_shaft = float(shaft_torque(loads.p_t, loads.radii)[0])
            f_n = params.n_blades * max(float(rotor_thrust(loads.p_n, loads.radii)[0]), 0.0)
            sig_max, _ = tower_stress(np.array([f_n]), np.array([v_w]), params)
            m_net = m_shaft - params.n_blades * params.inertia_per_blade * params.friction_coeff * omega
            demands = np.array([abs(m_flap), abs(m_net), float(sig_max[0])])
            betas = np.minimum((mu_thr - demands) / sd_thr, BETA_CAP)
            power = float(turbine_power(np.array([v0]), omega, params)[0])
            return ({"blade": betas[0], "hub": betas[1], "tower": betas[2]}, power)

        return predict

    # ------------------------------------------------------------------
    # the online step
    # ------------------------------------------------------------------

    REFINE_TOL = 4e-3    # m; refine toward the target until within this
    MAX_REFINE = 6

    def _arm_plan_step(self):
        plan = self.arm_plan
        if plan is None or plan.status not in ("pending", "active"):
            return
        plan.status = "active"
        if plan.next_waypoint < len(plan.waypoints):
            waypoint = plan.waypoints[plan.next_waypoint]
        else:
            waypoint = plan.target      # closed-loop refinement step
        phase = self.twin.ctrl().phase
        try:
            dtheta, info = ctl.plan_arm_increment(
                self.twin.theta, waypoint, plan.beta_floor,
                self._motor_beta_fn(), self._posterior_fc_mean(), phase,
                self.scenario.params)
        except (ctl.ConstraintInfeasibleError, ctl.UnreachableTargetError) as e:
            plan.status = "aborted"
            plan.abort_reason = str(e)
            self.last_ack = {"accepted": False, "error": str(e),
                             "limiting_component": getattr(e, "motor", None),
                             "beta_tilde": getattr(e, "beta", None)}
            self._append_trace("audit", {"event": "arm-plan-aborted", "reason": str(e)})
            return
        self.twin.command_move(dtheta)
        pose = ArmPose(theta=self.twin.theta)
        (u, v), _ = arm_forward_kinematics(pose, self.scenario.params)
        plan.steps.append(ctl.ArmStepReport(
            waypoint=(float(waypoint[0]), float(waypoint[1])),
            dtheta=tuple(float(d) for d in dtheta),
            cost=info["cost"], beta_pred=info["beta_pred"],
            endpoint=(u, v), phase=phase))
        plan.next_waypoint += 1
        if plan.next_waypoint >= len(plan.waypoints):
            refinements = plan.next_waypoint - len(plan.waypoints)
            if plan.endpoint_error > self.REFINE_TOL and refinements < self.MAX_REFINE:
                return
            plan.status = "done"

    def _turbine_auto_step(self):
        auto = self.turbine_auto
        if not auto or not auto["enabled"] or auto["delta_theta"] <= 0:
            return
        if self.clock + 1e-9 < self._next_decision:
            return
        self._next_decision += self.scenario.decision_period
        st = self.twin.state
        decision = ctl.turbine_decide(
            st.yaw, st.pitch, self._turbine_predict_fn(),
            auto["delta_theta"], auto["beta_thr"],
            self.scenario.yaw_bounds, self.scenario.pitch_bounds)
        chosen = decision.chosen
        self.twin.set_angles(chosen.yaw, chosen.pitch)
        self.last_decision = decision

    def step(self) -> dict:
        """One full online step; returns the emitted frame."""
        self._drain_commands()
        self._arm_plan_step()
        self.t += 1
        self.clock = self.t * self.scenario.dt
        self.twin.advance(self.clock, self.scenario.dt)

        raw = np.array([self.twin.read_channels(self.clock)
                        for _ in range(self.scenario.agg_window)])
        for row in raw:
            self._append_trace("raw-sensor", {"values": [float(v) for v in row]})
        y = aggregate_window(raw, self.state_d.t + 1, self.scenario.dt)
        y_proc = Observation(t=y.t,
                             values=tuple(self.scenario.preprocess_observation(
                                 np.asarray(y.values), self.clock)),
                             n_raw=y.n_raw, span_s=y.span_s)
        self._append_trace("observation", {"t": y.t, "values": list(y.values)})

        ctrl = self.twin.ctrl() if hasattr(self.twin, "ctrl") else None
        samples = self.state_d.ensemble.samples
        outputs = self.scenario.refresh_outputs(samples, ctrl)
        self.degraded = False
        try:
            self.state_d = update_weights(self.state_d, y_proc, self.scenario.noise,
                                          model_outputs=outputs)
            for ls_id, comp in self.components.items():
                if comp is None:
                    continue
                dr_out = self.scenario.refresh_outputs(comp.state_dr.ensemble.samples, ctrl)
                comp.update(self.state_d, y_proc, self.scenario.noise, dr_outputs=dr_out)
        except WeightCollapseError:
            self.degraded = True

        components = [self._component_reading(sls_id, ctrl)
                      for sls_id in self.scenario_limit_states]
        self._turbine_auto_step()
        frame = self._assemble_frame(components)
        self.frames.append(frame)
        self._append_trace("frame", frame)
        for sub in list(self.subscribers):
            sub(frame)
        return frame

    def _component_reading(self, ls_id: str, ctrl) -> dict:
        sls = self.scenario_limit_states[ls_id]
        comp = self.components.get(ls_id)
        method = "simulation-free"
        if comp is not None and sls.eq9_valid(ctrl) and not self.degraded:
            p = comp.probability(self.state_d)
            beta, fallback = reliability_index(p)
            if fallback:
                beta = fosm_reliability(self.state_d, comp.ls)
                method = "fosm-fallback"
        else:
            if sls.eq9_valid(ctrl):
                # reference G still describes the current control state
                g = self.state_d.ensemble.limit_state_values[ls_id]
            else:
                g = sls.evaluate(self.state_d.ensemble.samples, ctrl)
            p = float(self.state_d.weights @ (np.asarray(g) <= 0.0))
            if p == 0.0:
                beta = fosm_reliability(self.state_d, self.assets.limit_states[ls_id],
                                        g_values=g)
                method = "fosm-fallback"
            else:
                beta, _ = reliability_index(p)
        band = risk_band(beta, self.scenario.bands)
        return {"id": ls_id, "beta": float(beta), "p": float(p),
                "band": band.name, "rgb": list(band.rgb), "method": method}

    def _assemble_frame(self, components: list[dict]) -> dict:
        state = self.twin.state_echo(self.clock)
        state["ess"] = float(self.state_d.effective_sample_size())
        state["degraded"] = self.degraded
        state["rebaseline_recommended"] = bool(self.degraded
                                               or self.state_d.rebaseline_recommended())
        if isinstance(self.scenario, PlateScenario):
            state["estimate"] = self._plate_estimate()
        control = {"pending": len(self._command_queue)}
        if self.arm_plan is not None:
            control["arm_plan"] = {
                "status": self.arm_plan.status,
                "target": list(self.arm_plan.target),
                "steps_done": len(self.arm_plan.steps),
                "n_tau": self.arm_plan.n_tau,
                "abort_reason": self.arm_plan.abort_reason,
            }
        # a zero-step decision rule is a no-op and presents as disabled
        if (self.turbine_auto is not None and self.turbine_auto["enabled"]
                and self.turbine_auto["delta_theta"] > 0):
            control["auto"] = {
                "delta_theta_deg": math.degrees(self.turbine_auto["delta_theta"]),
                "beta_thr": self.turbine_auto["beta_thr"],
            }
        if self.last_ack is not None:
            control["last_ack"] = self.last_ack
        return {
            "session": self.id,
            "t": self.t,
            "clock": round(self.clock, 9),
            "components": components,
            "state": state,
            "control": control,
        }

    def _plate_estimate(self) -> dict:
        w = self.state_d.weights
        x = self.state_d.ensemble.samples
        mu = w @ x
        sd = np.sqrt(np.maximum(np.einsum("i,ij->j", w, (x - mu) ** 2), 0.0))
        names = self.scenario.prior.names
        return {name: {"mean": float(mu[j]), "two_sd": float(2.0 * sd[j])}
                for j, name in enumerate(names)}

    def _append_trace(self, kind: str, payload: dict):
        if self._writer is not None:
            self._writer.append(kind, self.t, round(self.clock, 9), payload)

    # ------------------------------------------------------------------
    # re-baselining
    # ------------------------------------------------------------------

    def rebaseline(self, seed: int | None = None) -> dict:
        """Refresh beta0, D, and each D_R around the current posterior.

        The current posterior becomes the new prior-role ensemble via
        weighted resampling with 1% jitter; inference restarts at t = 0.
        """
        seed = (self.seed + self.t + 5000) if seed is None else seed
        rng = np.random.default_rng(seed)
        scen = self.scenario
        old_id = self.baseline_id
        x_new = resample_with_jitter(self.state_d, scen.prior, scen.n_samples, rng)
        outputs = scen.measurement_model(x_new)
        ens_new = PrecomputedEnsemble(
            samples=x_new, model_outputs=outputs, variable_names=scen.prior.names,
            provenance="prior", seed=seed, scenario_id=scen.id)
        new_components: dict[str, ComponentReliability | None] = {}
        new_limit_states: dict[str, LimitState] = {}
        for ls_id, sls in self.scenario_limit_states.items():
            g_new = sls.static_evaluator(x_new)
            ens_new.limit_state_values[ls_id] = g_new
            ls = LimitState(id=ls_id, component=sls.component,
                            evaluator=sls.static_evaluator, ensemble_d=ens_new)
            comp_old = self.components.get(ls_id)
            if comp_old is None:
                new_limit_states[ls_id] = ls
                new_components[ls_id] = None
                continue
            n_fail = int(np.sum(g_new <= 0.0))
            if n_fail >= 10:
                from scipy import stats
                beta0 = float(-stats.norm.ppf(n_fail / scen.n_samples))
            else:
                p_now = comp_old.probability(self.state_d)
                beta0 = reliability_index(p_now).beta if p_now > 0 else fosm_reliability(
                    self.state_d, comp_old.ls)
            ls.beta0 = beta0
            ls.ensemble_dr = self._rebaseline_dr(comp_old, sls, rng, seed)
            new_limit_states[ls_id] = ls
            new_components[ls_id] = ComponentReliability.create(ls, beta0, scen.alpha)
        new_baseline = f"{scen.id}-{seed}-rebase{self.t}"
        audit = {"event": "rebaseline", "old_baseline": old_id, "new_baseline": new_baseline,
                 "at_step": self.t, "seed": seed}
        self.assets = OfflineAssets(baseline_id=new_baseline, ensemble_d=ens_new,
                                    limit_states=new_limit_states)
        self.state_d = init_weights(ens_new, scen.alpha)
        self.components = new_components
        self.baseline_id = new_baseline
        self._append_trace("audit", audit)
        return audit

    def _rebaseline_dr(self, comp: ComponentReliability, sls, rng,
                       seed: int) -> PrecomputedEnsemble:
        """Posterior-conditioned failure ensemble: resample D_R by its own
        posterior weights, jitter, and repair rows the jitter pushed out of
        the failure region."""
        scen = self.scenario
        n_prime = scen.n_failure
        x = resample_with_jitter(comp.state_dr, scen.prior, n_prime, rng)
        g = sls.static_evaluator(x)
        for _ in range(100):
            bad = g > 0.0
            if not np.any(bad):
                break
            good = np.flatnonzero(~bad)
            # rebuild instead of mutating in place: evaluators may memoize
            # per array object
            if good.size == 0:
                x = comp.state_dr.ensemble.samples[
                    rng.choice(comp.state_dr.n, size=n_prime)].copy()
            else:
                x = x.copy()
                x[bad] = x[rng.choice(good, size=int(bad.sum()))]
            g = sls.static_evaluator(x)
        outputs = scen.measurement_model(x)
        return PrecomputedEnsemble(
            samples=x, model_outputs=outputs, variable_names=scen.prior.names,
            provenance=f"failure-conditional:{sls.id}", seed=seed, scenario_id=scen.id,
            limit_state_values={sls.id: g})

    def close(self):
        if self._writer is not None:
            self._writer.close()


# ----------------------------------------------------------------------
# experiments
# ----------------------------------------------------------------------

@dataclass
class RunReport:
    scenario_id: str
    seed: int
    duration: float
    n_frames: int
    beta_summary: dict
    energy_j: float | None = None
    exit_status: str = "ok"

    def as_dict(self) -> dict:
        return {
            "scenario": self.scenario_id, "seed": self.seed, "duration": self.duration,
            "n_frames": self.n_frames, "beta_summary": self.beta_summary,
            "energy_j": self.energy_j, "exit_status": self.exit_status,
        }


def summarize_frames(frames: list[dict]) -> dict:
    by_comp: dict[str, list[float]] = {}
    for fr in frames:
        for c in fr["components"]:
            by_comp.setdefault(c["id"], []).append(c["beta"])
    return {
        comp: {"min": float(np.min(b)), "mean": float(np.mean(b)), "final": float(b[-1])}
        for comp, b in by_comp.items()
    }


def _run_experiment(scenario, duration: float, seed: int,
                    out_path: str | Path | None, auto_control: bool,
                    assets: OfflineAssets | None = None) -> tuple[Session, RunReport]:
    session = Session(scenario, assets=assets, seed=seed, trace_path=out_path,
                      auto_control=auto_control)
    n_steps = int(round(duration / scenario.dt))
    for _ in range(n_steps):
        session.step()
    energy = getattr(session.twin, "energy", None)
    report = RunReport(
        scenario_id=scenario.id, seed=seed, duration=duration,
        n_frames=len(session.frames), beta_summary=summarize_frames(session.frames),
        energy_j=energy)
    session.close()
    return session, report


def run_forward_experiment(scenario, duration: float | None = None, seed: int | None = None,
                           out_path: str | Path | None = None,
                           assets: OfflineAssets | None = None) -> tuple[Session, RunReport]:
    """Fixed-angle run: information flows from the simulated twin to the
    digital model only."""
    duration = getattr(scenario, "duration", 400.0) if duration is None else duration
    seed = scenario.seed if seed is None else seed
    return _run_experiment(scenario, duration, seed, out_path, auto_control=False,
                           assets=assets)


def run_inverse_experiment(scenario, duration: float | None = None, seed: int | None = None,
                           out_path: str | Path | None = None,
                           assets: OfflineAssets | None = None) -> tuple[Session, RunReport]:
    """Controlled run: the yaw/pitch decision rule steers the twin."""
    duration = getattr(scenario, "duration", 400.0) if duration is None else duration
    seed = scenario.seed if seed is None else seed
    return _run_experiment(scenario, duration, seed, out_path, auto_control=True,
                           assets=assets)


def window_stats(frames: list[dict], window: tuple[float, float]) -> dict:
    """Minimum component beta and energy delta over a clock window."""
    lo, hi = window
    sel = [f for f in frames if lo <= f["clock"] <= hi]
    min_beta = min((c["beta"] for f in sel for c in f["components"]), default=math.nan)
    energies = [f["state"].get("energy_j") for f in sel if "energy_j" in f["state"]]
    d_energy = (energies[-1] - energies[0]) if len(energies) >= 2 else math.nan
    return {"min_beta": min_beta, "energy_delta_j": d_energy}
