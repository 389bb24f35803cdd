import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from risktwin.control import (
    ArmControlPlan,
    ConstraintInfeasibleError,
    UnreachableTargetError,
    expected_energy_cost,
    interpolate_path,
    plan_arm_increment,
    turbine_decide,
)
from risktwin.models.beam_arm import ArmPose, BeamArmParams, arm_forward_kinematics, motor_moments

P = BeamArmParams()


class TestInterpolatePath:
    def test_single_step_goes_straight_to_target(self):
        assert interpolate_path((0.0, 0.0), (1.0, 2.0), 1) == [(1.0, 2.0)]

    def test_four_even_steps(self):
        wps = interpolate_path((0.0, 0.0), (4.0, 0.0), 4)
        np.testing.assert_allclose(wps, [(1, 0), (2, 0), (3, 0), (4, 0)])

    def test_last_waypoint_hits_target_exactly(self):
        wps = interpolate_path((0.1, -0.2), (0.37, -0.11), 7)
        assert wps[-1] == pytest.approx((0.37, -0.11))

    @settings(max_examples=50, deadline=None)
    @given(n=st.integers(1, 20), x=st.floats(-1, 1), y=st.floats(-1, 1))
    def test_waypoints_affine_in_tau(self, n, x, y):
        wps = np.array(interpolate_path((0.0, 0.0), (x, y), n))
        taus = np.arange(1, n + 1).reshape(-1, 1)
        np.testing.assert_allclose(wps, taus * np.array([x, y]) / n, atol=1e-12)

    def test_n_tau_floor(self):
        with pytest.raises(ValueError):
            interpolate_path((0, 0), (1, 1), 0)


class TestEnergyCost:
    def test_zero_increment_costs_nothing(self):
        assert expected_energy_cost(np.zeros(3), np.zeros(3), 0.0, "uncontrolled", P) == 0.0

    def test_absolute_homogeneity(self):
        theta = np.array([0.4, -0.2, 0.1])
        d = np.array([0.01, -0.005, 0.002])
        c1 = expected_energy_cost(d, theta, 1.5, "controlled", P)
        c2 = expected_energy_cost(2 * d, theta, 1.5, "controlled", P)
        assert c2 == pytest.approx(2 * c1)

    def test_direct_product_example(self):
        # m1 at (90 deg, 0, 0) uncontrolled is 1.5345 N m
        theta = np.array([math.pi / 2, 0.0, 0.0])
        cost = expected_energy_cost(np.array([0.01, 0.0, 0.0]), theta, 0.0,
                                    "uncontrolled", P)
        assert cost == pytest.approx(1.5345 * 0.01, rel=1e-9)


def _permissive_beta(theta):
    return np.full(3, 10.0)


class TestPlanArmIncrement:
    def test_waypoint_at_current_endpoint_is_free(self):
        theta = np.array([0.3, 0.2, -0.1])
        (u, v), _ = arm_forward_kinematics(ArmPose(theta=theta), P)
        dtheta, info = plan_arm_increment(theta, (u, v), 0.0, _permissive_beta, 0.0,
                                          "uncontrolled", P)
        assert np.max(np.abs(dtheta)) == pytest.approx(0.0, abs=1e-9)
        assert info["cost"] == pytest.approx(0.0, abs=1e-9)

    def test_unreachable_waypoint_rejected(self):
        target = (P.base[0] + P.reach + 0.01, P.base[1])
        with pytest.raises(UnreachableTargetError):
            plan_arm_increment(np.zeros(3), target, 0.0, _permissive_beta, 0.0,
                               "uncontrolled", P)

    def test_kinematic_equality_within_tolerance(self):
        theta = np.zeros(3)
        target = (0.33, -0.15)
        dtheta, info = plan_arm_increment(theta, target, 0.0, _permissive_beta, 0.0,
                                          "uncontrolled", P)
        (u, v), _ = arm_forward_kinematics(ArmPose(theta=theta + dtheta), P)
        assert math.hypot(u - target[0], v - target[1]) < 1e-4

    def test_infeasible_floor_names_limiting_motor(self):
        def harsh(theta):
            return np.array([1.0, 9.0, 9.0])

        with pytest.raises(ConstraintInfeasibleError) as err:
            plan_arm_increment(np.zeros(3), (0.33, -0.15), 5.0, harsh, 0.0,
                               "uncontrolled", P)
        assert err.value.motor == "motor-1"
        assert err.value.beta == pytest.approx(1.0)

    def test_floor_is_respected_when_feasible_subset_exists(self):
        # elbow-up solutions get vetoed; the planner must pick from the rest
        def selective(theta):
            return np.full(3, 10.0) if theta[1] >= 0 else np.full(3, 0.0)

        dtheta, info = plan_arm_increment(np.zeros(3), (0.33, -0.15), 3.0,
                                          selective, 0.0, "uncontrolled", P)
        assert (np.zeros(3) + dtheta)[1] >= 0
        assert min(info["beta_pred"]) >= 3.0

    def test_matches_dense_grid_oracle(self):
        # independent vectorized re-derivation of the one-DOF family on a
        # 1e6-point grid, elbow branches enumerated explicitly
        theta0 = np.array([0.15, 0.35, -0.2])
        target = np.array([0.36, -0.14])
        dtheta, info = plan_arm_increment(theta0, tuple(target), 0.0,
                                          _permissive_beta, 0.0, "uncontrolled", P)

        m_now = np.abs(motor_moments(theta0, np.zeros(3), 0.0, "uncontrolled", P)[0])
        t1 = np.linspace(-math.pi, math.pi, 1_000_000, endpoint=False)
        j2u = P.base[0] + P.a1 * np.sin(t1)
        j2v = P.base[1] + P.a1 * np.cos(t1)
        du, dv = target[0] - j2u, target[1] - j2v
        rho_sq = du**2 + dv**2
        d = (rho_sq - P.a2**2 - P.a3**2) / (2 * P.a2 * P.a3)
        feasible = np.abs(d) <= 1.0
        alpha = np.arctan2(dv, du)
        best_cost, best_joints = np.inf, None
        for sign in (1.0, -1.0):
            elbow = sign * np.arccos(np.clip(d, -1, 1))
            psi2 = alpha - np.arctan2(P.a3 * np.sin(elbow), P.a2 + P.a3 * np.cos(elbow))
            c2 = math.pi / 2 - psi2
            c3 = math.pi / 2 - (psi2 + elbow)
            th2 = (c2 - t1 + math.pi) % (2 * math.pi) - math.pi
            th3 = (c3 - c2 + math.pi) % (2 * math.pi) - math.pi
            cand = np.stack([t1, th2, th3], axis=1)
            delta = (cand - theta0 + math.pi) % (2 * math.pi) - math.pi
            cost = np.abs(delta) @ m_now
            cost[~feasible] = np.inf
            k = int(np.argmin(cost))
            if cost[k] < best_cost:
                best_cost, best_joints = float(cost[k]), cand[k]
        assert info["cost"] == pytest.approx(best_cost, rel=1e-3)
        d_engine = (info["theta_new"] - theta0 + math.pi) % (2 * math.pi) - math.pi
        d_oracle = (best_joints - theta0 + math.pi) % (2 * math.pi) - math.pi
        np.testing.assert_allclose(d_engine, d_oracle, atol=1e-3)


class TestTurbineDecide:
    @staticmethod
    def _predict_factory(beta_map, power_map):
        def predict(yaw, pitch):
            return beta_map(yaw, pitch), power_map(yaw, pitch)
        return predict

    def test_power_mode_selects_max_power(self):
        predict = self._predict_factory(
            lambda y, p: {"blade": 8.0, "hub": 9.0, "tower": 8.5},
            lambda y, p: 100.0 + 50.0 * y - 10.0 * p)
        d = turbine_decide(0.0, 0.1, predict, 0.05, 3.0,
                           (-1.0, 1.0), (0.0, 0.5))
        assert d.mode == "power"
        assert d.chosen.m == 1          # yaw up boosts the mock power
        assert d.chosen.yaw == pytest.approx(0.05)

    def test_safety_mode_selects_max_beta(self):
        predict = self._predict_factory(
            lambda y, p: {"blade": 1.0 + y, "hub": 2.0, "tower": 2.0},
            lambda y, p: 500.0)
        d = turbine_decide(0.0, 0.1, predict, 0.05, 3.0, (-1.0, 1.0), (0.0, 0.5))
        assert d.mode == "safety"
        assert d.chosen.m == 1          # yaw up raises the mock blade index

    def test_calm_tie_break_prefers_do_nothing(self):
        predict = self._predict_factory(
            lambda y, p: {"blade": 10.0, "hub": 10.0, "tower": 10.0},
            lambda y, p: 0.0)
        d = turbine_decide(0.2, 0.1, predict, 0.05, 3.0, (-1.0, 1.0), (0.0, 0.5))
        assert (d.chosen.m, d.chosen.n) == (0, 0)

    def test_exactly_nine_candidates_one_chosen_within_bounds(self):
        predict = self._predict_factory(
            lambda y, p: {"blade": 5.0, "hub": 5.0, "tower": 5.0},
            lambda y, p: y + p)
        d = turbine_decide(0.99, 0.49, predict, 0.05, 3.0, (-1.0, 1.0), (0.0, 0.5))
        assert len(d.candidates) == 9
        assert sum(c.chosen for c in d.candidates) == 1
        for c in d.candidates:
            assert -1.0 <= c.yaw <= 1.0 and 0.0 <= c.pitch <= 0.5

    def test_safety_winner_dominates_all_rejected(self):
        predict = self._predict_factory(
            lambda y, p: {"blade": 2.0 + y - p, "hub": 2.5, "tower": 2.5},
            lambda y, p: 1.0)
        d = turbine_decide(0.0, 0.2, predict, 0.05, 3.2, (-1.0, 1.0), (0.0, 0.5))
        chosen_beta = d.chosen.beta_hat
        for c in d.candidates:
            assert chosen_beta >= c.beta_hat - 1e-12

    def test_deterministic(self):
        predict = self._predict_factory(
            lambda y, p: {"blade": 4.0, "hub": 4.0, "tower": 4.0},
            lambda y, p: math.sin(3 * y) + p)
        d1 = turbine_decide(0.1, 0.1, predict, 0.03, 3.0, (-1, 1), (0, 0.5))
        d2 = turbine_decide(0.1, 0.1, predict, 0.03, 3.0, (-1, 1), (0, 0.5))
        assert d1.chosen.index == d2.chosen.index

    def test_delta_must_be_positive(self):
        with pytest.raises(ValueError):
            turbine_decide(0.0, 0.0, lambda y, p: ({"b": 1.0}, 0.0), 0.0, 3.0,
                           (-1, 1), (0, 1))
