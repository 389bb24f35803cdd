"""Reliability-constrained steering of the mechanical arm.

The operator asks the arm to move its endpoint along a linearly
interpolated path. Every increment minimizes the linearized energy cost
subject to the motors' predicted reliability indices staying above a
floor. A generous floor lets the move complete; a harsh floor makes the
planner refuse, naming the limiting motor, which is exactly the message
the operator sees in the UI.

Run:  python3 demos/03_arm_control.py
"""

import math

from risktwin import Session, load_scenario

scenario = load_scenario({
    "id": "beam-arm",
    "n_samples": 30_000,
    "n_failure": 400,
    "seed": 2345,
})
session = Session(scenario, seed=11)
session.step()

print("attempt 1: move to (0.25, -0.12) with beta floor 2.0")
ack = session.submit_command({"type": "arm.move_to", "u_c": 0.25, "v_c": -0.12,
                              "n_tau": 8, "beta_floor": 2.0})
print(f"  ack: {ack}")
while True:
    session.step()
    plan = session.arm_plan
    if plan is not None and plan.status not in ("pending", "active"):
        break
print(f"  plan {plan.status} after {len(plan.steps)} increments; "
      f"endpoint error {plan.endpoint_error * 1000:.1f} mm")
for s in plan.steps[:3]:
    d = ", ".join(f"{math.degrees(x):+.2f}°" for x in s.dtheta)
    print(f"    waypoint {s.waypoint}: dtheta ({d}), cost {s.cost:.4f} J, "
          f"min beta~ {min(s.beta_pred):.1f}")

print("\nattempt 2: stretch toward (0.54, -0.25), floor 3.1 "
      "(near full extension, heavy on the base motor)")
ack = session.submit_command({"type": "arm.move_to", "u_c": 0.54, "v_c": -0.25,
                              "n_tau": 8, "beta_floor": 3.1})
print(f"  ack: accepted={ack['accepted']}")
if ack["accepted"]:
    while True:
        session.step()
        plan = session.arm_plan
        if plan.status not in ("pending", "active"):
            break
    print(f"  plan {plan.status}: {plan.abort_reason or 'completed'}")
    print("  the operator sees the limiting motor and its predicted index, "
          "and can pick a gentler target instead")
