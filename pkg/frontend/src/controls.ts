// Operator control panel logic: validation, single-submission guarding,
// and verbatim rejection surfacing. The transport is injected so the
// logic is testable without a server.

export type Submission =
  | { state: "idle" }
  | { state: "pending" }
  | { state: "accepted"; summary: Record<string, unknown> }
  | { state: "rejected"; reason: string; limiting?: string; betaTilde?: number };

export interface CommandTransport {
  (command: Record<string, unknown>): Promise<{ status: number; body: any }>;
}

export interface ArmMoveForm {
  u_c: number;
  v_c: number;
  n_tau: number;
  beta_floor: number;
}

export interface TurbineForm {
  mode: "manual" | "auto";
  yaw_deg?: number;
  pitch_deg?: number;
  delta_theta_deg?: number;
  beta_thr?: number;
}

export interface Bounds {
  yawDeg: [number, number];
  pitchDeg: [number, number];
  armReach: number;
  armBase: [number, number];
}

export const DEFAULT_BOUNDS: Bounds = {
  yawDeg: [-90, 90],
  pitchDeg: [0, 30],
  armReach: 0.264,
  armBase: [0.3, -0.3],
};

export function validateArmMove(form: ArmMoveForm, bounds: Bounds): string | null {
  if (!(form.n_tau >= 1)) return "n_tau must be at least 1";
  if (!Number.isFinite(form.beta_floor)) return "beta floor must be a number";
  const dist = Math.hypot(form.u_c - bounds.armBase[0], form.v_c - bounds.armBase[1]);
  if (dist > bounds.armReach) {
    return `target is ${dist.toFixed(3)} m from the base; reach is ${bounds.armReach} m`;
  }
  return null;
}

export function validateTurbine(form: TurbineForm, bounds: Bounds): string | null {
  if (form.mode === "manual") {
    const y = form.yaw_deg ?? 0;
    const p = form.pitch_deg ?? 0;
    if (y < bounds.yawDeg[0] || y > bounds.yawDeg[1]) return "yaw outside bounds";
    if (p < bounds.pitchDeg[0] || p > bounds.pitchDeg[1]) return "pitch outside bounds";
  } else if (!(Number(form.delta_theta_deg) > 0)) {
    return "auto mode needs a positive angle step";
  }
  return null;
}

export class ControlPanel {
  submission: Submission = { state: "idle" };
  sent = 0;

  constructor(private transport: CommandTransport,
              readonly bounds: Bounds = DEFAULT_BOUNDS) {}

  /** Duplicate submissions while pending never reach the wire. */
  async submit(command: Record<string, unknown>): Promise<Submission> {
    if (this.submission.state === "pending") return this.submission;
    this.submission = { state: "pending" };
    this.sent += 1;
    let status: number;
    let body: any;
    try {
      ({ status, body } = await this.transport(command));
    } catch (e) {
      this.submission = { state: "rejected", reason: `transport failure: ${e}` };
      return this.submission;
    }
    if (status === 200 && body && body.accepted) {
      this.submission = { state: "accepted", summary: body };
    } else {
      // the server's message reaches the operator verbatim
      this.submission = {
        state: "rejected",
        reason: String(body?.error ?? `server returned ${status}`),
        limiting: body?.limiting_component ?? undefined,
        betaTilde: body?.beta_tilde ?? undefined,
      };
    }
    return this.submission;
  }

  async submitArmMove(form: ArmMoveForm): Promise<Submission> {
    const problem = validateArmMove(form, this.bounds);
    if (problem) {
      this.submission = { state: "rejected", reason: problem };
      return this.submission;
    }
    return this.submit({ type: "arm.move_to", ...form });
  }

  async submitTurbine(form: TurbineForm): Promise<Submission> {
    const problem = validateTurbine(form, this.bounds);
    if (problem) {
      this.submission = { state: "rejected", reason: problem };
      return this.submission;
    }
    if (form.mode === "manual") {
      return this.submit({
        type: "turbine.set", yaw_deg: form.yaw_deg, pitch_deg: form.pitch_deg,
      });
    }
    return this.submit({
      type: "turbine.auto", enabled: true,
      delta_theta_deg: form.delta_theta_deg, beta_thr: form.beta_thr,
    });
  }

  reset() {
    if (this.submission.state !== "pending") this.submission = { state: "idle" };
  }
}

export function describeSubmission(s: Submission): string {
  switch (s.state) {
    case "idle": return "";
    case "pending": return "sending…";
    case "accepted": return `accepted: ${JSON.stringify(s.summary)}`;
    case "rejected": {
      let msg = `rejected: ${s.reason}`;
      if (s.limiting) {
        msg += ` (limiting component ${s.limiting}`;
        if (s.betaTilde !== undefined) msg += ` at β̃ ${s.betaTilde.toFixed(2)}`;
        msg += ")";
      }
      return msg;
    }
  }
}
