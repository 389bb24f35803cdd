// Scenario layouts: pure functions from a frame to a renderable view
// model. The beam shows four colored segments with three motor badges,
// the turbine shows blade/hub/tower zones, and the plate shows the
// posterior load marker with its two-sigma ellipse.

import { betaLabel, cssColor } from "./bands.js";
import { ComponentReading, Frame } from "./types.js";

export interface Zone {
  id: string;
  kind: "segment" | "badge" | "zone" | "marker";
  label: string;
  color: string;           // exactly the frame's rgb
  beta: number;
  band: string;
  method: string;
  // geometry in a 100x60 viewbox
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface ViewModel {
  scenario: "plate" | "beam-arm" | "turbine" | "unknown";
  session: string;
  t: number;
  clock: number;
  zones: Zone[];
  statusLines: string[];
  degraded: boolean;
  rebaselineRecommended: boolean;
}

function reading(frame: Frame, id: string): ComponentReading | undefined {
  return frame.components.find((c) => c.id === id);
}

function zoneFrom(c: ComponentReading, kind: Zone["kind"],
                  box: [number, number, number, number]): Zone {
  return {
    id: c.id, kind, label: `${c.id} ${betaLabel(c.beta)}`,
    color: cssColor(c.rgb), beta: c.beta, band: c.band, method: c.method,
    x: box[0], y: box[1], w: box[2], h: box[3],
  };
}

function scenarioOf(frame: Frame): ViewModel["scenario"] {
  const ids = new Set(frame.components.map((c) => c.id));
  if (ids.has("blade")) return "turbine";
  if (ids.has("beam-seg-1")) return "beam-arm";
  if (frame.components.length === 0 && frame.state.estimate) return "plate";
  return "unknown";
}

export function buildViewModel(frame: Frame): ViewModel {
  const scenario = scenarioOf(frame);
  const zones: Zone[] = [];
  const statusLines: string[] = [];
  const state = frame.state as Record<string, any>;

  if (scenario === "beam-arm") {
    for (let i = 0; i < 4; i++) {
      const c = reading(frame, `beam-seg-${i + 1}`);
      if (c) zones.push(zoneFrom(c, "segment", [10 + i * 20, 10, 19, 8]));
    }
    for (let i = 0; i < 3; i++) {
      const c = reading(frame, `motor-${i + 1}`);
      if (c) zones.push(zoneFrom(c, "badge", [22 + i * 12, 36, 10, 10]));
    }
    if (state.contact !== undefined) {
      statusLines.push(`phase: ${state.contact ? "controlled (contact)" : "free motion"}`);
    }
    if (Array.isArray(state.endpoint)) {
      statusLines.push(`endpoint: (${state.endpoint[0].toFixed(3)}, `
        + `${state.endpoint[1].toFixed(3)}) m`);
    }
  } else if (scenario === "turbine") {
    const blade = reading(frame, "blade");
    const hub = reading(frame, "hub");
    const tower = reading(frame, "tower");
    if (blade) zones.push(zoneFrom(blade, "zone", [55, 6, 34, 10]));
    if (hub) zones.push(zoneFrom(hub, "zone", [44, 18, 12, 12]));
    if (tower) zones.push(zoneFrom(tower, "zone", [46, 32, 8, 24]));
    statusLines.push(
      `wind ${Number(state.wind_speed ?? 0).toFixed(1)} m/s @ `
      + `${Number(state.wind_dir_deg ?? 0).toFixed(0)} deg`,
      `yaw ${Number(state.yaw_deg ?? 0).toFixed(1)} deg, `
      + `pitch ${Number(state.pitch_deg ?? 0).toFixed(1)} deg`
      + `${state.brake ? ", brake on" : ""}`,
      `power ${(Number(state.power_w ?? 0) / 1000).toFixed(0)} kW`,
    );
  } else if (scenario === "plate") {
    const est = state.estimate as Record<string, { mean: number; two_sd: number }>;
    const side = 0.75;
    const u = est.u0.mean / side;
    const v = est.v0.mean / side;
    zones.push({
      id: "load-estimate", kind: "marker",
      label: `W ${est.weight.mean.toFixed(2)} kg`,
      color: "rgb(70,130,180)", beta: NaN, band: "", method: "",
      x: 20 + u * 55, y: 5 + (1 - v) * 48,
      w: Math.max((est.u0.two_sd / side) * 55, 1.5),
      h: Math.max((est.v0.two_sd / side) * 48, 1.5),
    });
    statusLines.push(
      `weight ${est.weight.mean.toFixed(2)} kg (±${est.weight.two_sd.toFixed(2)})`,
      `position (${est.u0.mean.toFixed(3)}, ${est.v0.mean.toFixed(3)}) m`,
    );
  }

  return {
    scenario,
    session: frame.session,
    t: frame.t,
    clock: frame.clock,
    zones,
    statusLines,
    degraded: Boolean(state.degraded),
    rebaselineRecommended: Boolean(state.rebaseline_recommended),
  };
}
