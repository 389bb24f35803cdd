// Wiring: session picker, live SSE stream, control panel, replay loader.
// All rendering goes through the pure pipeline in layout.ts/render.ts.

import { ControlPanel, describeSubmission } from "./controls.js";
import { buildViewModel } from "./layout.js";
import { renderFrame } from "./render.js";
import { ReplayPlayer } from "./replay.js";
import { FrameIntake, openFrameStream } from "./stream.js";
import { Frame, parseFrameLine } from "./types.js";

const base = (window as any).RISKTWIN_BASE ?? "http://127.0.0.1:8710";

const el = (id: string) => document.getElementById(id)!;

let mode: "live" | "replay" = "live";
let source: EventSource | null = null;
let player: ReplayPlayer | null = null;

function showFrame(frame: Frame) {
  const rendered = renderFrame(buildViewModel(frame));
  el("shadow").innerHTML = rendered.svg;
  el("status").innerHTML = rendered.status;
  el("mode-tag").textContent = mode === "live" ? "LIVE" : "REPLAY";
  el("mode-tag").className = mode;
}

const intake = new FrameIntake({
  onFrame: showFrame,
  onError: (msg) => {
    el("banner").textContent = `frame error: ${msg} (showing last good frame)`;
    el("banner").style.display = "block";
  },
  onStale: (stale) => {
    el("stale").style.display = stale && mode === "live" ? "inline" : "none";
  },
});

async function connect() {
  const session = (el("session-input") as HTMLInputElement).value.trim();
  if (source) source.close();
  mode = "live";
  el("banner").style.display = "none";
  intake.lastT = -Infinity;
  source = openFrameStream(base, session, intake);
  panelSession = session;
}

let panelSession = "";
const panel = new ControlPanel(async (command) => {
  const res = await fetch(`${base}/sessions/${panelSession}/command`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(command),
  });
  return { status: res.status, body: await res.json() };
});

function refreshAck() {
  el("ack").textContent = describeSubmission(panel.submission);
  el("ack").className = panel.submission.state;
}

async function submitArm() {
  await panel.submitArmMove({
    u_c: Number((el("arm-u") as HTMLInputElement).value),
    v_c: Number((el("arm-v") as HTMLInputElement).value),
    n_tau: Number((el("arm-ntau") as HTMLInputElement).value),
    beta_floor: Number((el("arm-floor") as HTMLInputElement).value),
  });
  refreshAck();
  panel.reset();
}

async function submitTurbine(auto: boolean) {
  await panel.submitTurbine(auto ? {
    mode: "auto",
    delta_theta_deg: Number((el("tb-step") as HTMLInputElement).value),
    beta_thr: Number((el("tb-thr") as HTMLInputElement).value),
  } : {
    mode: "manual",
    yaw_deg: Number((el("tb-yaw") as HTMLInputElement).value),
    pitch_deg: Number((el("tb-pitch") as HTMLInputElement).value),
  });
  refreshAck();
  panel.reset();
}

async function loadReplay(file: File) {
  const text = await file.text();
  const frames = text.split("\n").filter((l) => l.trim()).map(parseFrameLine);
  if (source) source.close();
  mode = "replay";
  player = new ReplayPlayer(frames, (frame, index) => {
    showFrame(frame);
    (el("scrub") as HTMLInputElement).value = String(index);
  });
  const scrub = el("scrub") as HTMLInputElement;
  scrub.max = String(frames.length - 1);
  scrub.style.display = "block";
  player.seek(0);
}

export function init() {
  el("connect").onclick = connect;
  el("arm-go").onclick = submitArm;
  el("tb-set").onclick = () => submitTurbine(false);
  el("tb-auto").onclick = () => submitTurbine(true);
  el("replay-play").onclick = () => player?.play();
  el("replay-pause").onclick = () => player?.pause();
  (el("scrub") as HTMLInputElement).oninput = (ev) => {
    player?.pause();
    player?.seek(Number((ev.target as HTMLInputElement).value));
  };
  (el("replay-file") as HTMLInputElement).onchange = (ev) => {
    const file = (ev.target as HTMLInputElement).files?.[0];
    if (file) void loadReplay(file);
  };
}

if (typeof document !== "undefined" && document.readyState !== "loading") {
  init();
} else if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", init);
}
