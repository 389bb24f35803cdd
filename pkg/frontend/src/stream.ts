// Ordered frame intake. Frames carry a monotone step index t; anything
// out of order is dropped (the display must never regress), and a frame
// older than the staleness window flags the connection as stale.

import { Frame, FrameSchemaError, parseFrame } from "./types.js";

export interface IntakeEvents {
  onFrame: (frame: Frame) => void;
  onError?: (message: string) => void;
  onStale?: (stale: boolean) => void;
}

export class FrameIntake {
  lastT = -Infinity;
  dropped = 0;
  errors = 0;
  lastGood: Frame | null = null;
  private staleTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(readonly events: IntakeEvents, private staleMs = 1000) {}

  /** Feed one decoded message; returns true if the frame was displayed. */
  push(raw: unknown): boolean {
    let frame: Frame;
    try {
      frame = parseFrame(raw);
    } catch (e) {
      // fault containment: keep the last good frame on schema mismatch
      this.errors += 1;
      if (e instanceof FrameSchemaError && this.events.onError) {
        this.events.onError(e.message);
      }
      return false;
    }
    if (frame.t <= this.lastT) {
      this.dropped += 1;
      return false;
    }
    this.lastT = frame.t;
    this.lastGood = frame;
    this.events.onFrame(frame);
    this.resetStaleTimer();
    return true;
  }

  private resetStaleTimer() {
    if (this.staleTimer !== null) clearTimeout(this.staleTimer);
    if (this.events.onStale) {
      this.events.onStale(false);
      this.staleTimer = setTimeout(() => this.events.onStale!(true), this.staleMs);
    }
  }

  close() {
    if (this.staleTimer !== null) clearTimeout(this.staleTimer);
  }
}

/** Subscribe to the service's SSE frame stream for one session. */
export function openFrameStream(base: string, session: string,
                                intake: FrameIntake): EventSource {
  const source = new EventSource(`${base}/sessions/${session}/frames`);
  source.onmessage = (ev) => {
    try {
      intake.push(JSON.parse(ev.data));
    } catch {
      intake.push(ev.data); // parseFrame reports the schema error
    }
  };
  source.onerror = () => {
    if (intake.events.onError) intake.events.onError("stream interrupted");
  };
  return source;
}
