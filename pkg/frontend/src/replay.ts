// Post-hoc review: a recorded frame sequence with a scrubbing timeline.
// The player paces frames by their recorded clocks scaled by the speed
// factor; scrubbing jumps straight to a step index.

import { Frame } from "./types.js";

export class ReplayPlayer {
  index = 0;
  playing = false;
  speed = 10;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(readonly frames: Frame[],
              private onFrame: (frame: Frame, index: number) => void) {
    if (frames.length === 0) throw new Error("replay needs at least one frame");
  }

  get length(): number {
    return this.frames.length;
  }

  seek(index: number) {
    this.index = Math.min(Math.max(index, 0), this.frames.length - 1);
    this.onFrame(this.frames[this.index], this.index);
  }

  play() {
    if (this.playing) return;
    this.playing = true;
    this.onFrame(this.frames[this.index], this.index);
    this.scheduleNext();
  }

  private scheduleNext() {
    if (!this.playing) return;
    if (this.index + 1 >= this.frames.length) {
      this.playing = false;
      return;
    }
    const dt = this.frames[this.index + 1].clock - this.frames[this.index].clock;
    const delay = Math.max((dt * 1000) / this.speed, 0);
    this.timer = setTimeout(() => {
      this.index += 1;
      this.onFrame(this.frames[this.index], this.index);
      this.scheduleNext();
    }, delay);
  }

  pause() {
    this.playing = false;
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = null;
  }
}
