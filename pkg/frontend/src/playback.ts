/** Frame stepping driven by elapsed wall time, decoupled from any timer so
 * tests can feed it synthetic time deltas. */

export class Playback {
  private accumulatedMs = 0;
  frame = 0;
  playing = false;

  constructor(public frameIntervalMs: number) {
    if (frameIntervalMs <= 0) throw new Error("frame interval must be positive");
  }

  /** Start stepping; from the end it restarts at the first frame. */
  play(maxFrame: number): void {
    if (this.frame >= maxFrame) {
      this.frame = 0;
    }
    this.accumulatedMs = 0;
    this.playing = true;
  }

  /** Freeze at the current frame; a later play() continues from here. */
  pause(): void {
    this.playing = false;
    this.accumulatedMs = 0;
  }

  seek(frame: number, maxFrame: number): void {
    this.frame = Math.min(maxFrame, Math.max(0, Math.round(frame)));
    this.accumulatedMs = 0;
  }

  /** Advance by dt milliseconds; returns true when the frame changed. */
  advance(dtMs: number, maxFrame: number): boolean {
    if (!this.playing) return false;
    this.accumulatedMs += dtMs;
    let moved = false;
    while (this.accumulatedMs >= this.frameIntervalMs && this.frame < maxFrame) {
      this.accumulatedMs -= this.frameIntervalMs;
      this.frame += 1;
      moved = true;
    }
    if (this.frame >= maxFrame) {
      this.playing = false;
      this.accumulatedMs = 0;
    }
    return moved;
  }
}
