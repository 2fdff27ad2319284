/** Frame clock for trace playback. Wall-clock time scaled by `rate` moves a
 * fractional position over the 250 ms sample grid; play stops at the last
 * frame instead of wrapping. */

export class Player {
  pos = 0;
  playing = false;
  rate = 1;

  constructor(
    public nFrames: number,
    public readonly intervalS = 0.25,
  ) {}

  get lastFrame(): number {
    return Math.max(0, this.nFrames - 1);
  }

  get durationS(): number {
    return this.lastFrame * this.intervalS;
  }

  frame(): number {
    return Math.min(this.lastFrame, Math.max(0, Math.floor(this.pos + 1e-9)));
  }

  timeS(): number {
    return this.frame() * this.intervalS;
  }

  seek(frame: number): void {
    this.pos = Math.min(this.lastFrame, Math.max(0, frame));
  }

  /** Advance by wall-clock seconds; returns true while still playing. */
  tick(dtS: number): boolean {
    if (!this.playing || this.nFrames === 0) return false;
    this.pos += (dtS * this.rate) / this.intervalS;
    if (this.pos >= this.lastFrame) {
      this.pos = this.lastFrame;
      this.playing = false;
    }
    return this.playing;
  }

  /** Pause, or resume; resuming from the end restarts at frame 0. */
  toggle(): void {
    if (!this.playing && this.frame() >= this.lastFrame && this.lastFrame > 0) {
      this.pos = 0;
    }
    this.playing = !this.playing;
  }

  reset(nFrames: number): void {
    this.nFrames = nFrames;
    this.pos = 0;
    this.playing = false;
  }
}
