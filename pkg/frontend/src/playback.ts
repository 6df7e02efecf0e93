/**
 * Pure playback state: frame position, play/pause, rate, and seeking.
 * The animation-frame loop lives in main.ts and just feeds elapsed time in.
 */

export const MIN_RATE = 0.25
export const MAX_RATE = 2.0

export class PlaybackState {
  currentFrame = 0
  playing = false
  private rateValue = 1.0
  private fractionalFrame = 0

  constructor(readonly frameCount: number, readonly fps: number) {
    if (frameCount < 1) throw new Error("frameCount must be at least 1")
    if (fps <= 0) throw new Error("fps must be positive")
  }

  get rate(): number {
    return this.rateValue
  }

  setRate(rate: number): void {
    this.rateValue = Math.min(MAX_RATE, Math.max(MIN_RATE, rate))
  }

  seek(frame: number): void {
    this.currentFrame = Math.min(this.frameCount - 1, Math.max(0, Math.floor(frame)))
    this.fractionalFrame = this.currentFrame
  }

  play(): void {
    if (this.currentFrame >= this.frameCount - 1) this.seek(0)
    this.playing = true
    this.fractionalFrame = this.currentFrame
  }

  pause(): void {
    this.playing = false
  }

  /**
   * Advance by elapsed wall-clock time; returns every frame index newly
   * reached (so the trace can sample each one, even if a slow tick skipped
   * frames). Stops at the last frame.
   */
  tick(elapsedSeconds: number): number[] {
    if (!this.playing || elapsedSeconds <= 0) return []
    this.fractionalFrame += elapsedSeconds * this.fps * this.rateValue
    let target = Math.floor(this.fractionalFrame)
    if (target >= this.frameCount - 1) {
      target = this.frameCount - 1
      this.playing = false
    }
    const reached: number[] = []
    for (let f = this.currentFrame + 1; f <= target; f++) reached.push(f)
    this.currentFrame = target
    return reached
  }
}
