/**
 * Continuous intensity trace capture.
 *
 * The slider is sampled once per frame advance; the latest sample for a
 * frame wins. Complete windows of N consecutive frames are averaged into
 * one label each.
 */

export interface TraceSample {
  frameIndex: number
  intensity: number
  capturedAt: number
}

export interface WindowLabel {
  startFrame: number
  endFrame: number
  intensity: number
}

export function clamp01(value: number): number {
  if (Number.isNaN(value)) return 0
  return Math.min(1, Math.max(0, value))
}

/** Round to 4 decimals for stable submitted labels. */
export function round4(value: number): number {
  return Math.round(value * 10000) / 10000
}

export class TraceRecorder {
  private samples = new Map<number, TraceSample>()

  constructor(readonly windowFrames: number = 10) {
    if (!Number.isInteger(windowFrames) || windowFrames < 1) {
      throw new Error(`windowFrames must be a positive integer, got ${windowFrames}`)
    }
  }

  /** Record one sample; out-of-range input is clamped, re-records replace. */
  record(frameIndex: number, intensity: number, capturedAt: number = Date.now()): void {
    if (!Number.isInteger(frameIndex) || frameIndex < 0) {
      throw new Error(`frameIndex must be a non-negative integer, got ${frameIndex}`)
    }
    this.samples.set(frameIndex, {
      frameIndex,
      intensity: clamp01(intensity),
      capturedAt,
    })
  }

  sampleCount(): number {
    return this.samples.size
  }

  sampleAt(frameIndex: number): TraceSample | undefined {
    return this.samples.get(frameIndex)
  }

  /**
   * Labels for every window whose N frames are all sampled, in order.
   * A window covers frames [w*N, w*N + N - 1]; its label is the mean of
   * the window's samples rounded to 4 decimals.
   */
  completeWindows(): WindowLabel[] {
    const n = this.windowFrames
    const byWindow = new Map<number, number[]>()
    for (const sample of this.samples.values()) {
      const w = Math.floor(sample.frameIndex / n)
      let bucket = byWindow.get(w)
      if (!bucket) {
        bucket = []
        byWindow.set(w, bucket)
      }
      bucket.push(sample.intensity)
    }
    const labels: WindowLabel[] = []
    for (const w of [...byWindow.keys()].sort((a, b) => a - b)) {
      const values = byWindow.get(w)!
      if (values.length < n) continue
      const mean = values.reduce((acc, v) => acc + v, 0) / values.length
      labels.push({
        startFrame: w * n,
        endFrame: w * n + n - 1,
        intensity: round4(mean),
      })
    }
    return labels
  }

  /** Frames sampled but not yet part of a complete window. */
  pendingFrames(): number[] {
    const complete = new Set(this.completeWindows().map((l) => l.startFrame / this.windowFrames))
    return [...this.samples.keys()]
      .filter((f) => !complete.has(Math.floor(f / this.windowFrames)))
      .sort((a, b) => a - b)
  }

  clear(): void {
    this.samples.clear()
  }
}
