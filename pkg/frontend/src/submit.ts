/**
 * Turns completed trace windows into annotation submissions.
 * Each window is posted at most once unless its label changed (re-trace);
 * a server rejection leaves the window pending so the trace is not lost.
 */

import { AnnotationPayload, ApiClient } from "./api.js"
import { TraceRecorder, WindowLabel } from "./trace.js"

export interface SubmitOutcome {
  submitted: WindowLabel[]
  failed: { label: WindowLabel; error: string }[]
}

export function buildAnnotation(
  recordingId: string,
  annotatorId: string,
  label: WindowLabel,
  now: () => string = () => new Date().toISOString(),
): AnnotationPayload {
  return {
    recording_id: recordingId,
    start_frame: label.startFrame,
    end_frame: label.endFrame,
    intensity: label.intensity,
    annotator_id: annotatorId,
    created_at: now(),
  }
}

export class Submitter {
  private submitted = new Map<number, number>()

  constructor(
    private readonly api: ApiClient,
    private readonly recordingId: string,
    private readonly annotatorId: string,
  ) {}

  /** Post every complete window not yet stored with its current label. */
  async submitComplete(recorder: TraceRecorder): Promise<SubmitOutcome> {
    const outcome: SubmitOutcome = { submitted: [], failed: [] }
    for (const label of recorder.completeWindows()) {
      if (this.submitted.get(label.startFrame) === label.intensity) continue
      try {
        await this.api.postAnnotation(
          buildAnnotation(this.recordingId, this.annotatorId, label),
        )
        this.submitted.set(label.startFrame, label.intensity)
        outcome.submitted.push(label)
      } catch (error) {
        outcome.failed.push({ label, error: String(error) })
      }
    }
    return outcome
  }

  submittedCount(): number {
    return this.submitted.size
  }
}
