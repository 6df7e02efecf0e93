/** Typed client for the annotation service HTTP API. */

export interface RecordingSummary {
  recording_id: string
  subject_id: string
  fps: number
  modalities: string[]
  frame_counts: Record<string, number>
  source: string
}

export interface FramePayload {
  frame_index: number
  timestamp_s: number
  points: [number, number][]
}

export interface AnnotationPayload {
  recording_id: string
  start_frame: number
  end_frame: number
  intensity: number
  annotator_id: string
  created_at: string
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message)
  }
}

async function expectJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText
    try {
      const body = await response.json()
      detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail)
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(response.status, detail)
  }
  return response.json() as Promise<T>
}

export class ApiClient {
  constructor(
    readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  listRecordings(): Promise<RecordingSummary[]> {
    return this.fetchFn(`${this.baseUrl}/api/recordings`).then((r) =>
      expectJson<RecordingSummary[]>(r),
    )
  }

  getFrames(recordingId: string, modality: string, from: number, to: number): Promise<FramePayload[]> {
    const params = new URLSearchParams({ modality, from: String(from), to: String(to) })
    return this.fetchFn(
      `${this.baseUrl}/api/recordings/${encodeURIComponent(recordingId)}/frames?${params}`,
    ).then((r) => expectJson<FramePayload[]>(r))
  }

  getAnnotations(recordingId: string): Promise<AnnotationPayload[]> {
    const params = new URLSearchParams({ recording_id: recordingId })
    return this.fetchFn(`${this.baseUrl}/api/annotations?${params}`).then((r) =>
      expectJson<AnnotationPayload[]>(r),
    )
  }

  postAnnotation(annotation: AnnotationPayload): Promise<AnnotationPayload> {
    return this.fetchFn(`${this.baseUrl}/api/annotations`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(annotation),
    }).then((r) => expectJson<AnnotationPayload>(r))
  }
}
