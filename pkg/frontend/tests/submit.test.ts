import { describe, expect, it, vi } from "vitest"

import { AnnotationPayload, ApiClient } from "../src/api.js"
import { Submitter, buildAnnotation } from "../src/submit.js"
import { TraceRecorder } from "../src/trace.js"

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  })
}

/** In-memory stand-in for the annotation service with last-write-wins keys. */
function fakeService() {
  const stored = new Map<string, AnnotationPayload>()
  const fetchFn = vi.fn(async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = String(input)
    if (url.includes("/api/annotations") && init?.method === "POST") {
      const body = JSON.parse(String(init.body)) as AnnotationPayload
      if (body.intensity < 0 || body.intensity > 1) {
        return jsonResponse({ detail: [{ field: "intensity", message: "out of range" }] }, 400)
      }
      stored.set(`${body.start_frame}:${body.annotator_id}`, body)
      return jsonResponse(body)
    }
    if (url.includes("/api/annotations")) {
      return jsonResponse([...stored.values()])
    }
    return jsonResponse({ detail: "not found" }, 404)
  })
  return { stored, fetchFn: fetchFn as unknown as typeof fetch }
}

describe("buildAnnotation", () => {
  it("maps a window label to the service payload", () => {
    const payload = buildAnnotation(
      "rec-a",
      "ui",
      { startFrame: 20, endFrame: 29, intensity: 0.75 },
      () => "2026-08-23T10:00:00.000Z",
    )
    expect(payload).toEqual({
      recording_id: "rec-a",
      start_frame: 20,
      end_frame: 29,
      intensity: 0.75,
      annotator_id: "ui",
      created_at: "2026-08-23T10:00:00.000Z",
    })
  })
})

describe("Submitter", () => {
  it("posts exactly one annotation for a held slider window", async () => {
    const service = fakeService()
    const api = new ApiClient("", service.fetchFn)
    const recorder = new TraceRecorder(10)
    for (let frame = 0; frame < 10; frame++) recorder.record(frame, 0.5)

    const submitter = new Submitter(api, "rec-a", "ui")
    const outcome = await submitter.submitComplete(recorder)
    expect(outcome.submitted).toHaveLength(1)
    expect(outcome.failed).toHaveLength(0)

    const fetched = await api.getAnnotations("rec-a")
    expect(fetched).toHaveLength(1)
    expect(fetched[0].intensity).toBe(0.5)
    expect(fetched[0].start_frame).toBe(0)
    expect(fetched[0].end_frame).toBe(9)
  })

  it("does not resubmit an unchanged window", async () => {
    const service = fakeService()
    const api = new ApiClient("", service.fetchFn)
    const recorder = new TraceRecorder(10)
    for (let frame = 0; frame < 10; frame++) recorder.record(frame, 0.4)

    const submitter = new Submitter(api, "rec-a", "ui")
    await submitter.submitComplete(recorder)
    const again = await submitter.submitComplete(recorder)
    expect(again.submitted).toHaveLength(0)
    expect(submitter.submittedCount()).toBe(1)
  })

  it("resubmits when a window was re-traced to a new value", async () => {
    const service = fakeService()
    const api = new ApiClient("", service.fetchFn)
    const recorder = new TraceRecorder(10)
    for (let frame = 0; frame < 10; frame++) recorder.record(frame, 0.4)

    const submitter = new Submitter(api, "rec-a", "ui")
    await submitter.submitComplete(recorder)
    for (let frame = 0; frame < 10; frame++) recorder.record(frame, 0.7)
    const outcome = await submitter.submitComplete(recorder)
    expect(outcome.submitted).toHaveLength(1)

    const fetched = await api.getAnnotations("rec-a")
    expect(fetched).toHaveLength(1)
    expect(fetched[0].intensity).toBe(0.7)
  })

  it("keeps windows pending when the server rejects them", async () => {
    const rejectAll = (async () =>
      jsonResponse({ detail: [{ field: "intensity", message: "bad" }] }, 400)) as unknown as typeof fetch
    const api = new ApiClient("", rejectAll)
    const recorder = new TraceRecorder(10)
    for (let frame = 0; frame < 10; frame++) recorder.record(frame, 0.5)

    const submitter = new Submitter(api, "rec-a", "ui")
    const outcome = await submitter.submitComplete(recorder)
    expect(outcome.failed).toHaveLength(1)
    expect(submitter.submittedCount()).toBe(0)
  })
})
