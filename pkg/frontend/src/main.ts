/** Page wiring: load a recording, run playback, capture the trace, submit. */

import { ApiClient, FramePayload, RecordingSummary } from "./api.js"
import { PlaybackState } from "./playback.js"
import { drawFrame, fitTransform } from "./render.js"
import { Submitter } from "./submit.js"
import { TraceRecorder, clamp01 } from "./trace.js"

const WINDOW_FRAMES = 10
const ANNOTATOR_ID = "ui"

function element<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id)
  if (!node) throw new Error(`missing element #${id}`)
  return node as T
}

function showError(message: string): void {
  const banner = element<HTMLDivElement>("error-banner")
  banner.textContent = message
  banner.hidden = false
}

async function loadStreams(
  api: ApiClient,
  recording: RecordingSummary,
): Promise<Map<string, FramePayload[]>> {
  const streams = new Map<string, FramePayload[]>()
  for (const modality of recording.modalities) {
    if (modality === "speech") continue
    const count = recording.frame_counts[modality] ?? 0
    if (count < 1) continue
    streams.set(modality, await api.getFrames(recording.recording_id, modality, 0, count - 1))
  }
  return streams
}

async function init(): Promise<void> {
  const api = new ApiClient()
  const canvas = element<HTMLCanvasElement>("playback-canvas")
  const ctx = canvas.getContext("2d")
  if (!ctx) throw new Error("canvas 2d context unavailable")

  const recordings = await api.listRecordings()
  if (recordings.length === 0) {
    showError("no recordings available")
    return
  }
  const recording = recordings[0]
  const streams = await loadStreams(api, recording)
  const frameCount = Math.min(...[...streams.values()].map((f) => f.length))
  if (!Number.isFinite(frameCount) || frameCount < 1) {
    showError("recording has no visual frames")
    return
  }

  element<HTMLSpanElement>("recording-label").textContent =
    `${recording.recording_id} (${frameCount} frames @ ${recording.fps} fps)`

  const view = fitTransform(streams, canvas.width, canvas.height)
  const playback = new PlaybackState(frameCount, recording.fps)
  const recorder = new TraceRecorder(WINDOW_FRAMES)
  const submitter = new Submitter(api, recording.recording_id, ANNOTATOR_ID)

  const slider = element<HTMLInputElement>("intensity-slider")
  const scrub = element<HTMLInputElement>("scrub-bar")
  scrub.max = String(frameCount - 1)
  const status = element<HTMLSpanElement>("status-label")

  const sampleFrame = (frame: number) => {
    recorder.record(frame, clamp01(Number(slider.value)))
    status.textContent =
      `frame ${frame} · ${recorder.completeWindows().length} windows labeled, ` +
      `${submitter.submittedCount()} submitted`
  }

  const redraw = () => {
    drawFrame(ctx, streams, playback.currentFrame, view)
    scrub.value = String(playback.currentFrame)
  }

  let lastTick: number | null = null
  const loop = (timestamp: number) => {
    if (lastTick !== null) {
      for (const frame of playback.tick((timestamp - lastTick) / 1000)) {
        sampleFrame(frame)
      }
    }
    lastTick = timestamp
    redraw()
    requestAnimationFrame(loop)
  }

  element<HTMLButtonElement>("play-button").addEventListener("click", () => {
    playback.play()
    sampleFrame(playback.currentFrame)
  })
  element<HTMLButtonElement>("pause-button").addEventListener("click", () => playback.pause())
  element<HTMLSelectElement>("rate-select").addEventListener("change", (event) => {
    playback.setRate(Number((event.target as HTMLSelectElement).value))
  })
  scrub.addEventListener("input", () => {
    playback.pause()
    playback.seek(Number(scrub.value))
    redraw()
  })
  element<HTMLButtonElement>("submit-button").addEventListener("click", async () => {
    const outcome = await submitter.submitComplete(recorder)
    if (outcome.failed.length > 0) {
      showError(`submission failed for ${outcome.failed.length} window(s): ${outcome.failed[0].error}`)
    } else {
      status.textContent =
        `${outcome.submitted.length} window(s) submitted (${submitter.submittedCount()} total)`
    }
  })

  redraw()
  requestAnimationFrame(loop)
}

init().catch((error) => showError(String(error)))
