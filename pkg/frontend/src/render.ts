/** Canvas drawing for tracked point playback. */

import { FramePayload } from "./api.js"

const MODALITY_COLORS: Record<string, string> = {
  face: "#4c9be8",
  body: "#e8764c",
  hand: "#5cc46a",
}

export interface ViewTransform {
  scale: number
  offsetX: number
  offsetY: number
}

/** Fit all points of all streams into the canvas with a margin. */
export function fitTransform(
  streams: Map<string, FramePayload[]>,
  width: number,
  height: number,
  margin = 20,
): ViewTransform {
  let minX = Infinity
  let maxX = -Infinity
  let minY = Infinity
  let maxY = -Infinity
  for (const frames of streams.values()) {
    for (const frame of frames) {
      for (const [x, y] of frame.points) {
        if (x < minX) minX = x
        if (x > maxX) maxX = x
        if (y < minY) minY = y
        if (y > maxY) maxY = y
      }
    }
  }
  if (!Number.isFinite(minX)) return { scale: 1, offsetX: width / 2, offsetY: height / 2 }
  const spanX = Math.max(maxX - minX, 1e-9)
  const spanY = Math.max(maxY - minY, 1e-9)
  const scale = Math.min((width - 2 * margin) / spanX, (height - 2 * margin) / spanY)
  return {
    scale,
    offsetX: margin + (width - 2 * margin - spanX * scale) / 2 - minX * scale,
    offsetY: margin + (height - 2 * margin - spanY * scale) / 2 - minY * scale,
  }
}

export function drawFrame(
  ctx: CanvasRenderingContext2D,
  streams: Map<string, FramePayload[]>,
  frameIndex: number,
  view: ViewTransform,
): void {
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height)
  for (const [modality, frames] of streams) {
    const frame = frames[frameIndex]
    if (!frame) continue
    ctx.fillStyle = MODALITY_COLORS[modality] ?? "#999999"
    for (const [x, y] of frame.points) {
      ctx.beginPath()
      ctx.arc(x * view.scale + view.offsetX, y * view.scale + view.offsetY, 3, 0, 2 * Math.PI)
      ctx.fill()
    }
  }
}
