import { describe, expect, it } from "vitest"

import { MAX_RATE, MIN_RATE, PlaybackState } from "../src/playback.js"

describe("PlaybackState", () => {
  it("clamps the playback rate to its bounds", () => {
    const playback = new PlaybackState(100, 30)
    playback.setRate(10)
    expect(playback.rate).toBe(MAX_RATE)
    playback.setRate(0)
    expect(playback.rate).toBe(MIN_RATE)
  })

  it("clamps seeks to the frame range", () => {
    const playback = new PlaybackState(100, 30)
    playback.seek(500)
    expect(playback.currentFrame).toBe(99)
    playback.seek(-3)
    expect(playback.currentFrame).toBe(0)
  })

  it("advances at fps x rate and reports every reached frame", () => {
    const playback = new PlaybackState(100, 30)
    playback.play()
    expect(playback.tick(0.1)).toEqual([1, 2, 3])
    expect(playback.currentFrame).toBe(3)
    playback.setRate(2)
    expect(playback.tick(0.1)).toEqual([4, 5, 6, 7, 8, 9])
  })

  it("covers a 100-frame recording at 1x and 30 fps in about 3.33 s", () => {
    const playback = new PlaybackState(100, 30)
    playback.play()
    let reached = 0
    let elapsed = 0
    while (playback.playing && elapsed < 10) {
      reached += playback.tick(1 / 60).length
      elapsed += 1 / 60
    }
    expect(reached).toBe(99)
    expect(elapsed).toBeGreaterThan(3.2)
    expect(elapsed).toBeLessThan(3.5)
  })

  it("stops at the last frame and restarts from zero on play", () => {
    const playback = new PlaybackState(10, 30)
    playback.play()
    playback.tick(10)
    expect(playback.currentFrame).toBe(9)
    expect(playback.playing).toBe(false)
    playback.play()
    expect(playback.currentFrame).toBe(0)
  })

  it("does not advance while paused", () => {
    const playback = new PlaybackState(10, 30)
    expect(playback.tick(1)).toEqual([])
    expect(playback.currentFrame).toBe(0)
  })
})
