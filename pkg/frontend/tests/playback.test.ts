import { describe, expect, it } from "vitest";

import { Player } from "../src/playback.js";

describe("Player", () => {
  it("derives the duration from the sample grid", () => {
    const p = new Player(41);
    expect(p.durationS).toBeCloseTo(10, 9);
    expect(p.lastFrame).toBe(40);
  });

  it("advances four frames per wall-clock second at 1x", () => {
    const p = new Player(41);
    p.playing = true;
    p.tick(1.0);
    expect(p.frame()).toBe(4);
    p.tick(0.25);
    expect(p.frame()).toBe(5);
  });

  it("stops at the last frame instead of wrapping", () => {
    const p = new Player(5);
    p.playing = true;
    p.tick(100);
    expect(p.frame()).toBe(4);
    expect(p.playing).toBe(false);
    expect(p.tick(1)).toBe(false);
  });

  it("restarts from the beginning when toggled at the end", () => {
    const p = new Player(5);
    p.seek(4);
    p.toggle();
    expect(p.playing).toBe(true);
    expect(p.frame()).toBe(0);
  });

  it("pauses and resumes mid-trace without losing position", () => {
    const p = new Player(41);
    p.playing = true;
    p.tick(2.0);
    p.toggle();
    expect(p.playing).toBe(false);
    const frame = p.frame();
    p.toggle();
    expect(p.playing).toBe(true);
    expect(p.frame()).toBe(frame);
  });

  it("clamps seeks to the valid range", () => {
    const p = new Player(10);
    p.seek(99);
    expect(p.frame()).toBe(9);
    p.seek(-5);
    expect(p.frame()).toBe(0);
  });

  it("tolerates an empty trace", () => {
    const p = new Player(0);
    expect(p.frame()).toBe(0);
    expect(p.durationS).toBe(0);
    p.playing = true;
    expect(p.tick(1)).toBe(false);
  });

  it("honors the playback rate", () => {
    const p = new Player(41);
    p.playing = true;
    p.rate = 2;
    p.tick(1.0);
    expect(p.frame()).toBe(8);
  });

  it("reset adopts a new trace length and rewinds", () => {
    const p = new Player(41);
    p.seek(20);
    p.reset(9);
    expect(p.nFrames).toBe(9);
    expect(p.frame()).toBe(0);
    expect(p.playing).toBe(false);
  });
});
