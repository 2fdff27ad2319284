import { describe, expect, it } from "vitest";

import type { TraceActor, TraceFrame } from "../src/api.js";
import { fitTransform, toScreen, traceBounds } from "../src/render.js";

function actor(id: string, x: number, y: number): TraceActor {
  return {
    id,
    kind: "car",
    x,
    y,
    heading: 0,
    speed: 0,
    half_length: 2.25,
    half_width: 0.9,
    half_height: 0.75,
    color: [180, 40, 40],
  };
}

function frame(t: number, actors: TraceActor[]): TraceFrame {
  return {
    sample: Math.round(t / 0.25),
    t,
    time_of_day: 43200,
    ego: actors[0]?.id ?? null,
    off_road: false,
    collided: false,
    affordances: null,
    actors,
  };
}

describe("traceBounds", () => {
  it("covers every actor footprint across the whole trace", () => {
    const frames = [
      frame(0, [actor("ego", 0, 0), actor("truck", 100, 10)]),
      frame(0.25, [actor("ego", 50, 0), actor("truck", 90, 8)]),
    ];
    const b = traceBounds(frames, 0);
    const r = Math.hypot(2.25, 0.9);
    expect(b.minX).toBeCloseTo(-r, 9);
    expect(b.maxX).toBeCloseTo(100 + r, 9);
    expect(b.minY).toBeCloseTo(-r, 9);
    expect(b.maxY).toBeCloseTo(10 + r, 9);
  });

  it("pads by the margin", () => {
    const b = traceBounds([frame(0, [actor("ego", 0, 0)])], 6);
    const r = Math.hypot(2.25, 0.9);
    expect(b.maxX).toBeCloseTo(r + 6, 9);
  });

  it("returns a symmetric default view for an empty trace", () => {
    expect(traceBounds([], 6)).toEqual({ minX: -6, maxX: 6, minY: -6, maxY: 6 });
  });
});

describe("fitTransform", () => {
  const b = { minX: -10, maxX: 30, minY: 0, maxY: 10 };

  it("maps all corners inside the canvas", () => {
    const tf = fitTransform(b, 640, 380);
    for (const [x, y] of [
      [b.minX, b.minY],
      [b.minX, b.maxY],
      [b.maxX, b.minY],
      [b.maxX, b.maxY],
    ]) {
      const [sx, sy] = toScreen(tf, x, y);
      expect(sx).toBeGreaterThanOrEqual(-1e-9);
      expect(sx).toBeLessThanOrEqual(640 + 1e-9);
      expect(sy).toBeGreaterThanOrEqual(-1e-9);
      expect(sy).toBeLessThanOrEqual(380 + 1e-9);
    }
  });

  it("uses one uniform scale for both axes", () => {
    const tf = fitTransform(b, 640, 380);
    const [x0] = toScreen(tf, b.minX, 0);
    const [x1] = toScreen(tf, b.maxX, 0);
    const [, y0] = toScreen(tf, 0, b.minY);
    const [, y1] = toScreen(tf, 0, b.maxY);
    const sx = (x1 - x0) / (b.maxX - b.minX);
    const sy = (y0 - y1) / (b.maxY - b.minY);
    expect(sx).toBeCloseTo(sy, 9);
    expect(sx).toBeCloseTo(tf.scale, 9);
  });

  it("points world +y up on screen", () => {
    const tf = fitTransform(b, 640, 380);
    const [, yLow] = toScreen(tf, 0, b.minY);
    const [, yHigh] = toScreen(tf, 0, b.maxY);
    expect(yHigh).toBeLessThan(yLow);
  });

  it("centers the leftover axis", () => {
    const tf = fitTransform(b, 640, 380);
    // width-limited here, so vertical slack splits evenly
    const [, yTop] = toScreen(tf, 0, b.maxY);
    const [, yBottom] = toScreen(tf, 0, b.minY);
    expect(yTop - 0).toBeCloseTo(380 - yBottom, 9);
  });

  it("survives degenerate bounds", () => {
    const tf = fitTransform({ minX: 5, maxX: 5, minY: 2, maxY: 2 }, 100, 100);
    const [sx, sy] = toScreen(tf, 5, 2);
    expect(Number.isFinite(sx)).toBe(true);
    expect(Number.isFinite(sy)).toBe(true);
  });
});
