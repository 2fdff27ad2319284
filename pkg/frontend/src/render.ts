/**
 * Canvas drawing for the explorer: top-down trace playback and the
 * visibility-fraction timeline. The coordinate mapping is kept in pure
 * functions so it can be tested without a canvas; the draw functions only
 * touch a 2D context.
 */

import type { PointReport, TraceFrame, VisibilitySeries } from "./api.js";

export interface Bounds {
  minX: number;
  maxX: number;
  minY: number;
  maxY: number;
}

export interface Transform {
  scale: number;
  ox: number;
  oy: number;
}

/** World-space extent of every actor footprint over the whole trace, padded
 * by `margin` meters. A fixed view for the full episode keeps the camera from
 * jittering while actors move. */
export function traceBounds(frames: TraceFrame[], margin = 6): Bounds {
  let minX = Infinity;
  let maxX = -Infinity;
  let minY = Infinity;
  let maxY = -Infinity;
  for (const f of frames) {
    for (const a of f.actors) {
      const r = Math.hypot(a.half_length, a.half_width);
      minX = Math.min(minX, a.x - r);
      maxX = Math.max(maxX, a.x + r);
      minY = Math.min(minY, a.y - r);
      maxY = Math.max(maxY, a.y + r);
    }
  }
  if (minX > maxX) {
    return { minX: -margin, maxX: margin, minY: -margin, maxY: margin };
  }
  return { minX: minX - margin, maxX: maxX + margin, minY: minY - margin, maxY: maxY + margin };
}

/** Uniform scale mapping bounds into a w x h canvas, world +y pointing up,
 * leftover space centered. */
export function fitTransform(b: Bounds, w: number, h: number): Transform {
  const spanX = Math.max(1e-9, b.maxX - b.minX);
  const spanY = Math.max(1e-9, b.maxY - b.minY);
  const scale = Math.min(w / spanX, h / spanY);
  const mx = (w - scale * spanX) / 2;
  const my = (h - scale * spanY) / 2;
  return { scale, ox: mx - scale * b.minX, oy: my + scale * b.maxY };
}

export function toScreen(tf: Transform, x: number, y: number): [number, number] {
  return [tf.ox + tf.scale * x, tf.oy - tf.scale * y];
}

function cssColor(rgb: number[]): string {
  const [r, g, b] = rgb;
  return `rgb(${r | 0}, ${g | 0}, ${b | 0})`;
}

/** Draw one trace sample: faint full trajectories, then actor rectangles in
 * their scene colors, the ego highlighted, and a collision banner once
 * contact has happened. */
export function drawFrame(
  ctx: CanvasRenderingContext2D,
  frames: TraceFrame[],
  index: number,
  tf: Transform,
): void {
  const w = ctx.canvas.width;
  const h = ctx.canvas.height;
  ctx.fillStyle = "#11161d";
  ctx.fillRect(0, 0, w, h);
  if (frames.length === 0) return;
  const frame = frames[Math.min(frames.length - 1, Math.max(0, index))];

  ctx.lineWidth = 1;
  for (const a of frame.actors) {
    ctx.strokeStyle = a.id === frame.ego ? "rgba(138, 180, 255, 0.5)" : "rgba(160, 160, 160, 0.25)";
    ctx.beginPath();
    let started = false;
    for (const f of frames) {
      const p = f.actors.find((x) => x.id === a.id);
      if (!p) continue;
      const [sx, sy] = toScreen(tf, p.x, p.y);
      if (started) ctx.lineTo(sx, sy);
      else ctx.moveTo(sx, sy);
      started = true;
    }
    ctx.stroke();
  }

  for (const a of frame.actors) {
    const [cx, cy] = toScreen(tf, a.x, a.y);
    ctx.save();
    ctx.translate(cx, cy);
    // screen y is flipped, so the rotation flips too
    ctx.rotate(-a.heading);
    const hl = a.half_length * tf.scale;
    const hw = a.half_width * tf.scale;
    ctx.fillStyle = cssColor(a.color);
    ctx.fillRect(-hl, -hw, 2 * hl, 2 * hw);
    ctx.strokeStyle = a.id === frame.ego ? "#8ab4ff" : "#586174";
    ctx.lineWidth = a.id === frame.ego ? 2 : 1;
    ctx.strokeRect(-hl, -hw, 2 * hl, 2 * hw);
    // nose tick showing the heading
    ctx.beginPath();
    ctx.moveTo(hl, 0);
    ctx.lineTo(hl + Math.max(3, hw), 0);
    ctx.strokeStyle = "#e6e6e6";
    ctx.lineWidth = 1;
    ctx.stroke();
    ctx.restore();

    if (a.id !== frame.ego) {
      ctx.fillStyle = "#9aa4b2";
      ctx.font = "10px monospace";
      ctx.fillText(a.id, cx + 4, cy - 4);
    }
  }

  if (frame.collided) {
    ctx.strokeStyle = "#e5534b";
    ctx.lineWidth = 3;
    ctx.strokeRect(1.5, 1.5, w - 3, h - 3);
    ctx.fillStyle = "#e5534b";
    ctx.font = "bold 12px monospace";
    ctx.fillText("COLLIDED", 10, 18);
  }
  ctx.fillStyle = "#9aa4b2";
  ctx.font = "11px monospace";
  ctx.fillText(`t = ${frame.t.toFixed(2)} s`, 10, h - 8);
}

export const SERIES_COLORS = ["#58a6ff", "#f0883e", "#3fb950", "#bc8cff", "#d29922"];

/** Visibility fraction per viewpoint against time, with markers for first
 * visibility and collision, and a cursor at the playback time. */
export function drawVisibility(
  ctx: CanvasRenderingContext2D,
  series: VisibilitySeries,
  report: PointReport | null,
  currentT: number,
): void {
  const w = ctx.canvas.width;
  const h = ctx.canvas.height;
  const padL = 30;
  const padB = 16;
  const padT = 8;
  ctx.fillStyle = "#11161d";
  ctx.fillRect(0, 0, w, h);

  const t = series["t"] ?? [];
  if (t.length === 0) return;
  const tMax = Math.max(t[t.length - 1], 1e-9);
  const sx = (tv: number) => padL + ((w - padL - 6) * tv) / tMax;
  const sy = (v: number) => padT + (h - padT - padB) * (1 - v);

  ctx.strokeStyle = "#2c3340";
  ctx.lineWidth = 1;
  for (const v of [0, 0.5, 1]) {
    ctx.beginPath();
    ctx.moveTo(padL, sy(v));
    ctx.lineTo(w - 6, sy(v));
    ctx.stroke();
    ctx.fillStyle = "#717d8f";
    ctx.font = "10px monospace";
    ctx.fillText(v.toFixed(1), 4, sy(v) + 3);
  }

  const names = Object.keys(series).filter((k) => k !== "t");
  names.forEach((name, idx) => {
    const ys = series[name];
    ctx.strokeStyle = SERIES_COLORS[idx % SERIES_COLORS.length];
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    for (let i = 0; i < t.length && i < ys.length; i++) {
      const x = sx(t[i]);
      const y = sy(ys[i]);
      if (i === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    }
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.font = "10px monospace";
    ctx.fillText(name, w - 6 - ctx.measureText(name).width, padT + 10 + 12 * idx);
  });

  const vline = (tv: number, color: string, label: string) => {
    const x = sx(tv);
    ctx.strokeStyle = color;
    ctx.lineWidth = 1;
    ctx.setLineDash([4, 3]);
    ctx.beginPath();
    ctx.moveTo(x, padT);
    ctx.lineTo(x, h - padB);
    ctx.stroke();
    ctx.setLineDash([]);
    ctx.fillStyle = color;
    ctx.font = "10px monospace";
    ctx.fillText(label, Math.min(x + 3, w - 40), h - padB - 4);
  };
  if (report?.first_visibility_time != null) {
    vline(report.first_visibility_time, "#3fb950", "seen");
  }
  if (report?.collision_time != null) {
    vline(report.collision_time, "#e5534b", "impact");
  }
  vline(Math.min(currentT, tMax), "#9aa4b2", "");

  ctx.fillStyle = "#717d8f";
  ctx.font = "10px monospace";
  ctx.fillText(`${tMax.toFixed(1)} s`, w - 40, h - 4);
  ctx.fillText("0", padL, h - 4);
}
