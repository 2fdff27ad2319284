/**
 * Parameter range handling. Everything the form submits goes through here, so
 * the client never sends a value outside the server-declared bounds, and the
 * sweep grid arithmetic mirrors the server's (same 1e-9 slack) so row counts
 * match.
 */

import type { ParamSpec, ScenarioInfo } from "./api.js";

/** Decimal places needed to print values of this magnitude without FP dust. */
export function decimalsFor(step: number): number {
  const s = Math.abs(step);
  for (let d = 0; d <= 6; d++) {
    const scaled = s * 10 ** d;
    if (Math.abs(scaled - Math.round(scaled)) < 1e-9) return d;
  }
  return 6;
}

export function formatValue(value: number, step: number): string {
  return value.toFixed(decimalsFor(step));
}

/** Clamp into [lo, hi] and snap onto the step lattice anchored at lo. The
 * clamp happens in step-index space, so the result stays on the lattice even
 * when hi itself is not a lattice point. */
export function clampToSpec(spec: ParamSpec, value: number): number {
  if (!Number.isFinite(value)) return spec.default;
  const maxSteps = Math.floor((spec.hi - spec.lo) / spec.step + 1e-9);
  const steps = Math.min(maxSteps, Math.max(0, Math.round((value - spec.lo) / spec.step)));
  const d = Math.max(decimalsFor(spec.step), decimalsFor(spec.lo));
  return roundDust(spec.lo + steps * spec.step, d);
}

/** lo..hi inclusive stepping by `step`; empty when the range is degenerate. */
export function gridValues(lo: number, hi: number, step: number): number[] {
  if (!(step > 0) || hi < lo) return [];
  const d = Math.min(9, Math.max(decimalsFor(step), decimalsFor(lo)));
  const n = Math.floor((hi - lo) / step + 1e-9);
  const out: number[] = [];
  for (let i = 0; i <= n; i++) out.push(roundDust(lo + i * step, d));
  return out;
}

/** A sweep grid the server will accept: endpoints clamped into the spec's
 * range first, so every value passes the server-side bounds check. */
export function sweepGrid(spec: ParamSpec, lo: number, hi: number, step: number): number[] {
  const a = Math.min(spec.hi, Math.max(spec.lo, lo));
  const b = Math.min(spec.hi, Math.max(spec.lo, hi));
  return gridValues(a, b, step > 0 ? step : spec.step);
}

export function defaultParams(scenario: ScenarioInfo): Record<string, number> {
  const out: Record<string, number> = {};
  for (const p of scenario.params) out[p.name] = p.default;
  return out;
}

function roundDust(value: number, decimals: number): number {
  return Number(value.toFixed(decimals));
}
