/** Sweep report rows and ordering for the results table. All numbers come
 * from the server; this module only reshapes and sorts them. */

import type { SweepReport } from "./api.js";

export interface SweepRow {
  value: number;
  first_visibility_time: number | null;
  ttc_at_first_visibility: number | null;
  gap_at_first_visibility: number | null;
  min_distance: number;
  collision: boolean;
  collision_time: number | null;
  stoppable: boolean | null;
}

export type SortKey = keyof SweepRow;

export const SWEEP_COLUMNS: { key: SortKey; label: string }[] = [
  { key: "value", label: "value" },
  { key: "first_visibility_time", label: "first visible (s)" },
  { key: "ttc_at_first_visibility", label: "TTC (s)" },
  { key: "gap_at_first_visibility", label: "gap (m)" },
  { key: "min_distance", label: "min dist (m)" },
  { key: "collision", label: "collision" },
  { key: "collision_time", label: "impact (s)" },
  { key: "stoppable", label: "stoppable" },
];

/** One row per grid value, in grid order. */
export function sweepRows(report: SweepReport): SweepRow[] {
  return report.values.map((value, i) => {
    const r = report.rows[i];
    return {
      value,
      first_visibility_time: r.first_visibility_time,
      ttc_at_first_visibility: r.ttc_at_first_visibility,
      gap_at_first_visibility: r.gap_at_first_visibility,
      min_distance: r.min_distance,
      collision: r.collision,
      collision_time: r.collision_time,
      stoppable: r.stoppable,
    };
  });
}

/** Stable sort on one column. Null cells sink to the bottom in either
 * direction: a missing TTC means the target was never visible, which is not
 * a small number. Booleans order false < true. */
export function sortRows(rows: SweepRow[], key: SortKey, dir: 1 | -1): SweepRow[] {
  const ranked = rows.map((row, i) => ({ row, i }));
  ranked.sort((a, b) => {
    const va = a.row[key];
    const vb = b.row[key];
    const na = va === null;
    const nb = vb === null;
    if (na || nb) return na && nb ? a.i - b.i : na ? 1 : -1;
    const cmp = Number(va) - Number(vb);
    return cmp !== 0 ? dir * cmp : a.i - b.i;
  });
  return ranked.map((r) => r.row);
}
