/** Session view-state derived from the server's run list. A page refresh
 * rebuilds everything from GET /runs; nothing kept here is authoritative. */

import type { RunHandle } from "./api.js";

export interface SessionState {
  runs: RunHandle[];
  /** run shown in the analysis panel */
  selected: string | null;
  /** run held on the side for A/B comparison */
  pinned: string | null;
}

export function emptyState(): SessionState {
  return { runs: [], selected: null, pinned: null };
}

/** Rebuild from the server's list, keeping prior selections when those runs
 * still exist. Fresh sessions select the most recent finished run, falling
 * back to the most recent run of any status. */
export function reconstruct(runs: RunHandle[], prev?: Partial<SessionState>): SessionState {
  const ids = new Set(runs.map((r) => r.run_id));
  let selected = prev?.selected && ids.has(prev.selected) ? prev.selected : null;
  if (selected === null) {
    const lastDone = [...runs].reverse().find((r) => r.status === "done");
    selected = lastDone?.run_id ?? runs[runs.length - 1]?.run_id ?? null;
  }
  const pinned =
    prev?.pinned && ids.has(prev.pinned) && prev.pinned !== selected ? prev.pinned : null;
  return { runs: [...runs], selected, pinned };
}
