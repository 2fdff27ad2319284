/**
 * Typed client for the scenario service.
 *
 * Every endpoint returns JSON except /trace (NDJSON, parsed here into frames)
 * and /frames/{n} (PNG, consumed through an <img> URL). The fetch function is
 * injectable so the client can be exercised without a server.
 */

export interface ParamSpec {
  name: string;
  lo: number;
  hi: number;
  step: number;
  default: number;
}

export interface ScenarioAnalysis {
  viewpoint: string;
  target: string;
  decel: number;
  reaction_s: number;
}

export interface ScenarioInfo {
  scenario_id: string;
  title: string;
  description: string;
  duration_s: number;
  params: ParamSpec[];
  sweep_default: string | null;
  viewpoints: string[];
  analysis: ScenarioAnalysis;
}

export interface SweepSpec {
  param: string | null;
  values: number[] | null;
}

export type RunStatus = "pending" | "running" | "done" | "failed";

export interface RunHandle {
  run_id: string;
  status: RunStatus;
  kind: "point" | "sweep";
  scenario_id: string;
  params: Record<string, number>;
  seed: number;
  sweep: SweepSpec | null;
  error: string | null;
}

/** "t" plus one series per viewpoint, all on the 250 ms sample grid. */
export type VisibilitySeries = Record<string, number[]>;

export interface PointReport {
  scenario_id: string;
  params: Record<string, number>;
  seed: number;
  duration_s: number;
  first_visibility_time: number | null;
  ttc_at_first_visibility: number | null;
  gap_at_first_visibility: number | null;
  speed_at_first_visibility: number | null;
  min_distance: number;
  contact_threshold: number;
  collision: boolean;
  collision_time: number | null;
  stoppable: boolean | null;
  decel: number;
  reaction_s: number;
  visibility_series: VisibilitySeries;
}

export interface SweepReport {
  scenario_id: string;
  param: string;
  values: number[];
  seed: number;
  rows: PointReport[];
}

export interface RunDetail extends RunHandle {
  report?: PointReport | SweepReport;
  n_frames?: number;
}

export interface TraceActor {
  id: string;
  kind: string;
  x: number;
  y: number;
  heading: number;
  speed: number;
  half_length: number;
  half_width: number;
  half_height: number;
  color: number[];
}

export interface TraceFrame {
  sample: number;
  t: number;
  time_of_day: number;
  ego: string | null;
  off_road: boolean;
  collided: boolean;
  affordances: Record<string, number | boolean> | null;
  actors: TraceActor[];
}

export interface RunRequest {
  scenario_id: string;
  params: Record<string, number>;
  seed: number;
  sweep?: SweepSpec;
}

export function isSweepReport(r: PointReport | SweepReport): r is SweepReport {
  return Array.isArray((r as SweepReport).values) && Array.isArray((r as SweepReport).rows);
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export function parseNdjson(text: string): TraceFrame[] {
  const frames: TraceFrame[] = [];
  for (const line of text.split("\n")) {
    const s = line.trim();
    if (s) frames.push(JSON.parse(s) as TraceFrame);
  }
  return frames;
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class Client {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  frameUrl(runId: string, n: number): string {
    return `${this.base}/runs/${runId}/frames/${n}`;
  }

  scenarios(): Promise<ScenarioInfo[]> {
    return this.json("/scenarios");
  }

  createRun(req: RunRequest): Promise<RunHandle> {
    return this.json("/runs", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(req),
    });
  }

  runs(): Promise<RunHandle[]> {
    return this.json("/runs");
  }

  run(runId: string): Promise<RunDetail> {
    return this.json(`/runs/${runId}`);
  }

  async trace(runId: string): Promise<TraceFrame[]> {
    const res = await this.raw(`/runs/${runId}/trace`);
    return parseNdjson(await res.text());
  }

  visibility(runId: string): Promise<VisibilitySeries> {
    return this.json(`/runs/${runId}/visibility`);
  }

  /** Poll until the run leaves the worker queue; resolves on done or failed. */
  async waitForRun(runId: string, intervalMs = 250, timeoutMs = 120_000): Promise<RunDetail> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const detail = await this.run(runId);
      if (detail.status === "done" || detail.status === "failed") return detail;
      if (Date.now() > deadline) {
        throw new Error(`run ${runId} still ${detail.status} after ${timeoutMs} ms`);
      }
      await sleep(intervalMs);
    }
  }

  private async raw(path: string, init?: RequestInit): Promise<Response> {
    const res = await this.fetchFn(this.base + path, init);
    if (!res.ok) throw new ApiError(res.status, await errorDetail(res));
    return res;
  }

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const res = await this.raw(path, init);
    return (await res.json()) as T;
  }
}

async function errorDetail(res: Response): Promise<string> {
  const text = await res.text();
  try {
    const body = JSON.parse(text);
    if (typeof body.detail === "string") return body.detail;
  } catch {
    // not JSON; fall through to the raw text
  }
  return text || res.statusText;
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
