/**
 * Explorer app: pick a scenario, move the sliders, run, watch the playback,
 * read the verdicts, iterate. All analysis numbers come from the server; this
 * file only wires DOM to the typed client and the pure helper modules.
 *
 * Refresh-safety: nothing client-side is authoritative. Boot fetches
 * /scenarios and /runs and rebuilds the whole view from those.
 */

import {
  ApiError,
  Client,
  isSweepReport,
  type ParamSpec,
  type PointReport,
  type RunDetail,
  type RunRequest,
  type ScenarioInfo,
  type SweepReport,
  type TraceFrame,
  type VisibilitySeries,
} from "./api.js";
import { clampToSpec, decimalsFor, defaultParams, formatValue, sweepGrid } from "./params.js";
import { Player } from "./playback.js";
import { drawFrame, drawVisibility, fitTransform, traceBounds, type Transform } from "./render.js";
import { emptyState, reconstruct, type SessionState } from "./state.js";
import { SWEEP_COLUMNS, sortRows, sweepRows, type SortKey, type SweepRow } from "./table.js";

function must<T extends HTMLElement>(id: string): T {
  const elt = document.getElementById(id);
  if (!elt) throw new Error(`missing element #${id}`);
  return elt as T;
}

// ---------------------------------------------------------------- DOM refs

const statusEl = must<HTMLSpanElement>("status");
const scenarioSelect = must<HTMLSelectElement>("scenario-select");
const scenarioDesc = must<HTMLParagraphElement>("scenario-desc");
const paramList = must<HTMLDivElement>("param-list");
const seedInput = must<HTMLInputElement>("seed");
const sweepEnable = must<HTMLInputElement>("sweep-enable");
const sweepFields = must<HTMLDivElement>("sweep-fields");
const sweepParam = must<HTMLSelectElement>("sweep-param");
const sweepLo = must<HTMLInputElement>("sweep-lo");
const sweepHi = must<HTMLInputElement>("sweep-hi");
const sweepStep = must<HTMLInputElement>("sweep-step");
const sweepCount = must<HTMLSpanElement>("sweep-count");
const runBtn = must<HTMLButtonElement>("run-btn");
const runError = must<HTMLDivElement>("run-error");
const historyEl = must<HTMLUListElement>("history");
const topdown = must<HTMLCanvasElement>("topdown");
const playBtn = must<HTMLButtonElement>("play-btn");
const scrub = must<HTMLInputElement>("scrub");
const clockEl = must<HTMLSpanElement>("clock");
const cameraFrame = must<HTMLImageElement>("camera-frame");
const frameLabel = must<HTMLSpanElement>("frame-label");
const runTitle = must<HTMLHeadingElement>("run-title");
const verdictsEl = must<HTMLDivElement>("verdicts");
const visCanvas = must<HTMLCanvasElement>("vis-canvas");
const sweepPanel = must<HTMLDivElement>("sweep-panel");

const topdownCtx = topdown.getContext("2d");
const visCtx = visCanvas.getContext("2d");
if (!topdownCtx || !visCtx) throw new Error("2D canvas context unavailable");

// ------------------------------------------------------------ module state

const client = new Client();
let scenarios: ScenarioInfo[] = [];
let state: SessionState = emptyState();
let paramValues: Record<string, number> = {};
const paramRows = new Map<string, HTMLDivElement>();

let inflight = false; // at most one run request at a time
const watching = new Set<string>(); // unfinished runs with an active poll

let selectedDetail: RunDetail | null = null;
let pinnedDetail: RunDetail | null = null;
let trace: TraceFrame[] = [];
let visibility: VisibilitySeries | null = null;
let traceTransform: Transform | null = null;
const player = new Player(0);
let shownFrame = -1;
let dirty = true;

let sortKey: SortKey = "value";
let sortDir: 1 | -1 = 1;

// ---------------------------------------------------------------- helpers

function setStatus(text: string, cls = ""): void {
  statusEl.textContent = text;
  statusEl.className = `status ${cls}`.trim();
}

function fmtT(v: number | null | undefined): string {
  return v == null ? "-" : `${v.toFixed(2)} s`;
}

function fmtM(v: number | null | undefined): string {
  return v == null ? "-" : `${v.toFixed(2)} m`;
}

function currentScenario(): ScenarioInfo | null {
  return scenarios.find((s) => s.scenario_id === scenarioSelect.value) ?? null;
}

function findSpec(sc: ScenarioInfo, name: string): ParamSpec | null {
  return sc.params.find((p) => p.name === name) ?? null;
}

function pointReport(detail: RunDetail | null): PointReport | null {
  if (!detail || detail.status !== "done" || !detail.report) return null;
  return isSweepReport(detail.report) ? null : detail.report;
}

function sweepReport(detail: RunDetail | null): SweepReport | null {
  if (!detail || detail.status !== "done" || !detail.report) return null;
  return isSweepReport(detail.report) ? detail.report : null;
}

// ------------------------------------------------------------- param panel

function buildParamPanel(sc: ScenarioInfo): void {
  paramValues = defaultParams(sc);
  paramList.textContent = "";
  paramRows.clear();
  for (const spec of sc.params) {
    const row = document.createElement("div");
    row.className = "param-row";

    const head = document.createElement("div");
    head.className = "row-head";
    const label = document.createElement("label");
    label.textContent = spec.name;
    const valueBox = document.createElement("input");
    valueBox.type = "number";
    valueBox.min = String(spec.lo);
    valueBox.max = String(spec.hi);
    valueBox.step = String(spec.step);
    valueBox.value = formatValue(spec.default, spec.step);
    head.append(label, valueBox);

    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = String(spec.lo);
    slider.max = String(spec.hi);
    slider.step = String(spec.step);
    slider.value = String(spec.default);

    const apply = (raw: number) => {
      const v = clampToSpec(spec, raw);
      paramValues[spec.name] = v;
      slider.value = String(v);
      valueBox.value = formatValue(v, spec.step);
    };
    slider.addEventListener("input", () => apply(Number(slider.value)));
    valueBox.addEventListener("change", () => apply(Number(valueBox.value)));

    row.append(head, slider);
    paramList.append(row);
    paramRows.set(spec.name, row);
  }
}

function buildSweepFields(sc: ScenarioInfo): void {
  sweepParam.textContent = "";
  for (const p of sc.params) {
    const opt = document.createElement("option");
    opt.value = p.name;
    opt.textContent = p.name;
    if (p.name === (sc.sweep_default ?? sc.params[0]?.name)) opt.selected = true;
    sweepParam.append(opt);
  }
  fillSweepRange();
}

function fillSweepRange(): void {
  const sc = currentScenario();
  const spec = sc ? findSpec(sc, sweepParam.value) : null;
  if (!spec) return;
  const d = decimalsFor(spec.step);
  sweepLo.value = spec.lo.toFixed(d);
  sweepHi.value = spec.hi.toFixed(d);
  sweepStep.value = String(spec.step);
  updateSweepCount();
}

function currentSweepValues(): number[] {
  const sc = currentScenario();
  const spec = sc ? findSpec(sc, sweepParam.value) : null;
  if (!spec) return [];
  return sweepGrid(spec, Number(sweepLo.value), Number(sweepHi.value), Number(sweepStep.value));
}

function updateSweepCount(): void {
  if (!sweepEnable.checked) {
    sweepCount.textContent = "";
    return;
  }
  const n = currentSweepValues().length;
  sweepCount.textContent = n === 0 ? "empty grid" : `${n} runs`;
}

// -------------------------------------------------------------- run errors

function clearFieldErrors(): void {
  runError.classList.add("hidden");
  runError.textContent = "";
  for (const row of paramRows.values()) row.classList.remove("field-error");
}

function showRunError(detail: string): void {
  runError.textContent = detail;
  runError.classList.remove("hidden");
  // the server names the offending parameter first, e.g. "ego_speed=99 outside [10, 35]"
  for (const [name, row] of paramRows) {
    if (detail.startsWith(`${name}=`) || detail.includes(`'${name}'`)) {
      row.classList.add("field-error");
    }
  }
}

function reportError(e: unknown): void {
  if (e instanceof ApiError) {
    showRunError(e.detail);
    setStatus(`request rejected (${e.status})`, "bad");
  } else {
    setStatus(e instanceof Error ? e.message : String(e), "bad");
  }
}

// -------------------------------------------------------------- submitting

async function refreshRuns(prev?: Partial<SessionState>): Promise<void> {
  state = reconstruct(await client.runs(), prev ?? state);
  renderHistory();
}

async function submitRun(): Promise<void> {
  const sc = currentScenario();
  if (!sc || inflight) return;
  clearFieldErrors();

  const params: Record<string, number> = {};
  for (const p of sc.params) params[p.name] = clampToSpec(p, paramValues[p.name] ?? p.default);
  const req: RunRequest = {
    scenario_id: sc.scenario_id,
    params,
    seed: Math.trunc(Number(seedInput.value)) || 0,
  };
  if (sweepEnable.checked) {
    const values = currentSweepValues();
    if (values.length === 0) {
      showRunError("sweep grid is empty; widen the range or shrink the step");
      return;
    }
    delete params[sweepParam.value]; // the grid decides this one
    req.sweep = { param: sweepParam.value, values };
  }

  inflight = true;
  runBtn.disabled = true;
  try {
    const handle = await client.createRun(req);
    setStatus(`${handle.run_id} running...`, "busy");
    await refreshRuns({ selected: handle.run_id, pinned: state.pinned });
    const done = await client.waitForRun(handle.run_id);
    await refreshRuns({ selected: handle.run_id, pinned: state.pinned });
    if (done.status === "failed") {
      setStatus(`${handle.run_id} failed: ${done.error ?? "unknown error"}`, "bad");
    } else {
      setStatus(`${handle.run_id} done`);
    }
    await showRun(handle.run_id, { autoplay: done.status === "done" });
  } catch (e) {
    reportError(e);
  } finally {
    inflight = false;
    runBtn.disabled = false;
  }
}

/** Keep polling a run selected while still in the queue (e.g. after a page
 * refresh); re-render when it finishes. */
function watchRun(runId: string): void {
  if (watching.has(runId)) return;
  watching.add(runId);
  client
    .waitForRun(runId)
    .then(async () => {
      await refreshRuns();
      if (state.selected === runId) await showRun(runId, { autoplay: true });
    })
    .catch((e) => reportError(e))
    .finally(() => watching.delete(runId));
}

// ----------------------------------------------------------------- history

function runLabel(detail: { scenario_id: string; kind: string; params: Record<string, number>; sweep?: { param: string | null } | null }): string {
  const bits = Object.entries(detail.params).map(([k, v]) => `${k}=${v}`);
  if (detail.kind === "sweep" && detail.sweep?.param) bits.push(`sweep ${detail.sweep.param}`);
  return `${detail.scenario_id}${bits.length ? " " + bits.join(" ") : ""}`;
}

function renderHistory(): void {
  historyEl.textContent = "";
  for (const run of [...state.runs].reverse()) {
    const li = document.createElement("li");
    if (run.run_id === state.selected) li.classList.add("selected");
    if (run.run_id === state.pinned) li.classList.add("pinned-run");

    const id = document.createElement("span");
    id.textContent = run.run_id;
    const label = document.createElement("span");
    label.className = "grow muted";
    label.textContent = runLabel(run);
    label.title = label.textContent;
    const badge = document.createElement("span");
    badge.className = `badge ${run.status}`;
    badge.textContent = run.status;
    const pin = document.createElement("button");
    pin.className = "pin";
    pin.textContent = run.run_id === state.pinned ? "unpin" : "pin";
    pin.title = "hold for side-by-side comparison";
    pin.addEventListener("click", (ev) => {
      ev.stopPropagation();
      void togglePin(run.run_id);
    });

    li.append(id, label, badge, pin);
    li.addEventListener("click", () => void showRun(run.run_id));
    historyEl.append(li);
  }
}

async function togglePin(runId: string): Promise<void> {
  state.pinned = state.pinned === runId ? null : runId;
  pinnedDetail = state.pinned ? await client.run(state.pinned) : null;
  renderHistory();
  renderAnalysis();
}

// ------------------------------------------------------------ run display

async function showRun(runId: string, opts: { autoplay?: boolean } = {}): Promise<void> {
  state.selected = runId;
  renderHistory();
  try {
    selectedDetail = await client.run(runId);
    if (state.pinned && pinnedDetail?.run_id !== state.pinned) {
      pinnedDetail = await client.run(state.pinned);
    }
    trace = [];
    visibility = null;
    traceTransform = null;
    if (selectedDetail.status === "done" && selectedDetail.kind === "point") {
      trace = await client.trace(runId);
      visibility = await client.visibility(runId);
      traceTransform = fitTransform(traceBounds(trace), topdown.width, topdown.height);
    } else if (selectedDetail.status === "pending" || selectedDetail.status === "running") {
      watchRun(runId);
    }
  } catch (e) {
    reportError(e);
    return;
  }
  player.reset(trace.length);
  player.playing = Boolean(opts.autoplay) && trace.length > 1;
  shownFrame = -1;
  dirty = true;
  configureTransport();
  renderAnalysis();
}

function configureTransport(): void {
  const enabled = trace.length > 1;
  playBtn.disabled = !enabled;
  scrub.disabled = !enabled;
  scrub.max = String(Math.max(0, trace.length - 1));
  scrub.value = "0";
  if (!enabled) {
    clockEl.textContent = "-";
    frameLabel.textContent = "";
    cameraFrame.removeAttribute("src");
  }
}

function statusLine(detail: RunDetail): string {
  const seed = ` seed ${detail.seed}`;
  if (detail.status === "failed") return `${detail.run_id} failed: ${detail.error}`;
  if (detail.status !== "done") return `${detail.run_id} is ${detail.status}...`;
  return `${detail.run_id} - ${runLabel(detail)}${seed}`;
}

function renderAnalysis(): void {
  verdictsEl.textContent = "";
  sweepPanel.classList.add("hidden");
  visCanvas.classList.add("hidden");
  if (!selectedDetail) {
    runTitle.textContent = "No run selected";
    return;
  }
  runTitle.textContent = statusLine(selectedDetail);

  const columns: { title: string; report: PointReport }[] = [];
  const selPoint = pointReport(selectedDetail);
  if (selPoint) columns.push({ title: selectedDetail.run_id, report: selPoint });
  const pinPoint = pointReport(pinnedDetail);
  if (pinPoint && pinnedDetail && pinnedDetail.run_id !== selectedDetail.run_id) {
    columns.push({ title: `${pinnedDetail.run_id} (pinned)`, report: pinPoint });
  }
  if (columns.length > 0) renderVerdicts(columns);
  if (selPoint && visibility) visCanvas.classList.remove("hidden");

  const sweep = sweepReport(selectedDetail);
  if (sweep) renderSweepTable(sweep);
}

interface VerdictRow {
  label: string;
  cell(r: PointReport): { text: string; cls?: string };
}

const VERDICT_ROWS: VerdictRow[] = [
  {
    label: "collision",
    cell: (r) =>
      r.collision
        ? { text: `yes @ ${fmtT(r.collision_time)}`, cls: "bad" }
        : { text: "no", cls: "good" },
  },
  { label: "TTC at first visibility", cell: (r) => ({ text: fmtT(r.ttc_at_first_visibility) }) },
  {
    label: "stoppable",
    cell: (r) =>
      r.stoppable == null
        ? { text: "-" }
        : r.stoppable
          ? { text: "yes", cls: "good" }
          : { text: "no", cls: "bad" },
  },
  { label: "first visible", cell: (r) => ({ text: fmtT(r.first_visibility_time) }) },
  { label: "gap at first visibility", cell: (r) => ({ text: fmtM(r.gap_at_first_visibility) }) },
  {
    label: "speed at first visibility",
    cell: (r) => ({
      text: r.speed_at_first_visibility == null ? "-" : `${r.speed_at_first_visibility.toFixed(1)} m/s`,
    }),
  },
  { label: "closest approach", cell: (r) => ({ text: fmtM(r.min_distance) }) },
  {
    label: "braking model",
    cell: (r) => ({ text: `${r.decel} m/s^2 after ${r.reaction_s} s reaction` }),
  },
];

function renderVerdicts(columns: { title: string; report: PointReport }[]): void {
  const table = document.createElement("table");
  const head = table.insertRow();
  head.insertCell();
  for (const c of columns) {
    const th = document.createElement("th");
    th.textContent = c.title;
    head.append(th);
  }

  const paramNames = Object.keys(columns[0].report.params);
  for (const name of paramNames) {
    const tr = table.insertRow();
    const th = document.createElement("th");
    th.textContent = name;
    tr.append(th);
    const texts = columns.map((c) => String(c.report.params[name] ?? "-"));
    const differ = new Set(texts).size > 1;
    for (const text of texts) {
      const td = tr.insertCell();
      td.textContent = text;
      if (differ) td.classList.add("diff");
    }
  }

  for (const row of VERDICT_ROWS) {
    const tr = table.insertRow();
    const th = document.createElement("th");
    th.textContent = row.label;
    tr.append(th);
    for (const c of columns) {
      const { text, cls } = row.cell(c.report);
      const td = tr.insertCell();
      td.textContent = text;
      if (cls) td.classList.add(cls);
    }
  }
  verdictsEl.append(table);
}

function renderSweepTable(report: SweepReport): void {
  sweepPanel.classList.remove("hidden");
  sweepPanel.textContent = "";

  const caption = document.createElement("p");
  caption.className = "muted";
  caption.textContent = `${report.values.length} runs over ${report.param}`;
  sweepPanel.append(caption);

  const rows = sortRows(sweepRows(report), sortKey, sortDir);
  const table = document.createElement("table");
  const head = table.insertRow();
  for (const col of SWEEP_COLUMNS) {
    const th = document.createElement("th");
    const arrow = col.key === sortKey ? (sortDir === 1 ? " ↑" : " ↓") : "";
    th.textContent = col.label + arrow;
    if (col.key === sortKey) th.classList.add("sorted");
    th.addEventListener("click", () => {
      sortDir = col.key === sortKey ? ((-sortDir) as 1 | -1) : 1;
      sortKey = col.key;
      renderSweepTable(report);
    });
    head.append(th);
  }
  for (const row of rows) {
    const tr = table.insertRow();
    if (row.collision) tr.classList.add("hit");
    for (const col of SWEEP_COLUMNS) {
      const td = tr.insertCell();
      td.textContent = cellText(row, col.key);
    }
  }
  sweepPanel.append(table);
}

function cellText(row: SweepRow, key: SortKey): string {
  const v = row[key];
  if (v === null) return "-";
  if (typeof v === "boolean") return v ? "yes" : "no";
  return key === "value" ? String(v) : v.toFixed(2);
}

// ---------------------------------------------------------------- playback

function syncPlayback(): void {
  if (trace.length === 0 || !traceTransform) {
    if (dirty) {
      topdownCtx!.fillStyle = "#11161d";
      topdownCtx!.fillRect(0, 0, topdown.width, topdown.height);
      topdownCtx!.fillStyle = "#586174";
      topdownCtx!.font = "12px monospace";
      const msg =
        selectedDetail?.kind === "sweep"
          ? "sweep runs have no playback; see the table below"
          : "run a scenario to see the playback";
      topdownCtx!.fillText(msg, 16, 24);
      dirty = false;
    }
    return;
  }
  const frame = player.frame();
  if (frame === shownFrame && !dirty) return;
  shownFrame = frame;
  dirty = false;

  drawFrame(topdownCtx!, trace, frame, traceTransform);
  scrub.value = String(frame);
  clockEl.textContent = `${player.timeS().toFixed(2)} / ${player.durationS.toFixed(2)} s`;
  playBtn.textContent = player.playing ? "pause" : "play";
  frameLabel.textContent = `frame ${frame} / ${trace.length - 1}`;
  if (state.selected) cameraFrame.src = client.frameUrl(state.selected, frame);
  if (visibility) {
    drawVisibility(visCtx!, visibility, pointReport(selectedDetail), player.timeS());
  }
}

let lastTs = 0;
function loop(ts: number): void {
  const dt = lastTs ? (ts - lastTs) / 1000 : 0;
  lastTs = ts;
  if (player.tick(dt)) {
    // still playing; frame change is picked up below
  } else if (!player.playing && playBtn.textContent === "pause") {
    dirty = true; // repaint the button state once playback stops
  }
  syncPlayback();
  requestAnimationFrame(loop);
}

// -------------------------------------------------------------------- boot

function onScenarioChange(): void {
  const sc = currentScenario();
  if (!sc) return;
  scenarioDesc.textContent = sc.description;
  buildParamPanel(sc);
  buildSweepFields(sc);
  clearFieldErrors();
  updateSweepCount();
}

async function boot(): Promise<void> {
  setStatus("loading scenarios...", "busy");
  try {
    scenarios = await client.scenarios();
  } catch (e) {
    setStatus("cannot reach the scenario service; is `drivelab serve` running?", "bad");
    throw e;
  }
  scenarioSelect.textContent = "";
  for (const sc of scenarios) {
    const opt = document.createElement("option");
    opt.value = sc.scenario_id;
    opt.textContent = sc.title;
    scenarioSelect.append(opt);
  }
  onScenarioChange();

  scenarioSelect.addEventListener("change", onScenarioChange);
  sweepEnable.addEventListener("change", () => {
    sweepFields.classList.toggle("hidden", !sweepEnable.checked);
    updateSweepCount();
  });
  sweepParam.addEventListener("change", fillSweepRange);
  for (const input of [sweepLo, sweepHi, sweepStep]) {
    input.addEventListener("input", updateSweepCount);
  }
  runBtn.addEventListener("click", () => void submitRun());
  playBtn.addEventListener("click", () => {
    player.toggle();
    dirty = true;
  });
  scrub.addEventListener("input", () => {
    player.playing = false;
    player.seek(Number(scrub.value));
    dirty = true;
  });

  // rebuild the session from the server: the run list survives refreshes
  await refreshRuns();
  setStatus(`${state.runs.length} runs on the server`);
  if (state.selected) await showRun(state.selected);
  requestAnimationFrame(loop);
}

void boot();
