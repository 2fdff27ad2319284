"""HTTP facade over scenarios, runs, traces, and rendered frames.

Runs execute on a single background worker in POST order, so server logs and
run ids are reproducible. Every GET is a pure view of a finished artifact;
frames render lazily on first request and are cached by (run, sample).
"""
from __future__ import annotations

import os
import queue
import threading
from dataclasses import dataclass, field

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse, RedirectResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import camera
from .scenarios import (
    ParamError,
    Scenario,
    builtin_scenario_ids,
    load_builtin,
    load_scenario_file,
    run_point,
    run_sweep,
)

VALID_STATUS = ("pending", "running", "done", "failed")


class SweepRequest(BaseModel):
    param: str | None = None
    values: list[float] | None = None


class RunRequest(BaseModel):
    scenario_id: str
    params: dict[str, float] = {}
    seed: int = 0
    sweep: SweepRequest | None = None


@dataclass
class RunRecord:
    run_id: str
    scenario: Scenario
    params: dict
    seed: int
    sweep: SweepRequest | None
    status: str = "pending"
    error: str | None = None
    result: object = None  # PointResult or SweepReport
    render_ctx: tuple | None = None  # (network, buildings), built lazily
    frame_cache: dict = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return "sweep" if self.sweep is not None else "point"

    def handle(self) -> dict:
        return {
            "run_id": self.run_id,
            "status": self.status,
            "kind": self.kind,
            "scenario_id": self.scenario.scenario_id,
            "params": self.params,
            "seed": self.seed,
            "sweep": None if self.sweep is None else self.sweep.model_dump(),
            "error": self.error,
        }


class RunRegistry:
    """Run bookkeeping plus the sequential worker that executes them."""

    def __init__(self):
        self.lock = threading.Lock()
        self.runs: dict[str, RunRecord] = {}
        self.order: list[str] = []
        self.queue: queue.Queue = queue.Queue()
        self.worker = threading.Thread(target=self._drain, daemon=True)
        self.worker.start()

    def submit(self, scenario: Scenario, params: dict, seed: int, sweep: SweepRequest | None) -> RunRecord:
        with self.lock:
            run_id = f"run-{len(self.order) + 1:04d}"
            record = RunRecord(run_id=run_id, scenario=scenario, params=params, seed=seed, sweep=sweep)
            self.runs[run_id] = record
            self.order.append(run_id)
        self.queue.put(run_id)
        return record

    def get(self, run_id: str) -> RunRecord:
        record = self.runs.get(run_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown run {run_id!r}")
        return record

    def _drain(self) -> None:
        while True:
            run_id = self.queue.get()
            record = self.runs[run_id]
            record.status = "running"
            try:
                if record.sweep is not None:
                    record.result = run_sweep(
                        record.scenario,
                        param=record.sweep.param,
                        values=record.sweep.values,
                        overrides=record.params,
                        seed=record.seed,
                    )
                else:
                    record.result = run_point(record.scenario, record.params, seed=record.seed)
                record.status = "done"
            except Exception as e:  # surfaced through the status poll
                record.error = str(e)
                record.status = "failed"


def default_ui_dir() -> str | None:
    """frontend/dist next to the repository root, when it has been built."""
    here = os.path.dirname(os.path.abspath(__file__))
    candidate = os.path.normpath(os.path.join(here, "..", "..", "frontend", "dist"))
    return candidate if os.path.isdir(candidate) else None


def create_app(scenario_files=(), ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="drivelab", version="1.0.0", description="scenario runs, sweeps, traces, frames")

    scenarios: dict[str, Scenario] = {sid: load_builtin(sid) for sid in builtin_scenario_ids()}
    for path in scenario_files:
        sc = load_scenario_file(path)
        scenarios[sc.scenario_id] = sc

    registry = RunRegistry()
    app.state.registry = registry

    def scenario_or_404(scenario_id: str) -> Scenario:
        sc = scenarios.get(scenario_id)
        if sc is None:
            raise HTTPException(status_code=404, detail=f"unknown scenario {scenario_id!r}")
        return sc

    def finished_or_409(run_id: str) -> RunRecord:
        record = registry.get(run_id)
        if record.status == "failed":
            raise HTTPException(status_code=409, detail=f"run failed: {record.error}")
        if record.status != "done":
            raise HTTPException(status_code=409, detail="run not finished")
        return record

    @app.get("/scenarios")
    def list_scenarios() -> list:
        return [
            {
                "scenario_id": sc.scenario_id,
                "title": sc.title,
                "description": sc.description,
                "duration_s": sc.duration_s,
                "params": [p.to_dict() for p in sc.params],
                "sweep_default": sc.sweep_default,
                "viewpoints": [v.name for v in sc.viewpoints],
                "analysis": sc.analysis,
            }
            for sc in sorted(scenarios.values(), key=lambda s: s.scenario_id)
        ]

    @app.post("/runs", status_code=201)
    def create_run(req: RunRequest) -> dict:
        sc = scenario_or_404(req.scenario_id)
        try:
            params = sc.resolve_params(req.params)
            if req.sweep is not None:
                name = req.sweep.param or sc.sweep_default
                if not name:
                    raise ParamError("scenario declares no default sweep parameter")
                spec = sc.param_spec(name)
                for v in req.sweep.values or []:
                    spec.validate(v)
        except ParamError as e:
            raise HTTPException(status_code=400, detail=str(e)) from None
        overrides = {k: params[k] for k in req.params}
        return registry.submit(sc, overrides, req.seed, req.sweep).handle()

    @app.get("/runs")
    def list_runs() -> list:
        return [registry.runs[rid].handle() for rid in registry.order]

    @app.get("/runs/{run_id}")
    def get_run(run_id: str) -> dict:
        record = registry.get(run_id)
        out = record.handle()
        if record.status == "done":
            if record.kind == "sweep":
                out["report"] = record.result.to_dict()
            else:
                out["report"] = record.result.report.to_dict()
                out["n_frames"] = len(record.result.trace.snapshots)
        return out

    @app.get("/runs/{run_id}/trace")
    def get_trace(run_id: str) -> PlainTextResponse:
        record = finished_or_409(run_id)
        if record.kind == "sweep":
            raise HTTPException(status_code=404, detail="sweep runs have no trace")
        return PlainTextResponse(record.result.trace.to_jsonl(), media_type="application/x-ndjson")

    @app.get("/runs/{run_id}/visibility")
    def get_visibility(run_id: str) -> dict:
        record = finished_or_409(run_id)
        if record.kind == "sweep":
            raise HTTPException(status_code=404, detail="sweep runs have no visibility series")
        return record.result.report.visibility_series

    @app.get("/runs/{run_id}/frames/{n}")
    def get_frame(run_id: str, n: int) -> Response:
        record = finished_or_409(run_id)
        if record.kind == "sweep":
            raise HTTPException(status_code=404, detail="sweep runs have no frames")
        snapshots = record.result.trace.snapshots
        if not 0 <= n < len(snapshots):
            raise HTTPException(status_code=404, detail=f"frame {n} outside 0..{len(snapshots) - 1}")
        if n not in record.frame_cache:
            if record.render_ctx is None:
                world = record.scenario.build_world(record.scenario.resolve_params(record.params))
                record.render_ctx = (world.network, world.buildings)
            network, buildings = record.render_ctx
            frame = camera.render(camera.CameraRig(), network, buildings, snapshots[n])
            record.frame_cache[n] = camera.frame_to_png_bytes(frame)
        return Response(content=record.frame_cache[n], media_type="image/png")

    if ui_dir is None:
        ui_dir = default_ui_dir()
    if ui_dir and os.path.isdir(ui_dir):
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

        @app.get("/", include_in_schema=False)
        def root() -> RedirectResponse:
            return RedirectResponse(url="/ui/")

    else:

        @app.get("/", include_in_schema=False)
        def root() -> dict:
            return {
                "service": "drivelab",
                "endpoints": ["/scenarios", "/runs", "/runs/{id}", "/runs/{id}/trace",
                              "/runs/{id}/visibility", "/runs/{id}/frames/{n}"],
            }

    return app


def wait_for_run(app: FastAPI, run_id: str, timeout_s: float = 60.0) -> RunRecord:
    """Poll helper for scripts and tests; returns once the run leaves the queue."""
    import time

    registry: RunRegistry = app.state.registry
    deadline = time.monotonic() + timeout_s
    while time.monotonic() < deadline:
        record = registry.get(run_id)
        if record.status in ("done", "failed"):
            return record
        time.sleep(0.01)
    raise TimeoutError(f"run {run_id} still {registry.get(run_id).status} after {timeout_s:g}s")


def serve(port: int = 8000, host: str = "127.0.0.1", scenario_files=(), ui_dir: str | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(scenario_files, ui_dir=ui_dir), host=host, port=port)
