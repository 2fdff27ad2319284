"""Declarative corner-case scenarios: sweeps, line-of-sight, time-to-collision.

A scenario is a versioned JSON document bundling a small road world, scripted
actors, numeric parameters with ranges, and viewpoint definitions. Running a
point steps the regular 20 Hz world, recording per-step visibility of each
viewpoint's target actor, and derives the investigation verdicts: when the
analysis target first became visible, the time to collision at that moment,
and whether braking then would have avoided contact.

Collision prediction uses bounding discs (conservative) with an exact
rectangle check at the predicted contact; simplicity over tightness. Onset
and contact times are refined inside their bracketing 50 ms step by bisection
over linearly interpolated states, so sweep verdicts are not quantized to the
step grid.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .control import ControllerGains
from .geo import LocalBuilding, LocalRoad, WorldData
from .roads import RoadNetwork
from .sim import (
    DT,
    Actor,
    AffordanceDriver,
    ConstantDriver,
    PathDriver,
    Trace,
    World,
    detect_collision,
    make_actor,
    take_snapshot,
)

SCENARIO_FORMAT_VERSION = 1
VISIBILITY_GRID = 8  # 8 x 8 = 64 stratified surface rays
SAMPLE_INTERVAL_S = 0.25


class ScenarioError(ValueError):
    """Malformed scenario document."""


class ParamError(ValueError):
    """Parameter value outside its declared range; message names the bound."""


@dataclass(frozen=True)
class ParamSpec:
    name: str
    lo: float
    hi: float
    step: float
    default: float

    def __post_init__(self):
        if self.step <= 0:
            raise ScenarioError(f"parameter {self.name!r} step must be positive")
        if self.lo > self.hi:
            raise ScenarioError(f"parameter {self.name!r} has empty range [{self.lo}, {self.hi}]")
        if not (self.lo - 1e-9 <= self.default <= self.hi + 1e-9):
            raise ScenarioError(f"parameter {self.name!r} default outside [{self.lo}, {self.hi}]")

    def grid(self) -> list[float]:
        n = int(math.floor((self.hi - self.lo) / self.step + 1e-9))
        return [self.lo + i * self.step for i in range(n + 1)]

    def validate(self, value) -> float:
        try:
            v = float(value)
        except (TypeError, ValueError):
            raise ParamError(f"{self.name} must be a number, got {value!r}") from None
        if not (self.lo - 1e-9 <= v <= self.hi + 1e-9):
            raise ParamError(f"{self.name}={v:g} outside [{self.lo:g}, {self.hi:g}]")
        return v

    def to_dict(self) -> dict:
        return {"name": self.name, "lo": self.lo, "hi": self.hi, "step": self.step, "default": self.default}


@dataclass(frozen=True)
class Box3:
    """Yaw-oriented box; the occluder primitive for visibility queries."""

    cx: float
    cy: float
    half_x: float
    half_y: float
    z_lo: float
    z_hi: float
    yaw_deg: float = 0.0

    def __post_init__(self):
        if self.half_x <= 0 or self.half_y <= 0 or self.z_hi <= self.z_lo:
            raise ScenarioError("box extents must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "Box3":
        return cls(
            cx=float(d["cx"]),
            cy=float(d["cy"]),
            half_x=float(d["half_x"]),
            half_y=float(d["half_y"]),
            z_lo=float(d.get("z_lo", 0.0)),
            z_hi=float(d["z_hi"]),
            yaw_deg=float(d.get("yaw_deg", 0.0)),
        )

    def to_dict(self) -> dict:
        return {
            "cx": self.cx,
            "cy": self.cy,
            "half_x": self.half_x,
            "half_y": self.half_y,
            "z_lo": self.z_lo,
            "z_hi": self.z_hi,
            "yaw_deg": self.yaw_deg,
        }

    def placed(self, x: float, y: float, heading: float) -> "Box3":
        """This box's actor-local frame carried to a world pose."""
        c, s = math.cos(heading), math.sin(heading)
        return Box3(
            cx=x + c * self.cx - s * self.cy,
            cy=y + s * self.cx + c * self.cy,
            half_x=self.half_x,
            half_y=self.half_y,
            z_lo=self.z_lo,
            z_hi=self.z_hi,
            yaw_deg=self.yaw_deg + math.degrees(heading),
        )

    def footprint(self) -> np.ndarray:
        yaw = math.radians(self.yaw_deg)
        c, s = math.cos(yaw), math.sin(yaw)
        out = []
        for lx, ly in ((self.half_x, self.half_y), (-self.half_x, self.half_y),
                       (-self.half_x, -self.half_y), (self.half_x, -self.half_y)):
            out.append((self.cx + c * lx - s * ly, self.cy + s * lx + c * ly))
        return np.asarray(out)


@dataclass(frozen=True)
class Viewpoint:
    """An eye riding an actor, watching a target actor through occluders."""

    name: str
    actor: str
    eye: tuple  # (forward, left, up) offset in the actor frame
    target: str | None = None  # falls back to the analysis target
    occluders: tuple = ()  # actor-local boxes that ride along (e.g. a windshield pillar)

    @classmethod
    def from_dict(cls, d: dict) -> "Viewpoint":
        eye = tuple(float(v) for v in d["eye"])
        if len(eye) != 3:
            raise ScenarioError(f"viewpoint {d.get('name')!r} eye must be [forward, left, up]")
        return cls(
            name=str(d["name"]),
            actor=str(d["actor"]),
            eye=eye,
            target=d.get("target"),
            occluders=tuple(Box3.from_dict(b) for b in d.get("occluders", [])),
        )

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "actor": self.actor,
            "eye": list(self.eye),
            "target": self.target,
            "occluders": [b.to_dict() for b in self.occluders],
        }


# -- time to collision ----------------------------------------------------------


def time_to_collision(pos_a, vel_a, radius_a, pos_b, vel_b, radius_b):
    """Earliest t >= 0 with |dp + dv t| = r_a + r_b under constant velocities.

    Returns None when the discs never touch; already-overlapping states
    return 0.0.
    """
    dp = np.asarray(pos_b, dtype=float) - np.asarray(pos_a, dtype=float)
    dv = np.asarray(vel_b, dtype=float) - np.asarray(vel_a, dtype=float)
    r = float(radius_a) + float(radius_b)
    c = float(dp @ dp) - r * r
    if c <= 0.0:
        return 0.0
    a = float(dv @ dv)
    if a == 0.0:
        return None
    b = 2.0 * float(dp @ dv)
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return None
    t = (-b - math.sqrt(disc)) / (2.0 * a)
    return t if t >= 0.0 else None


def actor_velocity(a: Actor) -> np.ndarray:
    return np.array([a.speed * math.cos(a.heading), a.speed * math.sin(a.heading)])


def actor_ttc(a: Actor, b: Actor):
    """Disc TTC between two actors plus an exact rectangle check at contact.

    Returns (ttc seconds or None, rectangles actually touching at that time).
    The discs circumscribe the rectangles, so a False second element flags a
    conservative prediction (corner miss).
    """
    t = time_to_collision(a.position(), actor_velocity(a), a.bounding_radius(),
                          b.position(), actor_velocity(b), b.bounding_radius())
    if t is None:
        return None, False
    # nudge slightly past disc contact so tangent rectangles register
    dt = t + 1e-6
    fa = replace(a, x=a.x + a.speed * math.cos(a.heading) * dt, y=a.y + a.speed * math.sin(a.heading) * dt)
    fb = replace(b, x=b.x + b.speed * math.cos(b.heading) * dt, y=b.y + b.speed * math.sin(b.heading) * dt)
    hit, _ = detect_collision(fa, fb)
    return t, hit


# -- visibility -------------------------------------------------------------------


def _segment_hits_box(p0, p1, box: Box3) -> bool:
    """Slab test for the 3D segment p0 -> p1 against a yaw-oriented box."""
    yaw = math.radians(box.yaw_deg)
    c, s = math.cos(yaw), math.sin(yaw)
    cz = 0.5 * (box.z_lo + box.z_hi)
    hz = 0.5 * (box.z_hi - box.z_lo)

    def local(p):
        rx, ry = p[0] - box.cx, p[1] - box.cy
        return (c * rx + s * ry, -s * rx + c * ry, p[2] - cz)

    o = local(p0)
    g = local(p1)
    d = (g[0] - o[0], g[1] - o[1], g[2] - o[2])
    t0, t1 = 0.0, 1.0
    for oi, di, hi in ((o[0], d[0], box.half_x), (o[1], d[1], box.half_y), (o[2], d[2], hz)):
        if abs(di) < 1e-15:
            if abs(oi) > hi:
                return False
            continue
        ta = (-hi - oi) / di
        tb = (hi - oi) / di
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return False
    return True


def surface_points(center_xy, half_length: float, half_width: float, height: float,
                   yaw_deg: float, grid: int = VISIBILITY_GRID) -> np.ndarray:
    """Fixed stratified sample pattern over the four side faces of a box.

    Parameterized by perimeter position x height, which is area-uniform
    because every side face shares the same height; grid x grid points at
    stratum midpoints, no randomness.
    """
    hl, hw = float(half_length), float(half_width)
    corners = [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)]
    side_len = [2 * hl, 2 * hw, 2 * hl, 2 * hw]
    edges = np.cumsum([0.0] + side_len)
    perim = edges[-1]

    yaw = math.radians(yaw_deg)
    c, s = math.cos(yaw), math.sin(yaw)
    cx, cy = float(center_xy[0]), float(center_xy[1])

    pts = np.empty((grid * grid, 3))
    k = 0
    for i in range(grid):
        d = (i + 0.5) / grid * perim
        side = min(int(np.searchsorted(edges, d, side="right")) - 1, 3)
        f = (d - edges[side]) / side_len[side]
        x0, y0 = corners[side]
        x1, y1 = corners[(side + 1) % 4]
        lx = x0 + f * (x1 - x0)
        ly = y0 + f * (y1 - y0)
        px = cx + c * lx - s * ly
        py = cy + s * lx + c * ly
        for j in range(grid):
            pts[k] = (px, py, (j + 0.5) / grid * height)
            k += 1
    return pts


def visibility(eye, target_points: np.ndarray, occluders) -> float:
    """Fraction of sample rays from eye not intersecting any occluder box."""
    if len(target_points) == 0:
        raise ValueError("no target sample points")
    eye = (float(eye[0]), float(eye[1]), float(eye[2]))
    clear = 0
    for p in target_points:
        if not any(_segment_hits_box(eye, p, box) for box in occluders):
            clear += 1
    return clear / len(target_points)


def actor_visibility(eye, target: Actor, occluders) -> float:
    pts = surface_points(
        (target.x, target.y), target.half_length, target.half_width,
        2.0 * target.half_height, math.degrees(target.heading),
    )
    return visibility(eye, pts, occluders)


# -- scenario document ------------------------------------------------------------


def _substitute(obj, values: dict):
    """Replace "$name" strings anywhere in a JSON-ish structure."""
    if isinstance(obj, str) and obj.startswith("$"):
        name = obj[1:]
        if name not in values:
            raise ScenarioError(f"unknown parameter reference {obj!r}")
        return values[name]
    if isinstance(obj, dict):
        return {k: _substitute(v, values) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_substitute(v, values) for v in obj]
    return obj


@dataclass
class Scenario:
    scenario_id: str
    title: str
    description: str
    duration_s: float
    world: dict
    occluders: list  # world-frame Box3, also rendered as wall prisms
    params: list
    actors: list  # raw dicts, parameter refs unresolved
    viewpoints: list
    analysis: dict
    sweep_default: str
    time_of_day: float = 43200.0

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ScenarioError(f"invalid scenario JSON: {e}") from None
        if d.get("format_version") != SCENARIO_FORMAT_VERSION:
            raise ScenarioError(f"unsupported scenario format version {d.get('format_version')!r}")
        try:
            sc = cls(
                scenario_id=str(d["scenario_id"]),
                title=str(d.get("title", d["scenario_id"])),
                description=str(d.get("description", "")),
                duration_s=float(d["duration_s"]),
                world=d["world"],
                occluders=[Box3.from_dict(b) for b in d.get("occluders", [])],
                params=[ParamSpec(**p) for p in d.get("params", [])],
                actors=list(d["actors"]),
                viewpoints=[Viewpoint.from_dict(v) for v in d.get("viewpoints", [])],
                analysis=dict(d.get("analysis", {})),
                sweep_default=str(d.get("sweep_default", "")),
                time_of_day=float(d.get("time_of_day", 43200.0)),
            )
        except KeyError as e:
            raise ScenarioError(f"scenario missing required field {e}") from None
        sc._validate()
        return sc

    def to_dict(self) -> dict:
        return {
            "format_version": SCENARIO_FORMAT_VERSION,
            "scenario_id": self.scenario_id,
            "title": self.title,
            "description": self.description,
            "duration_s": self.duration_s,
            "world": self.world,
            "occluders": [b.to_dict() for b in self.occluders],
            "params": [p.to_dict() for p in self.params],
            "actors": self.actors,
            "viewpoints": [v.to_dict() for v in self.viewpoints],
            "analysis": self.analysis,
            "sweep_default": self.sweep_default,
            "time_of_day": self.time_of_day,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def _validate(self) -> None:
        if self.duration_s <= 0:
            raise ScenarioError("duration_s must be positive")
        ids = [a.get("id") for a in self.actors]
        if len(ids) != len(set(ids)) or any(not i for i in ids):
            raise ScenarioError("actor ids must be unique and nonempty")
        known = set(ids)
        for v in self.viewpoints:
            if v.actor not in known:
                raise ScenarioError(f"viewpoint {v.name!r} references undefined actor {v.actor!r}")
            if v.target is not None and v.target not in known:
                raise ScenarioError(f"viewpoint {v.name!r} targets undefined actor {v.target!r}")
        names = [p.name for p in self.params]
        if len(names) != len(set(names)):
            raise ScenarioError("duplicate parameter names")
        if self.analysis:
            if self.analysis.get("target") not in known:
                raise ScenarioError("analysis target is not a defined actor")
            vp = {v.name: v for v in self.viewpoints}.get(self.analysis.get("viewpoint"))
            if vp is None:
                raise ScenarioError("analysis viewpoint is not defined")
            if vp.target is not None and vp.target != self.analysis["target"]:
                raise ScenarioError("analysis viewpoint watches a different target")
        if self.sweep_default and self.sweep_default not in names:
            raise ScenarioError(f"sweep_default {self.sweep_default!r} is not a parameter")
        if sum(1 for a in self.actors if a.get("ego")) > 1:
            raise ScenarioError("at most one actor may be ego")

    def param_spec(self, name: str) -> ParamSpec:
        for p in self.params:
            if p.name == name:
                return p
        raise ParamError(f"unknown parameter {name!r}")

    def resolve_params(self, overrides: dict | None = None) -> dict:
        values = {p.name: p.default for p in self.params}
        for k, v in (overrides or {}).items():
            spec = self.param_spec(k)
            values[k] = spec.validate(v)
        return values

    def build_world(self, values: dict) -> World:
        wd = self.world
        roads = [
            LocalRoad(np.asarray(r["points"], dtype=float), int(r["lanes"]), bool(r["oneway"]))
            for r in wd["roads"]
        ]
        buildings = [
            LocalBuilding(np.asarray(b["footprint"], dtype=float), float(b["height_m"]))
            for b in wd.get("buildings", [])
        ]
        # world occluder boxes double as rendered prisms so the camera and the
        # visibility query agree about what exists
        for box in self.occluders:
            buildings.append(LocalBuilding(box.footprint(), box.z_hi))
        data = WorldData(roads=roads, buildings=buildings, seed=0, lane_width=float(wd.get("lane_width", 3.7)))
        world = World(RoadNetwork.from_world(data), buildings=data.buildings, time_of_day0=self.time_of_day)
        for raw in self.actors:
            spec = _substitute(raw, values)
            actor = make_actor(
                spec["id"],
                spec.get("kind", "car"),
                x=spec.get("x", 0.0),
                y=spec.get("y", 0.0),
                heading=math.radians(spec.get("heading_deg", 0.0)),
                speed=spec.get("speed", 0.0),
                dims=spec.get("dims"),
                color=spec.get("color"),
            )
            world.add_actor(actor, _make_driver(spec.get("driver", {"type": "constant"})), ego=bool(spec.get("ego")))
        return world


def _make_driver(d: dict):
    kind = d.get("type", "constant")
    if kind == "constant":
        return ConstantDriver()
    if kind == "path":
        return PathDriver(d["waypoints"], float(d["speed"]), trigger=d.get("trigger"))
    if kind == "affordance":
        if float(d.get("attentive", 1.0)) < 0.5:
            # an inattentive driver holds course and speed no matter what
            return ConstantDriver()
        overrides = {k: float(v) for k, v in d.get("gains", {}).items()}
        gains = replace(ControllerGains(), **overrides)
        return AffordanceDriver(gains, allow_lane_changes=bool(d.get("allow_lane_changes", False)))
    raise ScenarioError(f"unknown driver type {kind!r}")


# -- point runs -------------------------------------------------------------------


@dataclass
class _StepState:
    t: float
    actors: list  # (id, x, y, heading, speed) in world actor order


def _blend(a0, a1, f: float):
    dh = (a1[3] - a0[3] + math.pi) % (2 * math.pi) - math.pi
    return (
        a0[0],
        a0[1] + f * (a1[1] - a0[1]),
        a0[2] + f * (a1[2] - a0[2]),
        a0[3] + f * dh,
        a0[4] + f * (a1[4] - a0[4]),
    )


@dataclass
class PointReport:
    """Verdicts and series for one parameter assignment."""

    scenario_id: str
    params: dict
    seed: int
    duration_s: float
    first_visibility_time: float | None
    ttc_at_first_visibility: float | None
    gap_at_first_visibility: float | None
    speed_at_first_visibility: float | None
    min_distance: float
    contact_threshold: float
    collision: bool
    collision_time: float | None
    stoppable: bool | None
    decel: float
    reaction_s: float
    visibility_series: dict  # {"t": [...], viewpoint: [...]} at the 250 ms cadence

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "params": self.params,
            "seed": self.seed,
            "duration_s": self.duration_s,
            "first_visibility_time": self.first_visibility_time,
            "ttc_at_first_visibility": self.ttc_at_first_visibility,
            "gap_at_first_visibility": self.gap_at_first_visibility,
            "speed_at_first_visibility": self.speed_at_first_visibility,
            "min_distance": self.min_distance,
            "contact_threshold": self.contact_threshold,
            "collision": self.collision,
            "collision_time": self.collision_time,
            "stoppable": self.stoppable,
            "decel": self.decel,
            "reaction_s": self.reaction_s,
            "visibility_series": self.visibility_series,
        }


@dataclass
class PointResult:
    report: PointReport
    trace: Trace


class _PointRunner:
    """Steps one world and answers visibility questions about recorded states."""

    def __init__(self, scenario: Scenario, values: dict, seed: int):
        self.scenario = scenario
        self.seed = seed
        self.world = scenario.build_world(values)
        self.templates = {a.actor_id: a for a in self.world.actors}
        self.analysis_target = scenario.analysis.get("target")
        self.effective_target = {
            v.name: (v.target or self.analysis_target) for v in scenario.viewpoints
        }
        self.states: list[_StepState] = []
        self.vis_steps: dict[str, list[float]] = {v.name: [] for v in scenario.viewpoints}

    def _record(self) -> None:
        state = _StepState(
            t=self.world.clock.sim_time,
            actors=[(a.actor_id, a.x, a.y, a.heading, a.speed) for a in self.world.actors],
        )
        self.states.append(state)
        for v in self.scenario.viewpoints:
            target = self.effective_target[v.name]
            if target is not None:
                self.vis_steps[v.name].append(self.vis_of(state, v, target))

    def _actors_of(self, state: _StepState) -> dict:
        return {
            aid: replace(self.templates[aid], x=x, y=y, heading=hd, speed=sp)
            for aid, x, y, hd, sp in state.actors
        }

    def vis_of(self, state: _StepState, viewpoint: Viewpoint, target_id: str) -> float:
        lookup = self._actors_of(state)
        boxes = list(self.scenario.occluders)
        if viewpoint.occluders:
            holder = lookup[viewpoint.actor]
            boxes.extend(b.placed(holder.x, holder.y, holder.heading) for b in viewpoint.occluders)
        holder = lookup[viewpoint.actor]
        fwd, left, up = viewpoint.eye
        c, s = math.cos(holder.heading), math.sin(holder.heading)
        eye = (holder.x + c * fwd - s * left, holder.y + s * fwd + c * left, up)
        return actor_visibility(eye, lookup[target_id], boxes)

    def state_between(self, idx: int, f: float) -> _StepState:
        lo, hi = self.states[idx - 1], self.states[idx]
        return _StepState(
            t=lo.t + f * DT,
            actors=[_blend(a0, a1, f) for a0, a1 in zip(lo.actors, hi.actors)],
        )

    def refine_visibility_onset(self, viewpoint: Viewpoint, target_id: str, idx: int) -> float:
        """Bisect the onset inside (t[idx-1], t[idx]]; positions lerp within a step."""
        lo, hi = 0.0, 1.0
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if self.vis_of(self.state_between(idx, mid), viewpoint, target_id) > 0.0:
                hi = mid
            else:
                lo = mid
        return self.states[idx - 1].t + hi * DT

    def refine_contact(self, a_id: str, b_id: str, step_time: float) -> float:
        idx = min(max(int(round(step_time / DT)), 1), len(self.states) - 1)

        def hit(f: float) -> bool:
            lookup = self._actors_of(self.state_between(idx, f))
            return detect_collision(lookup[a_id], lookup[b_id])[0]

        if hit(0.0):
            return self.states[idx - 1].t
        lo, hi = 0.0, 1.0
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            if hit(mid):
                hi = mid
            else:
                lo = mid
        return self.states[idx - 1].t + hi * DT


def run_point(scenario: Scenario, overrides: dict | None = None, seed: int = 0) -> PointResult:
    """One deterministic episode at a single parameter assignment.

    First visibility is the first instant the analysis viewpoint sees any of
    the target's 64 surface samples. stoppable compares the ego-to-target gap
    at that moment against reaction distance plus braking distance
    v^2 / (2 decel).
    """
    values = scenario.resolve_params(overrides)
    runner = _PointRunner(scenario, values, seed)
    world = runner.world
    analysis = scenario.analysis
    decel = float(analysis.get("decel", 6.0))
    reaction_s = float(analysis.get("reaction_s", 1.5))
    analysis_vp = {v.name: v for v in scenario.viewpoints}.get(analysis.get("viewpoint"))
    target_id = runner.analysis_target

    n_steps = int(round(scenario.duration_s / DT))
    sample_every = int(round(SAMPLE_INTERVAL_S / DT))

    ego = world.ego()
    target = runner.templates.get(target_id) if target_id else None

    runner._record()
    snapshots = [take_snapshot(world, 0, SAMPLE_INTERVAL_S)]
    min_dist = math.inf
    if ego is not None and target is not None:
        min_dist = float(math.hypot(ego.x - target.x, ego.y - target.y))

    for k in range(1, n_steps + 1):
        world.step()
        runner._record()
        if ego is not None and target is not None:
            min_dist = min(min_dist, float(math.hypot(ego.x - target.x, ego.y - target.y)))
        if k % sample_every == 0:
            snapshots.append(take_snapshot(world, k // sample_every, SAMPLE_INTERVAL_S))

    trace = Trace(
        seed=seed,
        snapshots=snapshots,
        collisions=list(world.collisions),
        collided=world.collided,
        time_of_day0=world.clock.time_of_day0,
    )

    first_vis = None
    ttc_at_vis = None
    gap_at_vis = None
    speed_at_vis = None
    stoppable = None
    contact_threshold = 0.0
    collision_time = None

    if ego is not None and target is not None:
        contact_threshold = ego.bounding_radius() + target.bounding_radius()
        hits = [c for c in world.collisions if {c.actor_a, c.actor_b} == {ego.actor_id, target.actor_id}]
        if hits:
            collision_time = runner.refine_contact(ego.actor_id, target.actor_id, hits[0].t)

        if analysis_vp is not None:
            series = runner.vis_steps[analysis_vp.name]
            idx = next((i for i, frac in enumerate(series) if frac > 0.0), None)
            if idx is not None:
                if idx == 0:
                    first_vis = 0.0
                    state = runner.states[0]
                else:
                    first_vis = runner.refine_visibility_onset(analysis_vp, target_id, idx)
                    state = runner.state_between(idx, (first_vis - runner.states[idx - 1].t) / DT)
                at = runner._actors_of(state)
                e, tg = at[ego.actor_id], at[target_id]
                ttc_at_vis = time_to_collision(
                    e.position(), actor_velocity(e), e.bounding_radius(),
                    tg.position(), actor_velocity(tg), tg.bounding_radius(),
                )
                gap_at_vis = float(math.hypot(e.x - tg.x, e.y - tg.y)) - contact_threshold
                speed_at_vis = e.speed
                stoppable = gap_at_vis > speed_at_vis**2 / (2.0 * decel) + speed_at_vis * reaction_s

    report = PointReport(
        scenario_id=scenario.scenario_id,
        params=values,
        seed=seed,
        duration_s=scenario.duration_s,
        first_visibility_time=first_vis,
        ttc_at_first_visibility=ttc_at_vis,
        gap_at_first_visibility=gap_at_vis,
        speed_at_first_visibility=speed_at_vis,
        min_distance=min_dist if math.isfinite(min_dist) else 0.0,
        contact_threshold=contact_threshold,
        collision=collision_time is not None,
        collision_time=collision_time,
        stoppable=stoppable,
        decel=decel,
        reaction_s=reaction_s,
        visibility_series=_series_at_samples(runner.vis_steps, n_steps, sample_every),
    )
    return PointResult(report=report, trace=trace)


def _series_at_samples(vis_steps: dict, n_steps: int, sample_every: int) -> dict:
    idx = list(range(0, n_steps + 1, sample_every))
    out: dict = {"t": [round(i * DT, 10) for i in idx]}
    for name, series in vis_steps.items():
        if series:
            out[name] = [series[i] for i in idx]
    return out


# -- sweeps -----------------------------------------------------------------------


@dataclass
class SweepReport:
    scenario_id: str
    param: str
    values: list
    seed: int
    rows: list  # PointReport dicts ordered by grid index

    COLUMNS = (
        "value",
        "first_visibility_time",
        "ttc_at_first_visibility",
        "gap_at_first_visibility",
        "min_distance",
        "collision",
        "collision_time",
        "stoppable",
    )

    def to_dict(self) -> dict:
        return {
            "scenario_id": self.scenario_id,
            "param": self.param,
            "values": self.values,
            "seed": self.seed,
            "rows": self.rows,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.COLUMNS)
        for value, row in zip(self.values, self.rows):
            writer.writerow([value] + [row[c] for c in self.COLUMNS[1:]])
        return buf.getvalue()


def run_sweep(scenario: Scenario, param: str | None = None, values=None,
              overrides: dict | None = None, seed: int = 0) -> SweepReport:
    """One deterministic run per grid value; report rows in grid order."""
    name = param or scenario.sweep_default
    if not name:
        raise ParamError("scenario declares no default sweep parameter")
    spec = scenario.param_spec(name)
    if values is None:
        values = spec.grid()
    values = [spec.validate(v) for v in values]
    if not values:
        raise ParamError(f"sweep over {name!r} has no grid points")

    rows = []
    for v in values:
        point = dict(overrides or {})
        point[name] = v
        rows.append(run_point(scenario, point, seed=seed).report.to_dict())
    return SweepReport(scenario_id=scenario.scenario_id, param=name, values=values, seed=seed, rows=rows)


# -- built-ins --------------------------------------------------------------------


def _data_dir():
    from importlib import resources

    return resources.files("drivelab") / "data"


def builtin_scenario_ids() -> list[str]:
    return sorted(
        entry.name[: -len(".json")] for entry in _data_dir().iterdir() if entry.name.endswith(".json")
    )


def load_builtin(scenario_id: str) -> Scenario:
    path = _data_dir() / f"{scenario_id}.json"
    if not path.is_file():
        raise ScenarioError(f"no built-in scenario named {scenario_id!r}")
    return Scenario.from_json(path.read_text(encoding="utf-8"))


def load_scenario_file(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as f:
        return Scenario.from_json(f.read())
