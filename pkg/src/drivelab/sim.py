"""Fixed-step scene simulation.

The clock ticks at dt = 0.05 s (20 Hz) and snapshots are taken every fifth
step, i.e. every 250 ms of sim time, including t = 0. Scene time of day runs
30x faster than sim time, modulo 24 h, and is computed from the step counter
rather than accumulated, so snapshot timestamps are exact.

All actors move kinematically. Vehicles integrate a bicycle model (position
with the pre-step speed and heading, then heading, then speed); scripted
actors advance by arc length along their polyline. Controls for a step are
all computed against the pre-step state, so actor order cannot leak into the
dynamics. Collisions are detected with an exact separating-axis test on the
oriented footprints and recorded, never resolved: overlapping actors keep
moving and the episode is flagged.

Everything random (spawn poses, traffic, time of day) comes from one PCG64
generator seeded by the episode config, making a trace a pure function of
(world, config, seed).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .affordances import AffordanceVector, compute_affordances
from .control import ControllerGains, lane_change_decision, speed_control, steer, KEEP, SHIFT_LEFT
from .geo import WorldData
from .roads import FORWARD, OffRoadError, REVERSE, RoadNetwork

DT = 0.05
TIME_SCALE = 30.0
DAY_S = 86400.0

CAR_DIMS = (4.5, 1.8, 1.5)  # length, width, height; documented assumption
TRUCK_DIMS = (16.0, 2.6, 4.0)
PED_DIMS = (0.5, 0.5, 1.8)
CAR_WHEELBASE = 2.7
TRUCK_WHEELBASE = 5.5

EGO_COLOR = (30, 110, 210)
TRAFFIC_COLORS = ((200, 45, 45), (235, 235, 235), (40, 40, 45), (230, 195, 50), (90, 160, 80))
TRUCK_COLOR = (245, 245, 245)
PED_COLOR = (220, 150, 110)


class WorldConfigError(ValueError):
    """The world cannot host an episode (for instance: no roads)."""


@dataclass
class Actor:
    actor_id: str
    kind: str  # "car" | "truck" | "pedestrian"
    x: float
    y: float
    heading: float
    speed: float
    half_length: float
    half_width: float
    half_height: float
    color: tuple[int, int, int]
    wheelbase: float = CAR_WHEELBASE

    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def velocity(self) -> np.ndarray:
        return self.speed * np.array([math.cos(self.heading), math.sin(self.heading)])

    def corners(self) -> np.ndarray:
        c, s = math.cos(self.heading), math.sin(self.heading)
        local = np.array(
            [
                [self.half_length, self.half_width],
                [self.half_length, -self.half_width],
                [-self.half_length, -self.half_width],
                [-self.half_length, self.half_width],
            ]
        )
        rot = np.array([[c, -s], [s, c]])
        return local @ rot.T + np.array([self.x, self.y])

    def bounding_radius(self) -> float:
        return math.hypot(self.half_length, self.half_width)


def make_actor(actor_id: str, kind: str, x=0.0, y=0.0, heading=0.0, speed=0.0, dims=None, color=None) -> Actor:
    defaults = {"car": (CAR_DIMS, CAR_WHEELBASE), "truck": (TRUCK_DIMS, TRUCK_WHEELBASE), "pedestrian": (PED_DIMS, 1.0)}
    if kind not in defaults:
        raise ValueError(f"unknown actor kind {kind!r}")
    base_dims, wheelbase = defaults[kind]
    length, width, height = dims if dims is not None else base_dims
    if color is None:
        color = {"car": TRAFFIC_COLORS[0], "truck": TRUCK_COLOR, "pedestrian": PED_COLOR}[kind]
    return Actor(
        actor_id=actor_id,
        kind=kind,
        x=float(x),
        y=float(y),
        heading=float(heading),
        speed=float(speed),
        half_length=length / 2.0,
        half_width=width / 2.0,
        half_height=height / 2.0,
        color=tuple(int(c) for c in color),
        wheelbase=wheelbase,
    )


def detect_collision(a: Actor, b: Actor) -> tuple[bool, float]:
    """Separating-axis test on the two oriented footprint rectangles.

    Returns (collided, penetration_depth); the depth is the smallest overlap
    across the four candidate axes, 0.0 when separated. Exact for rectangles.
    """
    ca = a.corners()
    cb = b.corners()
    axes = []
    for corners in (ca, cb):
        e1 = corners[1] - corners[0]
        e2 = corners[3] - corners[0]
        for e in (e1, e2):
            n = np.hypot(e[0], e[1])
            axes.append(e / n)
    penetration = math.inf
    for ax in axes:
        pa = ca @ ax
        pb = cb @ ax
        overlap = min(pa.max(), pb.max()) - max(pa.min(), pb.min())
        if overlap <= 0.0:
            return (False, 0.0)
        penetration = min(penetration, overlap)
    return (True, float(penetration))


@dataclass
class SimClock:
    time_of_day0: float
    steps: int = 0
    dt: float = DT

    @property
    def sim_time(self) -> float:
        return self.steps * self.dt

    @property
    def time_of_day(self) -> float:
        return (self.time_of_day0 + TIME_SCALE * self.sim_time) % DAY_S

    def time_of_day_at(self, t: float) -> float:
        return (self.time_of_day0 + TIME_SCALE * t) % DAY_S


# --- drivers -----------------------------------------------------------------


@dataclass(frozen=True)
class ControlCommand:
    steering: float
    accel: float


@dataclass(frozen=True)
class PlaceCommand:
    x: float
    y: float
    heading: float
    speed: float


class ConstantDriver:
    """Holds heading and speed; the inattentive scripted vehicle."""

    def control(self, world: "World", actor: Actor):
        return ControlCommand(0.0, 0.0)


class PathDriver:
    """Advances along a polyline at a set speed once its trigger fires.

    Triggers: None (immediately), {"type": "time", "t": seconds}, or
    {"type": "ttc", "seconds": x} which fires when the ego's projected time
    to reach the path start drops to x. The actor idles at the path start
    until then and stops at the path end.
    """

    def __init__(self, path, speed: float, trigger: dict | None = None):
        pts = np.asarray(path, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ValueError("path must be an (M>=2, 2) array")
        self.points = pts
        d = np.diff(pts, axis=0)
        self.piece_len = np.hypot(d[:, 0], d[:, 1])
        if np.any(self.piece_len <= 0):
            raise ValueError("path has zero-length pieces")
        self.piece_dir = d / self.piece_len[:, None]
        self.cum = np.concatenate(([0.0], np.cumsum(self.piece_len)))
        self.length = float(self.cum[-1])
        self.speed = float(speed)
        self.trigger = trigger
        self.started = trigger is None
        self.s = 0.0

    def _pose_at(self, s: float) -> tuple[float, float, float]:
        s = min(max(s, 0.0), self.length)
        i = min(int(np.searchsorted(self.cum, s, side="right")) - 1, len(self.piece_len) - 1)
        i = max(i, 0)
        p = self.points[i] + (s - self.cum[i]) * self.piece_dir[i]
        hd = math.atan2(self.piece_dir[i][1], self.piece_dir[i][0])
        return (float(p[0]), float(p[1]), hd)

    def _trigger_fired(self, world: "World") -> bool:
        t = self.trigger
        if t["type"] == "time":
            return world.clock.sim_time >= t["t"]
        if t["type"] == "ttc":
            ego = world.ego()
            if ego is None:
                return False
            h = np.array([math.cos(ego.heading), math.sin(ego.heading)])
            along = float(np.dot(self.points[0] - ego.position(), h))
            return along / max(ego.speed, 0.1) <= t["seconds"]
        raise ValueError(f"unknown trigger type {t['type']!r}")

    def control(self, world: "World", actor: Actor):
        if not self.started and self._trigger_fired(world):
            self.started = True
        if self.started and self.s < self.length:
            self.s = min(self.s + self.speed * world.clock.dt, self.length)
            x, y, hd = self._pose_at(self.s)
            moving = self.s < self.length
            return PlaceCommand(x, y, hd, self.speed if moving else 0.0)
        x, y, hd = self._pose_at(self.s)
        return PlaceCommand(x, y, hd, 0.0)


class AffordanceDriver:
    """Closed-loop lane keeping + gap keeping from exact affordances.

    Keeps one step of car_M memory to estimate the closing rate, and a lane
    bias used to execute shift decisions: the steering error is taken against
    lane center plus the bias until the lane index changes, then a cooldown
    holds further shifts.
    """

    def __init__(self, gains: ControllerGains | None = None, allow_lane_changes: bool = False):
        self.gains = gains or ControllerGains()
        self.allow_lane_changes = allow_lane_changes
        self._prev_car_m: float | None = None
        self._bias = 0.0
        self._bias_lane: int | None = None
        self._cooldown_until = -math.inf

    def control(self, world: "World", actor: Actor):
        try:
            pose = world.network.locate(actor.position(), actor.heading)
        except OffRoadError:
            self._prev_car_m = None
            return ControlCommand(0.0, -1.0)
        aff = compute_affordances(
            world.network,
            actor.position(),
            actor.heading,
            obstructions=[(o.x, o.y) for o in world.actors if o.actor_id != actor.actor_id],
            pose=pose,
        )

        closing = 0.0
        if aff.is_active("car_M") and self._prev_car_m is not None:
            closing = (self._prev_car_m - aff.car_M) / world.clock.dt
        self._prev_car_m = aff.car_M if aff.is_active("car_M") else None

        now = world.clock.sim_time
        if self._bias != 0.0 and pose.lane_index != self._bias_lane:
            self._bias = 0.0
            self._bias_lane = None
            self._cooldown_until = now + 5.0
        if self.allow_lane_changes and self._bias == 0.0 and now >= self._cooldown_until:
            decision = lane_change_decision(aff, self.gains)
            if decision != KEEP:
                seg = world.network.segments[pose.segment_id]
                w = seg.lane_width
                self._bias = -w if decision == SHIFT_LEFT else w
                self._bias_lane = pose.lane_index

        e = 0.5 * (aff.lane_L - aff.lane_R)
        raw = self.gains.k_angle * math.radians(aff.angle) - self.gains.k_offset * (e - self._bias)
        steering = min(max(raw, -0.5), 0.5)
        accel = speed_control(aff, actor.speed, self.gains, closing_rate=closing)
        return ControlCommand(steering, accel)


# --- world and episodes -------------------------------------------------------


@dataclass
class CollisionEvent:
    t: float
    actor_a: str
    actor_b: str
    penetration: float


class World:
    def __init__(self, network: RoadNetwork, buildings=(), time_of_day0: float = 43200.0):
        self.network = network
        self.buildings = list(buildings)
        self.actors: list[Actor] = []
        self.drivers: dict[str, object] = {}
        self.ego_id: str | None = None
        self.clock = SimClock(time_of_day0=float(time_of_day0))
        self.collisions: list[CollisionEvent] = []
        self.collided = False

    def add_actor(self, actor: Actor, driver, ego: bool = False) -> None:
        if any(a.actor_id == actor.actor_id for a in self.actors):
            raise ValueError(f"duplicate actor id {actor.actor_id!r}")
        self.actors.append(actor)
        self.drivers[actor.actor_id] = driver
        if ego:
            self.ego_id = actor.actor_id

    def ego(self) -> Actor | None:
        if self.ego_id is None:
            return None
        return next(a for a in self.actors if a.actor_id == self.ego_id)

    def step(self) -> None:
        commands = [(a, self.drivers[a.actor_id].control(self, a)) for a in self.actors]
        dt = self.clock.dt
        for actor, cmd in commands:
            if isinstance(cmd, PlaceCommand):
                actor.x, actor.y, actor.heading, actor.speed = cmd.x, cmd.y, cmd.heading, cmd.speed
                continue
            actor.x += actor.speed * math.cos(actor.heading) * dt
            actor.y += actor.speed * math.sin(actor.heading) * dt
            actor.heading += -(actor.speed / actor.wheelbase) * math.tan(cmd.steering) * dt
            actor.speed = max(0.0, actor.speed + cmd.accel * dt)
        self.clock.steps += 1
        for i in range(len(self.actors)):
            for j in range(i + 1, len(self.actors)):
                hit, depth = detect_collision(self.actors[i], self.actors[j])
                if hit:
                    self.collided = True
                    self.collisions.append(
                        CollisionEvent(
                            t=self.clock.sim_time,
                            actor_a=self.actors[i].actor_id,
                            actor_b=self.actors[j].actor_id,
                            penetration=depth,
                        )
                    )


@dataclass
class Snapshot:
    sample: int
    t: float
    time_of_day: float
    ego_id: str | None
    actors: list[Actor]
    affordances: AffordanceVector | None
    off_road: bool
    collided: bool

    def to_dict(self) -> dict:
        return {
            "sample": self.sample,
            "t": self.t,
            "time_of_day": self.time_of_day,
            "ego": self.ego_id,
            "off_road": self.off_road,
            "collided": self.collided,
            "affordances": None if self.affordances is None else self.affordances.as_dict(),
            "actors": [
                {
                    "id": a.actor_id,
                    "kind": a.kind,
                    "x": a.x,
                    "y": a.y,
                    "heading": a.heading,
                    "speed": a.speed,
                    "half_length": a.half_length,
                    "half_width": a.half_width,
                    "half_height": a.half_height,
                    "color": list(a.color),
                }
                for a in self.actors
            ],
        }


def take_snapshot(world: World, sample: int, interval_s: float) -> Snapshot:
    t = sample * interval_s
    affordances = None
    off_road = False
    ego = world.ego()
    if ego is not None:
        try:
            affordances = compute_affordances(
                world.network,
                ego.position(),
                ego.heading,
                obstructions=[(o.x, o.y) for o in world.actors if o.actor_id != ego.actor_id],
            )
        except OffRoadError:
            off_road = True
    return Snapshot(
        sample=sample,
        t=t,
        time_of_day=world.clock.time_of_day_at(t),
        ego_id=world.ego_id,
        actors=[replace(a) for a in world.actors],
        affordances=affordances,
        off_road=off_road,
        collided=world.collided,
    )


@dataclass
class Trace:
    seed: int
    snapshots: list[Snapshot]
    collisions: list[CollisionEvent]
    collided: bool
    time_of_day0: float

    def to_jsonl(self) -> str:
        return "".join(json.dumps(s.to_dict(), sort_keys=True) + "\n" for s in self.snapshots)

    def save_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.to_jsonl())


@dataclass(frozen=True)
class EpisodeConfig:
    seed: int = 0
    duration_s: float = 10.0
    sample_interval_s: float = 0.25
    traffic_density: float = 2.0  # vehicles per km of centerline
    spawn_lateral_jitter: float = 0.45
    spawn_heading_jitter_deg: float = 4.0
    ego_gains: ControllerGains = field(default_factory=ControllerGains)
    allow_lane_changes: bool = True

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")
        ratio = self.sample_interval_s / DT
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ValueError("sample_interval_s must be a positive multiple of the 0.05 s step")

    @property
    def steps_per_sample(self) -> int:
        return int(round(self.sample_interval_s / DT))


def episode_seed(base_seed: int, episode_index: int) -> int:
    """Stable per-episode seed derivation used by dataset generation."""
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=(episode_index,))
    return int(ss.generate_state(1, np.uint64)[0])


def _spawn_lane_pose(network: RoadNetwork, rng: np.random.Generator, margin: float = 10.0):
    lengths = np.array([s.length for s in network.segments])
    seg_idx = int(rng.choice(len(lengths), p=lengths / lengths.sum()))
    seg = network.segments[seg_idx]
    direction = FORWARD if seg.oneway else (FORWARD if rng.random() < 0.5 else REVERSE)
    lane = int(rng.integers(0, seg.lane_count(direction)))
    if seg.length > 2 * margin:
        s = float(rng.uniform(margin, seg.length - margin))
    else:
        s = seg.length / 2.0
    return seg, direction, lane, s


def build_episode_world(world_data: WorldData, cfg: EpisodeConfig) -> World:
    """Spawn the ego and traffic into a fresh world, all draws from the episode seed."""
    network = RoadNetwork.from_world(world_data)
    if network.total_length() <= 0:
        raise WorldConfigError("world roads have zero total length")
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    world = World(network, buildings=world_data.buildings, time_of_day0=float(rng.uniform(0.0, DAY_S)))

    seg, direction, lane, s = _spawn_lane_pose(network, rng)
    lane_center = network.lane_center_lateral(seg.seg_id, direction, lane)
    lateral = lane_center + float(rng.uniform(-cfg.spawn_lateral_jitter, cfg.spawn_lateral_jitter))
    pos, road_heading = network.place(seg.seg_id, direction, s, lateral)
    heading = road_heading + math.radians(
        float(rng.uniform(-cfg.spawn_heading_jitter_deg, cfg.spawn_heading_jitter_deg))
    )
    speed = float(rng.uniform(0.5, 0.9)) * cfg.ego_gains.v_desired
    ego = make_actor("ego", "car", pos[0], pos[1], heading, speed, color=EGO_COLOR)
    world.add_actor(ego, AffordanceDriver(cfg.ego_gains, allow_lane_changes=cfg.allow_lane_changes), ego=True)

    occupied = [(seg.seg_id, direction, lane, s)]
    n_traffic = int(round(cfg.traffic_density * network.total_length() / 1000.0))
    for i in range(n_traffic):
        placed = False
        for _ in range(20):
            tseg, tdir, tlane, ts = _spawn_lane_pose(network, rng, margin=5.0)
            if all(
                not (tseg.seg_id == oseg and tdir == odir and tlane == olane and abs(ts - os_) < 14.0)
                for oseg, odir, olane, os_ in occupied
            ):
                placed = True
                break
        if not placed:
            continue
        occupied.append((tseg.seg_id, tdir, tlane, ts))
        lane_center = network.lane_center_lateral(tseg.seg_id, tdir, tlane)
        tpos, theading = network.place(tseg.seg_id, tdir, ts, lane_center)
        tgains = ControllerGains(v_desired=float(rng.uniform(14.0, 26.0)))
        tspeed = float(rng.uniform(0.6, 0.95)) * tgains.v_desired
        color = TRAFFIC_COLORS[int(rng.integers(0, len(TRAFFIC_COLORS)))]
        car = make_actor(f"traffic_{i}", "car", tpos[0], tpos[1], theading, tspeed, color=color)
        world.add_actor(car, AffordanceDriver(tgains, allow_lane_changes=False))
    return world


def run_episode(world_data: WorldData, cfg: EpisodeConfig) -> Trace:
    """One seeded episode: spawn, step at 20 Hz, snapshot every 250 ms.

    A duration of 10 s at the default cadence yields exactly 41 snapshots
    (both endpoints included).
    """
    world = build_episode_world(world_data, cfg)
    return run_world(world, cfg)


def run_world(world: World, cfg: EpisodeConfig) -> Trace:
    """Step an already-built world on the snapshot cadence of ``cfg``."""
    n_samples = int(math.floor(cfg.duration_s / cfg.sample_interval_s + 1e-9))
    snapshots = [take_snapshot(world, 0, cfg.sample_interval_s)]
    for k in range(1, n_samples + 1):
        for _ in range(cfg.steps_per_sample):
            world.step()
        snapshots.append(take_snapshot(world, k, cfg.sample_interval_s))
    return Trace(
        seed=cfg.seed,
        snapshots=snapshots,
        collisions=list(world.collisions),
        collided=world.collided,
        time_of_day0=world.clock.time_of_day0,
    )
