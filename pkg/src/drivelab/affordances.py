"""Exact driving affordances and their bounded encoding.

Eight variables describe the scene from the subject vehicle's point of view,
in this fixed order:

    angle    heading error vs. the road tangent, degrees, positive when the
             vehicle points counterclockwise of the road
    car_L    arc-length gap to the nearest obstruction ahead in the adjacent
             left lane, meters (center to center)
    car_M    same, own lane
    car_R    same, adjacent right lane
    lane_LL  distance to the second marking on the left
    lane_L   distance to the adjacent marking on the left
    lane_R   distance to the adjacent marking on the right
    lane_RR  distance to the second marking on the right

A variable is either active (it has a value) or inactive (the thing it
measures does not exist: no such lane, or no obstruction within range).
angle, lane_L and lane_R are always active for an on-road pose.

Encoding maps active values affinely into [-0.9, 0.9] and writes the
sentinel 1.1 for inactive entries. The sentinel sits outside the reach of a
tanh output on purpose: a model that must regress it can approach but never
hit it, so any batch containing an inactive target keeps a strictly positive
loss floor. Decoding treats anything above 0.99 as inactive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .roads import FORWARD, LanePose, RoadNetwork

VARIABLES = ("angle", "car_L", "car_M", "car_R", "lane_LL", "lane_L", "lane_R", "lane_RR")
N_VARIABLES = len(VARIABLES)

ANGLE, CAR_L, CAR_M, CAR_R, LANE_LL, LANE_L, LANE_R, LANE_RR = range(8)
ALWAYS_ACTIVE = (ANGLE, LANE_L, LANE_R)
CAR_SLOTS = (CAR_L, CAR_M, CAR_R)

INACTIVE_ENCODED = 1.1
INACTIVE_THRESHOLD = 0.99
ENCODED_SPAN = (-0.9, 0.9)

D_MAX_DEFAULT = 60.0


def wrap_degrees(a: float) -> float:
    """Wrap an angle in degrees to (-180, 180]."""
    w = math.fmod(a + 180.0, 360.0)
    if w <= 0.0:
        w += 360.0
    return w - 180.0


@dataclass
class AffordanceVector:
    """Values plus activity flags; inactive entries hold NaN."""

    values: np.ndarray  # (8,) float
    active: np.ndarray  # (8,) bool

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.active = np.asarray(self.active, dtype=bool)
        if self.values.shape != (N_VARIABLES,) or self.active.shape != (N_VARIABLES,):
            raise ValueError("affordance vector must have 8 values and 8 flags")

    def __getattr__(self, name: str):
        try:
            i = VARIABLES.index(name)
        except ValueError:
            raise AttributeError(name) from None
        return float(self.values[i])

    def is_active(self, name: str) -> bool:
        return bool(self.active[VARIABLES.index(name)])

    def as_dict(self) -> dict:
        return {
            name: (float(self.values[i]) if self.active[i] else None)
            for i, name in enumerate(VARIABLES)
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AffordanceVector":
        values = np.full(N_VARIABLES, np.nan)
        active = np.zeros(N_VARIABLES, dtype=bool)
        for i, name in enumerate(VARIABLES):
            v = d.get(name)
            if v is not None:
                values[i] = float(v)
                active[i] = True
        return cls(values, active)


@dataclass(frozen=True)
class NormalizationRanges:
    """Physical [lo, hi] per variable; the affine encode maps them onto [-0.9, 0.9]."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != N_VARIABLES or len(self.hi) != N_VARIABLES:
            raise ValueError("ranges must cover all 8 variables")
        for name, a, b in zip(VARIABLES, self.lo, self.hi):
            if not a < b:
                raise ValueError(f"range for {name} must have lo < hi")

    @classmethod
    def default(cls) -> "NormalizationRanges":
        return cls(
            lo=(-90.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
            hi=(90.0, D_MAX_DEFAULT, D_MAX_DEFAULT, D_MAX_DEFAULT, 9.25, 5.55, 5.55, 9.25),
        )

    def lo_array(self) -> np.ndarray:
        return np.asarray(self.lo, dtype=float)

    def hi_array(self) -> np.ndarray:
        return np.asarray(self.hi, dtype=float)

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi)}

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationRanges":
        return cls(lo=tuple(float(v) for v in d["lo"]), hi=tuple(float(v) for v in d["hi"]))


def apply_limits(av: AffordanceVector, ranges: NormalizationRanges) -> AffordanceVector:
    """Apply the range rule ahead of encoding.

    angle and lane distances clamp into [lo, hi]; car gaps beyond hi flip to
    inactive (an obstruction farther than D_max is the same as none).
    """
    lo = ranges.lo_array()
    hi = ranges.hi_array()
    values = av.values.copy()
    active = av.active.copy()
    for i in range(N_VARIABLES):
        if not active[i]:
            continue
        if i in CAR_SLOTS and values[i] > hi[i]:
            active[i] = False
            values[i] = np.nan
            continue
        values[i] = min(max(values[i], lo[i]), hi[i])
    return AffordanceVector(values, active)


def encode(av: AffordanceVector, ranges: NormalizationRanges) -> np.ndarray:
    """Encode to the 8-vector the learner regresses.

    Active: y = -0.9 + 1.8 * (x - lo) / (hi - lo). Inactive: exactly 1.1.
    NaN in an active slot is an error.
    """
    limited = apply_limits(av, ranges)
    lo = ranges.lo_array()
    hi = ranges.hi_array()
    out = np.full(N_VARIABLES, INACTIVE_ENCODED)
    for i in range(N_VARIABLES):
        if not limited.active[i]:
            continue
        x = limited.values[i]
        if not np.isfinite(x):
            raise ValueError(f"active affordance {VARIABLES[i]} is not finite")
        out[i] = ENCODED_SPAN[0] + (ENCODED_SPAN[1] - ENCODED_SPAN[0]) * (x - lo[i]) / (hi[i] - lo[i])
    return out


def decode(encoded, ranges: NormalizationRanges) -> AffordanceVector:
    """Invert encode. Any entry above the 0.99 threshold decodes as inactive."""
    y = np.asarray(encoded, dtype=float)
    if y.shape != (N_VARIABLES,):
        raise ValueError("encoded affordances must have 8 entries")
    lo = ranges.lo_array()
    hi = ranges.hi_array()
    values = np.full(N_VARIABLES, np.nan)
    active = y <= INACTIVE_THRESHOLD
    span = ENCODED_SPAN[1] - ENCODED_SPAN[0]
    for i in range(N_VARIABLES):
        if active[i]:
            values[i] = lo[i] + (y[i] - ENCODED_SPAN[0]) * (hi[i] - lo[i]) / span
    return AffordanceVector(values, active)


@dataclass(frozen=True)
class Obstruction:
    """Anything with road presence the car scan should see."""

    x: float
    y: float


def compute_affordances(
    network: RoadNetwork,
    position,
    heading: float,
    obstructions=(),
    d_max: float = D_MAX_DEFAULT,
    pose: LanePose | None = None,
) -> AffordanceVector:
    """Exact affordances for a pose against the network and a set of obstructions.

    Obstructions are anything with an (x, y) position: other vehicles or
    pedestrians alike; whether one occupies a lane is decided purely by its
    lateral position against that lane's markings. Gaps are center-to-center
    arc length along the subject's segment; something abreast or behind
    (gap <= 0) or whose projection clamps to a segment end does not count.

    Raises OffRoadError (from locate) when the position is off the network.
    """
    if pose is None:
        pose = network.locate(position, heading)
    seg = network.segments[pose.segment_id]
    offsets = seg.marking_offsets(pose.direction)
    n_lanes = seg.lane_count(pose.direction)
    k = pose.lane_index
    lam = pose.lateral

    values = np.full(N_VARIABLES, np.nan)
    active = np.zeros(N_VARIABLES, dtype=bool)

    road_heading = math.atan2(pose.tangent[1], pose.tangent[0])
    values[ANGLE] = wrap_degrees(math.degrees(heading - road_heading))
    active[ANGLE] = True

    values[LANE_L] = abs(lam - offsets[k])
    values[LANE_R] = abs(offsets[k + 1] - lam)
    active[LANE_L] = active[LANE_R] = True
    if k - 1 >= 0:
        values[LANE_LL] = abs(lam - offsets[k - 1])
        active[LANE_LL] = True
    if k + 2 <= n_lanes:
        values[LANE_RR] = abs(offsets[k + 2] - lam)
        active[LANE_RR] = True

    # Lane occupancy scan over the three relevant lanes.
    lane_for_slot = {CAR_L: k - 1, CAR_M: k, CAR_R: k + 1}
    best = {slot: None for slot in CAR_SLOTS}
    eps = 1e-9
    for ob in obstructions:
        p = (ob.x, ob.y) if isinstance(ob, Obstruction) else (ob[0], ob[1])
        _, s_fwd, lat_fwd, piece, t = seg.project(p)
        # Skip anything hanging off the segment ends.
        if s_fwd <= eps or s_fwd >= seg.length - eps:
            continue
        if pose.direction == FORWARD:
            s_o, lam_o = s_fwd, lat_fwd
        else:
            s_o, lam_o = seg.length - s_fwd, -lat_fwd
        ds = s_o - pose.s
        if ds <= eps or ds > d_max:
            continue
        for slot, lane in lane_for_slot.items():
            if not 0 <= lane < n_lanes:
                continue
            if offsets[lane] <= lam_o < offsets[lane + 1]:
                if best[slot] is None or ds < best[slot]:
                    best[slot] = ds
    for slot in CAR_SLOTS:
        lane = lane_for_slot[slot]
        if best[slot] is not None:
            values[slot] = best[slot]
            active[slot] = True

    return AffordanceVector(values, active)
