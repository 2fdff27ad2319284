"""Polyline road model: lane markings, arc-length parameterization, pose lookup.

Conventions used everywhere downstream:

* A segment's "forward" direction (+1) is its digitization order; "reverse"
  (-1) only exists on two-way roads.
* Lateral offsets are measured from the road centerline, positive to the
  right of the direction of travel.
* On a one-way road with n lanes the n+1 marking offsets are (k - n/2) * w
  for k = 0..n. On a two-way road each travel direction keeps to its own side
  of the centerline: the digitization direction gets ceil(n/2) lanes at
  offsets 0, w, ..., and the reverse direction gets floor(n/2); markings
  across the centerline never belong to the other direction.
* Lane indices are 0-based from the leftmost lane of the travel direction. A
  point exactly on a marking belongs to the lane on the right of travel.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MIN_POINT_SPACING_M = 0.5
LANE_WIDTH_RANGE = (2.5, 4.5)
LOCATE_RADIUS_M = 30.0

FORWARD = 1
REVERSE = -1


class OffRoadError(ValueError):
    """Position is farther than the locate radius from every centerline."""


@dataclass(frozen=True)
class LanePose:
    """Road-relative pose: where on the network, and how it is oriented."""

    segment_id: int
    direction: int  # FORWARD or REVERSE
    lane_index: int
    s: float  # arc length along the travel direction, meters
    lateral: float  # signed offset from centerline, positive right of travel
    tangent: tuple[float, float]  # unit tangent of the travel direction


class RoadSegment:
    """One digitized centerline with a lane count and traffic orientation.

    Vertices closer than 0.5 m to their predecessor are dropped at build time
    (endpoints are kept); a segment needs at least two surviving vertices.
    """

    def __init__(self, seg_id: int, centerline, lanes: int, oneway: bool, lane_width: float = 3.7):
        pts = np.asarray(centerline, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("centerline must be an (M, 2) array")
        if not 2 <= lanes <= 5:
            raise ValueError(f"lanes must be in [2, 5], got {lanes}")
        if not LANE_WIDTH_RANGE[0] <= lane_width <= LANE_WIDTH_RANGE[1]:
            raise ValueError(f"lane_width must be in {LANE_WIDTH_RANGE}, got {lane_width}")

        kept = [pts[0]]
        for p in pts[1:]:
            if np.hypot(*(p - kept[-1])) >= MIN_POINT_SPACING_M:
                kept.append(p)
        if len(kept) < 2:
            raise ValueError("centerline has fewer than 2 points at least 0.5 m apart")

        self.seg_id = int(seg_id)
        self.points = np.asarray(kept)
        self.lanes = int(lanes)
        self.oneway = bool(oneway)
        self.lane_width = float(lane_width)

        d = np.diff(self.points, axis=0)
        self._piece_len = np.hypot(d[:, 0], d[:, 1])
        self._piece_dir = d / self._piece_len[:, None]
        self._cum = np.concatenate(([0.0], np.cumsum(self._piece_len)))
        self.length = float(self._cum[-1])

    # -- lane bookkeeping --

    def lane_count(self, direction: int) -> int:
        if self.oneway:
            if direction != FORWARD:
                raise ValueError("one-way segment has no reverse direction")
            return self.lanes
        return math.ceil(self.lanes / 2) if direction == FORWARD else self.lanes // 2

    def marking_offsets(self, direction: int) -> np.ndarray:
        """Marking offsets for one travel direction, positive right of travel.

        Strictly increasing, spaced exactly lane_width apart, lane_count+1
        entries.
        """
        n = self.lane_count(direction)
        w = self.lane_width
        if self.oneway:
            return (np.arange(self.lanes + 1) - self.lanes / 2.0) * w
        return np.arange(n + 1) * w

    # -- geometry along the forward parameterization --

    def point_at(self, s_forward: float) -> np.ndarray:
        s = min(max(s_forward, 0.0), self.length)
        i = min(int(np.searchsorted(self._cum, s, side="right")) - 1, len(self._piece_len) - 1)
        i = max(i, 0)
        return self.points[i] + (s - self._cum[i]) * self._piece_dir[i]

    def tangent_at(self, s_forward: float) -> np.ndarray:
        s = min(max(s_forward, 0.0), self.length)
        i = min(int(np.searchsorted(self._cum, s, side="right")) - 1, len(self._piece_len) - 1)
        i = max(i, 0)
        return self._piece_dir[i]

    def project(self, point) -> tuple[float, float, float, int, float]:
        """Nearest point on the centerline.

        Returns (distance, s_forward, lateral_forward, piece_index, piece_t).
        Lateral is signed in the forward frame. Ties between pieces go to the
        lower index.
        """
        p = np.asarray(point, dtype=float)
        a = self.points[:-1]
        rel = p[None, :] - a
        t = np.einsum("ij,ij->i", rel, self._piece_dir) / self._piece_len
        t = np.clip(t, 0.0, 1.0)
        proj = a + (t * self._piece_len)[:, None] * self._piece_dir
        d2 = np.sum((p[None, :] - proj) ** 2, axis=1)
        i = int(np.argmin(d2))
        tx, ty = self._piece_dir[i]
        off = p - proj[i]
        lateral = off[0] * ty - off[1] * tx  # dot with right normal (ty, -tx)
        s = float(self._cum[i] + t[i] * self._piece_len[i])
        return (float(math.sqrt(d2[i])), s, float(lateral), i, float(t[i]))


def _direction_frame(seg: RoadSegment, s_fwd: float, lateral_fwd: float, direction: int):
    if direction == FORWARD:
        return s_fwd, lateral_fwd
    return seg.length - s_fwd, -lateral_fwd


class RoadNetwork:
    """A bag of independent segments with pose lookup against all of them."""

    def __init__(self, segments: list[RoadSegment]):
        if not segments:
            raise ValueError("network needs at least one segment")
        self.segments = list(segments)

    @classmethod
    def from_world(cls, world) -> "RoadNetwork":
        if not world.roads:
            raise ValueError("world contains no roads")
        segs = [
            RoadSegment(i, r.points, r.lanes, r.oneway, world.lane_width)
            for i, r in enumerate(world.roads)
        ]
        return cls(segs)

    def total_length(self) -> float:
        return float(sum(s.length for s in self.segments))

    def nearest_segment(self, position) -> tuple[RoadSegment, float, float, float, int]:
        """Best (segment, distance, s_forward, lateral_forward, piece) across the network."""
        best = None
        for seg in self.segments:
            dist, s, lat, piece, _ = seg.project(position)
            if best is None or dist < best[1]:
                best = (seg, dist, s, lat, piece)
        return best

    def locate(self, position, heading: float) -> LanePose:
        """Lane pose of a world position, given the subject's heading (radians).

        The travel direction on a two-way road is whichever direction's
        tangent aligns better with the heading (ties go forward); one-way
        roads always use the digitization direction. Raises OffRoadError
        beyond 30 m from every centerline.
        """
        seg, dist, s_fwd, lat_fwd, piece = self.nearest_segment(position)
        if dist > LOCATE_RADIUS_M:
            raise OffRoadError(f"position {tuple(np.asarray(position))} is {dist:.1f} m from the nearest road")
        # the tangent must come from the projecting piece: at a corner the
        # arc-length lookup would flip to the next piece while s and lateral
        # still refer to this one
        tangent_fwd = seg._piece_dir[piece]
        if seg.oneway:
            direction = FORWARD
        else:
            h = np.array([math.cos(heading), math.sin(heading)])
            direction = FORWARD if float(np.dot(h, tangent_fwd)) >= 0.0 else REVERSE

        s, lateral = _direction_frame(seg, s_fwd, lat_fwd, direction)
        tangent = tangent_fwd * direction
        offsets = seg.marking_offsets(direction)
        k = int(np.searchsorted(offsets, lateral, side="right")) - 1
        k = min(max(k, 0), seg.lane_count(direction) - 1)
        return LanePose(
            segment_id=seg.seg_id,
            direction=direction,
            lane_index=k,
            s=s,
            lateral=lateral,
            tangent=(float(tangent[0]), float(tangent[1])),
        )

    def place(self, segment_id: int, direction: int, s: float, lateral: float) -> tuple[np.ndarray, float]:
        """Inverse of locate for test and spawn use: pose -> (position, heading)."""
        seg = self.segments[segment_id]
        s_fwd = s if direction == FORWARD else seg.length - s
        base = seg.point_at(s_fwd)
        tangent = seg.tangent_at(s_fwd) * direction
        right = np.array([tangent[1], -tangent[0]])
        pos = base + lateral * right
        return pos, float(math.atan2(tangent[1], tangent[0]))

    def lane_center_lateral(self, segment_id: int, direction: int, lane_index: int) -> float:
        seg = self.segments[segment_id]
        offsets = seg.marking_offsets(direction)
        if not 0 <= lane_index < seg.lane_count(direction):
            raise ValueError(f"lane_index {lane_index} out of range")
        return float(0.5 * (offsets[lane_index] + offsets[lane_index + 1]))

    def next_node_direction(self, pose: LanePose, lookahead: float = 8.0) -> np.ndarray:
        """Unit tangent of the travel direction a lookahead ahead of the pose.

        The query point clamps to the segment end, so the final piece's
        direction is returned when the lookahead runs off the road.
        """
        if lookahead < 0:
            raise ValueError("lookahead must be non-negative")
        seg = self.segments[pose.segment_id]
        s = min(max(pose.s + lookahead, 0.0), seg.length)
        s_fwd = s if pose.direction == FORWARD else seg.length - s
        return seg.tangent_at(s_fwd) * pose.direction
