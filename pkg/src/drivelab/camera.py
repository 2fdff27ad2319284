"""Pinhole camera and a deterministic painter's-algorithm rasterizer.

The rig sits 0.5 m ahead of the vehicle origin and 1.2 m up, looking along
the heading with a 60 degree horizontal field of view onto a 280 x 210 RGB
image. Projection returns continuous pixel coordinates with the optical axis
at (140.0, 105.0); points are rasterized by rounding half down. The world is
2.5D (flat ground, vertical prisms and boxes), so the horizon is exactly the
principal row: rows above it are sky, below it ground.

Rendering is flat shaded and byte-deterministic: ground-plane faces (road,
then markings) draw first, then every vertical face sorted far to near by
mean camera depth. Building roofs are never rasterized; the camera is below
every roof so they cannot be seen from outside the prism. Scene brightness is
a continuous, 24 h periodic function of time of day, so night frames are
uniformly darker than noon frames.

The canonical frame file is a binary P6 pixmap; PNG export exists for humans.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .roads import FORWARD, REVERSE

WIDTH = 280
HEIGHT = 210
PRINCIPAL = (140.0, 105.0)

NEAR_PLANE = 0.15
DRAW_DISTANCE = 250.0
MARKING_HALF_WIDTH = 0.06
DASH_ON = 3.0
DASH_PERIOD = 9.0

SKY_RGB = (125, 170, 235)
GROUND_RGB = (98, 118, 84)
ASPHALT_RGB = (58, 58, 62)
WHITE_LINE_RGB = (222, 222, 222)
YELLOW_LINE_RGB = (205, 175, 60)
BUILDING_PALETTE = ((148, 140, 132), (132, 128, 138), (160, 148, 126), (120, 124, 128))

MIN_BRIGHTNESS = 0.15


class EmptyFrameSetError(ValueError):
    """Channel statistics were requested for an empty collection of frames."""


@dataclass(frozen=True)
class CameraRig:
    forward_offset: float = 0.5
    up_offset: float = 1.2
    hfov_deg: float = 60.0

    def __post_init__(self):
        if not 20.0 <= self.hfov_deg <= 120.0:
            raise ValueError("hfov_deg out of supported range [20, 120]")

    @property
    def focal_px(self) -> float:
        return (WIDTH / 2.0) / math.tan(math.radians(self.hfov_deg) / 2.0)

    def eye(self, ego_x: float, ego_y: float, ego_heading: float) -> np.ndarray:
        return np.array(
            [
                ego_x + self.forward_offset * math.cos(ego_heading),
                ego_y + self.forward_offset * math.sin(ego_heading),
                self.up_offset,
            ]
        )


def round_half_down(x: float) -> int:
    """Round to the nearest integer with .5 going down: 2.5 -> 2, -0.5 -> -1."""
    return int(math.ceil(x - 0.5))


def _camera_axes(heading: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    forward = np.array([math.cos(heading), math.sin(heading), 0.0])
    right = np.array([math.sin(heading), -math.cos(heading), 0.0])
    up = np.array([0.0, 0.0, 1.0])
    return right, up, forward


def to_camera(rig: CameraRig, ego_pose, points) -> np.ndarray:
    """World points (N, 3) -> camera coordinates (N, 3) as (right, up, depth)."""
    x, y, heading = ego_pose
    eye = rig.eye(x, y, heading)
    right, up, forward = _camera_axes(heading)
    rel = np.atleast_2d(np.asarray(points, dtype=float)) - eye
    return np.stack([rel @ right, rel @ up, rel @ forward], axis=1)


def project(rig: CameraRig, ego_pose, point) -> tuple[float, float, float] | None:
    """Continuous (u, v, depth) of one world point, or None at/behind the camera plane."""
    cam = to_camera(rig, ego_pose, [point])[0]
    if cam[2] <= 1e-12:
        return None
    f = rig.focal_px
    u = PRINCIPAL[0] + f * cam[0] / cam[2]
    v = PRINCIPAL[1] - f * cam[1] / cam[2]
    return (float(u), float(v), float(cam[2]))


def unproject(rig: CameraRig, ego_pose, u: float, v: float, depth: float) -> np.ndarray:
    """Inverse of project at a known depth; used to verify reprojection."""
    if depth <= 0:
        raise ValueError("depth must be positive")
    f = rig.focal_px
    cam = np.array([(u - PRINCIPAL[0]) * depth / f, (PRINCIPAL[1] - v) * depth / f, depth])
    x, y, heading = ego_pose
    right, up, forward = _camera_axes(heading)
    return rig.eye(x, y, heading) + cam[0] * right + cam[1] * up + cam[2] * forward


def daylight(time_of_day_s: float) -> float:
    """Scene brightness in [0.15, 1]: continuous, 24 h periodic, darkest overnight.

    Follows a clipped sine of the sun's hour angle: 0.15 before 06:00 and
    after 18:00, peaking at 1.0 at noon.
    """
    tod = time_of_day_s % 86400.0
    sun = math.sin(math.pi * (tod - 6.0 * 3600.0) / (12.0 * 3600.0))
    return MIN_BRIGHTNESS + (1.0 - MIN_BRIGHTNESS) * max(0.0, sun)


def _shade(rgb, factor: float) -> np.ndarray:
    return np.clip(np.asarray(rgb, dtype=float) * factor, 0.0, 255.0)


def _fill_convex(frame: np.ndarray, pts: np.ndarray, rgb: np.ndarray) -> None:
    """Fill a convex polygon given in continuous pixel coordinates.

    A pixel belongs to the polygon when its center (col + 0.5, row + 0.5)
    satisfies every edge half-plane test.
    """
    if len(pts) < 3:
        return
    x = pts[:, 0]
    y = pts[:, 1]
    area2 = np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))
    if area2 == 0.0:
        return
    if area2 < 0.0:
        pts = pts[::-1]

    col_min = max(int(math.floor(pts[:, 0].min() - 0.5)), 0)
    col_max = min(int(math.ceil(pts[:, 0].max() - 0.5)), WIDTH - 1)
    row_min = max(int(math.floor(pts[:, 1].min() - 0.5)), 0)
    row_max = min(int(math.ceil(pts[:, 1].max() - 0.5)), HEIGHT - 1)
    if col_min > col_max or row_min > row_max:
        return

    cols = np.arange(col_min, col_max + 1) + 0.5
    rows = np.arange(row_min, row_max + 1) + 0.5
    px = cols[None, :]
    py = rows[:, None]
    inside = np.ones((len(rows), len(cols)), dtype=bool)
    n = len(pts)
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        inside &= (x2 - x1) * (py - y1) - (y2 - y1) * (px - x1) >= 0.0
        if not inside.any():
            return
    region = frame[row_min : row_max + 1, col_min : col_max + 1]
    region[inside] = np.round(rgb).astype(np.uint8)


def _clip_near(cam_pts: np.ndarray, near: float = NEAR_PLANE) -> np.ndarray:
    """Sutherland-Hodgman clip of a polygon in camera space against depth >= near."""
    out: list[np.ndarray] = []
    n = len(cam_pts)
    for i in range(n):
        cur = cam_pts[i]
        nxt = cam_pts[(i + 1) % n]
        cur_in = cur[2] >= near
        nxt_in = nxt[2] >= near
        if cur_in:
            out.append(cur)
        if cur_in != nxt_in:
            t = (near - cur[2]) / (nxt[2] - cur[2])
            out.append(cur + t * (nxt - cur))
    return np.asarray(out) if out else np.empty((0, 3))


def _project_cam(rig: CameraRig, cam_pts: np.ndarray) -> np.ndarray:
    f = rig.focal_px
    u = PRINCIPAL[0] + f * cam_pts[:, 0] / cam_pts[:, 2]
    v = PRINCIPAL[1] - f * cam_pts[:, 1] / cam_pts[:, 2]
    return np.stack([u, v], axis=1)


def _draw_face(frame: np.ndarray, rig: CameraRig, ego_pose, verts3, rgb) -> None:
    cam = to_camera(rig, ego_pose, verts3)
    if np.all(cam[:, 2] < NEAR_PLANE):
        return
    clipped = _clip_near(cam)
    if len(clipped) < 3:
        return
    _fill_convex(frame, _project_cam(rig, clipped), rgb)


def _marking_laterals(seg) -> list[tuple[float, str, bool]]:
    """(lateral offset in the forward frame, color key, dashed) for every painted line."""
    out: list[tuple[float, str, bool]] = []
    if seg.oneway:
        offsets = seg.marking_offsets(FORWARD)
        for i, off in enumerate(offsets):
            edge = i == 0 or i == len(offsets) - 1
            out.append((float(off), "white", not edge))
        return out
    n_f = seg.lane_count(FORWARD)
    n_r = seg.lane_count(REVERSE)
    for k in range(0, n_f + 1):
        lat = k * seg.lane_width
        if k == 0:
            out.append((0.0, "yellow", False))
        else:
            out.append((lat, "white", k != n_f))
    for k in range(1, n_r + 1):
        out.append((-k * seg.lane_width, "white", k != n_r))
    return out


def _dash_intervals(s0: float, s1: float, dashed: bool) -> list[tuple[float, float]]:
    if not dashed:
        return [(s0, s1)]
    out = []
    k = math.floor(s0 / DASH_PERIOD)
    while k * DASH_PERIOD < s1:
        a = max(s0, k * DASH_PERIOD)
        b = min(s1, k * DASH_PERIOD + DASH_ON)
        if b > a:
            out.append((a, b))
        k += 1
    return out


def _ground_faces(network, eye_xy: np.ndarray, brightness: float):
    """Road surface quads, then marking quads, all at z = 0."""
    road_faces = []
    marking_faces = []
    for seg in network.segments:
        half_width = seg.lanes * seg.lane_width / 2.0
        laterals = _marking_laterals(seg)
        for i in range(len(seg.points) - 1):
            a = seg.points[i]
            b = seg.points[i + 1]
            mid = 0.5 * (a + b)
            if np.hypot(*(mid - eye_xy)) > DRAW_DISTANCE + seg._piece_len[i]:
                continue
            d = seg._piece_dir[i]
            nrm = np.array([d[1], -d[0]])
            ext = 0.3 * d  # overlap pieces slightly so kinks leave no gaps
            quad = [
                (*(a - ext + half_width * nrm), 0.0),
                (*(b + ext + half_width * nrm), 0.0),
                (*(b + ext - half_width * nrm), 0.0),
                (*(a - ext - half_width * nrm), 0.0),
            ]
            road_faces.append((np.asarray(quad), _shade(ASPHALT_RGB, brightness)))

            s0 = float(seg._cum[i])
            s1 = float(seg._cum[i + 1])
            for lat, color_key, dashed in laterals:
                rgb = WHITE_LINE_RGB if color_key == "white" else YELLOW_LINE_RGB
                for da, db in _dash_intervals(s0, s1, dashed):
                    pa = a + (da - s0) * d + lat * nrm
                    pb = a + (db - s0) * d + lat * nrm
                    quad = [
                        (*(pa + MARKING_HALF_WIDTH * nrm), 0.0),
                        (*(pb + MARKING_HALF_WIDTH * nrm), 0.0),
                        (*(pb - MARKING_HALF_WIDTH * nrm), 0.0),
                        (*(pa - MARKING_HALF_WIDTH * nrm), 0.0),
                    ]
                    marking_faces.append((np.asarray(quad), _shade(rgb, brightness)))
    return road_faces + marking_faces


def _prism_wall_faces(footprint: np.ndarray, height: float, rgb, eye_xy, brightness: float):
    faces = []
    n = len(footprint)
    for i in range(n):
        a = footprint[i]
        b = footprint[(i + 1) % n]
        mid = 0.5 * (a + b)
        if np.hypot(*(mid - eye_xy)) > DRAW_DISTANCE:
            continue
        edge = b - a
        norm = math.hypot(*edge)
        if norm == 0.0:
            continue
        facing = 0.78 + 0.22 * abs(edge[1]) / norm
        verts = np.array(
            [
                (a[0], a[1], 0.0),
                (b[0], b[1], 0.0),
                (b[0], b[1], height),
                (a[0], a[1], height),
            ]
        )
        faces.append((verts, _shade(rgb, brightness * facing)))
    return faces


def _box_faces(actor, brightness: float):
    """Five faces of an actor's box (bottom skipped), flat shaded per side."""
    c, s = math.cos(actor.heading), math.sin(actor.heading)
    rot = np.array([[c, -s], [s, c]])
    hl, hw = actor.half_length, actor.half_width
    top = 2.0 * actor.half_height
    base = np.array([actor.x, actor.y])
    corner2 = {
        "fr": base + rot @ np.array([hl, -hw]),
        "fl": base + rot @ np.array([hl, hw]),
        "br": base + rot @ np.array([-hl, -hw]),
        "bl": base + rot @ np.array([-hl, hw]),
    }

    def quad(keys, z_pairs):
        return np.array([(corner2[k][0], corner2[k][1], z) for k, z in zip(keys, z_pairs)])

    faces = []
    shades = {"front": 1.0, "back": 0.92, "left": 0.85, "right": 0.85, "top": 1.08}
    faces.append((quad(("fl", "fr", "fr", "fl"), (0, 0, top, top)), shades["front"]))
    faces.append((quad(("br", "bl", "bl", "br"), (0, 0, top, top)), shades["back"]))
    faces.append((quad(("bl", "fl", "fl", "bl"), (0, 0, top, top)), shades["left"]))
    faces.append((quad(("fr", "br", "br", "fr"), (0, 0, top, top)), shades["right"]))
    faces.append((quad(("fl", "fr", "br", "bl"), (top, top, top, top)), shades["top"]))
    return [(verts, _shade(actor.color, brightness * f)) for verts, f in faces]


def render(rig: CameraRig, network, buildings, snapshot, extra_prisms=()) -> np.ndarray:
    """Rasterize one snapshot from the ego camera into a (210, 280, 3) uint8 frame.

    ``extra_prisms`` takes (footprint (K,2), height, rgb) triples for scene
    furniture such as occluder boxes. A pure function of its arguments: the
    same snapshot renders to identical bytes every time.
    """
    ego = next(a for a in snapshot.actors if a.actor_id == snapshot.ego_id)
    ego_pose = (ego.x, ego.y, ego.heading)
    eye_xy = np.array([ego.x, ego.y])
    b = daylight(snapshot.time_of_day)

    frame = np.empty((HEIGHT, WIDTH, 3), dtype=np.uint8)
    horizon = int(PRINCIPAL[1])
    frame[:horizon] = np.round(_shade(SKY_RGB, b)).astype(np.uint8)
    frame[horizon:] = np.round(_shade(GROUND_RGB, b)).astype(np.uint8)

    for verts, rgb in _ground_faces(network, eye_xy, b):
        _draw_face(frame, rig, ego_pose, verts, rgb)

    solid = []
    for i, bld in enumerate(buildings):
        rgb = BUILDING_PALETTE[i % len(BUILDING_PALETTE)]
        solid.extend(_prism_wall_faces(np.asarray(bld.footprint), bld.height_m, rgb, eye_xy, b))
    for footprint, height, rgb in extra_prisms:
        solid.extend(_prism_wall_faces(np.asarray(footprint, dtype=float), height, rgb, eye_xy, b))
    for actor in snapshot.actors:
        if actor.actor_id == snapshot.ego_id:
            continue
        if np.hypot(actor.x - ego.x, actor.y - ego.y) > DRAW_DISTANCE:
            continue
        solid.extend(_box_faces(actor, b))

    order = []
    for idx, (verts, rgb) in enumerate(solid):
        cam = to_camera(rig, ego_pose, verts)
        if np.all(cam[:, 2] < NEAR_PLANE):
            continue
        order.append((float(np.mean(cam[:, 2])), idx))
    order.sort(key=lambda t: (-t[0], t[1]))
    for _, idx in order:
        verts, rgb = solid[idx]
        _draw_face(frame, rig, ego_pose, verts, rgb)
    return frame


# --- frame files and statistics ----------------------------------------------


def frame_to_ppm_bytes(frame: np.ndarray) -> bytes:
    if frame.dtype != np.uint8 or frame.ndim != 3 or frame.shape[2] != 3:
        raise ValueError("frame must be (H, W, 3) uint8")
    header = f"P6\n{frame.shape[1]} {frame.shape[0]}\n255\n".encode("ascii")
    return header + frame.tobytes()


def write_ppm(frame: np.ndarray, path) -> None:
    with open(path, "wb") as f:
        f.write(frame_to_ppm_bytes(frame))


def read_ppm(path) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P6"):
        raise ValueError("not a binary P6 pixmap")
    fields: list[bytes] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    w, h, maxval = (int(f) for f in fields)
    if maxval != 255:
        raise ValueError("only maxval 255 pixmaps are supported")
    pixels = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos)
    return pixels.reshape(h, w, 3).copy()


def frame_to_png_bytes(frame: np.ndarray) -> bytes:
    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(frame, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def downsample(frame: np.ndarray, factor: int = 4) -> np.ndarray:
    """Block-mean downsample; rows that do not fill a block are dropped.

    The default maps 280 x 210 frames to the learner's 70 x 52 input.
    """
    h = (frame.shape[0] // factor) * factor
    w = (frame.shape[1] // factor) * factor
    x = frame[:h, :w].astype(np.float64)
    return x.reshape(h // factor, factor, w // factor, factor, 3).mean(axis=(1, 3))


def channel_means(frames) -> np.ndarray:
    """Per-channel scalar means over a stack of frames. Empty input is an error."""
    arr = np.asarray(frames, dtype=np.float64)
    if arr.size == 0:
        raise EmptyFrameSetError("cannot compute channel means of an empty frame set")
    return arr.reshape(-1, 3).mean(axis=0)


def mean_subtract(frames, means=None) -> tuple[np.ndarray, np.ndarray]:
    """Center frames per channel; returns (centered, means used)."""
    arr = np.asarray(frames, dtype=np.float64)
    if means is None:
        means = channel_means(arr)
    means = np.asarray(means, dtype=np.float64)
    return arr - means.reshape((1,) * (arr.ndim - 1) + (3,)), means
