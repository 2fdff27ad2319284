"""Independent reference implementations used to freeze expected test values.

Everything here is deliberately written the slow, obvious way (per-piece
scalar math, dense time stepping, dense ray sampling) and shares no code with
the package. When a test compares the package against one of these, the two
sides were authored separately.
"""
from __future__ import annotations

import math

import numpy as np


def _wrap_deg(a: float) -> float:
    a = math.fmod(a, 360.0)
    if a > 180.0:
        a -= 360.0
    elif a <= -180.0:
        a += 360.0
    return a


def _project_polyline(points, p):
    """Closest point on a polyline by per-piece clamped projection.

    Returns (dist, s, lateral, tangent) in the polyline's forward frame,
    lateral positive to the right of travel. Ties go to the earliest piece.
    """
    px, py = float(p[0]), float(p[1])
    best = None
    s_before = 0.0
    for i in range(len(points) - 1):
        ax, ay = points[i]
        bx, by = points[i + 1]
        dx, dy = bx - ax, by - ay
        seg_len = math.hypot(dx, dy)
        t = ((px - ax) * dx + (py - ay) * dy) / (seg_len * seg_len)
        t = min(1.0, max(0.0, t))
        qx, qy = ax + t * dx, ay + t * dy
        dist = math.hypot(px - qx, py - qy)
        if best is None or dist < best[0] - 1e-15:
            tx, ty = dx / seg_len, dy / seg_len
            lateral = (px - qx) * ty - (py - qy) * tx
            best = (dist, s_before + t * seg_len, lateral, (tx, ty))
        s_before += seg_len
    return best


def _polyline_length(points) -> float:
    return sum(
        math.hypot(points[i + 1][0] - points[i][0], points[i + 1][1] - points[i][1])
        for i in range(len(points) - 1)
    )


def _marking_offsets(lanes: int, oneway: bool, lane_width: float, direction: int):
    if oneway:
        return [(k - lanes / 2.0) * lane_width for k in range(lanes + 1)]
    n_dir = math.ceil(lanes / 2) if direction == 1 else lanes // 2
    return [k * lane_width for k in range(n_dir + 1)]


def _lane_index(offsets, lateral: float) -> int:
    # last marking at or left of the lateral, clamped into a real lane
    idx = 0
    for k, off in enumerate(offsets):
        if lateral >= off:
            idx = k
    return min(idx, len(offsets) - 2)


def oracle_locate(segments, position, heading_deg, radius=30.0):
    """Brute-force pose lookup over a list of road dicts.

    Each segment dict: {"points": [(x, y), ...], "lanes": int, "oneway": bool,
    "lane_width": float}. Returns None when nothing is within the radius,
    otherwise (seg_idx, direction, lane_index, s, lateral, tangent_deg) in the
    direction frame.
    """
    best = None
    for idx, seg in enumerate(segments):
        proj = _project_polyline(seg["points"], position)
        if proj is None:
            continue
        if best is None or proj[0] < best[1][0] - 1e-15:
            best = (idx, proj)
    if best is None or best[1][0] > radius:
        return None
    idx, (dist, s, lateral, (tx, ty)) = best
    seg = segments[idx]
    if seg["oneway"]:
        direction = 1
    else:
        hx, hy = math.cos(math.radians(heading_deg)), math.sin(math.radians(heading_deg))
        direction = 1 if hx * tx + hy * ty >= 0.0 else -1
    if direction == -1:
        s = _polyline_length(seg["points"]) - s
        lateral = -lateral
        tx, ty = -tx, -ty
    offsets = _marking_offsets(seg["lanes"], seg["oneway"], seg["lane_width"], direction)
    lane = _lane_index(offsets, lateral)
    return idx, direction, lane, s, lateral, math.degrees(math.atan2(ty, tx))


def oracle_affordances(segments, position, heading_deg, obstructions=(), d_max=60.0):
    """Eight affordances the slow way; returns {name: value or None}."""
    located = oracle_locate(segments, position, heading_deg)
    if located is None:
        return None
    idx, direction, lane, s, lateral, tangent_deg = located
    seg = segments[idx]
    offsets = _marking_offsets(seg["lanes"], seg["oneway"], seg["lane_width"], direction)
    n_lanes = len(offsets) - 1

    out = {
        "angle": _wrap_deg(heading_deg - tangent_deg),
        "lane_L": abs(lateral - offsets[lane]),
        "lane_R": abs(offsets[lane + 1] - lateral),
        "lane_LL": abs(lateral - offsets[lane - 1]) if lane >= 1 else None,
        "lane_RR": abs(offsets[lane + 2] - lateral) if lane + 2 <= n_lanes else None,
        "car_L": None,
        "car_M": None,
        "car_R": None,
    }

    length = _polyline_length(seg["points"])
    slot_lane = {"car_L": lane - 1, "car_M": lane, "car_R": lane + 1}
    for obs in obstructions:
        proj = _project_polyline(seg["points"], obs)
        if proj is None:
            continue
        _, s_o, lat_o, _ = proj
        if s_o <= 1e-9 or s_o >= length - 1e-9:
            continue  # projection pinned to a segment end: not on this road
        if direction == -1:
            s_o = length - s_o
            lat_o = -lat_o
        ds = s_o - s
        if not (1e-9 < ds <= d_max):
            continue
        for slot, k in slot_lane.items():
            if k < 0 or k >= n_lanes:
                continue
            if offsets[k] <= lat_o < offsets[k + 1]:
                if out[slot] is None or ds < out[slot]:
                    out[slot] = ds
    return out


def network_to_dicts(network):
    """Adapter so the oracle consumes plain data, not package objects."""
    return [
        {
            "points": [tuple(map(float, p)) for p in seg.points],
            "lanes": seg.lanes,
            "oneway": seg.oneway,
            "lane_width": seg.lane_width,
        }
        for seg in network.segments
    ]


# -- collision ---------------------------------------------------------------

def oracle_rect_overlap(a_corners, b_corners) -> bool:
    """Convex polygon intersection via shapely, including touching contact."""
    from shapely.geometry import Polygon

    pa = Polygon(a_corners)
    pb = Polygon(b_corners)
    if not pa.intersects(pb):
        return False
    # SAT with a strict threshold treats exact touching as no collision
    return pa.intersection(pb).area > 1e-12 or pa.distance(pb) < -1.0


# -- time to collision -------------------------------------------------------

def oracle_ttc_stepping(p_a, v_a, r_a, p_b, v_b, r_b, horizon=60.0, dt=1e-4):
    """First time the discs touch under constant velocities, by dense stepping.

    Vectorized over the whole time grid; returns None when no contact occurs
    within the horizon. Refined by bisection inside the first contact step so
    the answer is good to far below dt.
    """
    t = np.arange(0.0, horizon + dt, dt)
    dp = np.asarray(p_b, dtype=float) - np.asarray(p_a, dtype=float)
    dv = np.asarray(v_b, dtype=float) - np.asarray(v_a, dtype=float)
    rel = dp[None, :] + t[:, None] * dv[None, :]
    dist = np.hypot(rel[:, 0], rel[:, 1])
    touch = dist <= (r_a + r_b)
    if not np.any(touch):
        return None
    i = int(np.argmax(touch))
    if i == 0:
        return 0.0
    lo, hi = t[i - 1], t[i]

    def gap(tt):
        rx = dp[0] + tt * dv[0]
        ry = dp[1] + tt * dv[1]
        return math.hypot(rx, ry) - (r_a + r_b)

    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- visibility --------------------------------------------------------------

def _ray_hits_box(eye, target, box) -> bool:
    """Slab test for the segment eye->target against one axis-aligned-in-yaw box.

    box: dict with center (x, y, z), half (hx, hy, hz), yaw_deg.
    """
    ex, ey, ez = eye
    tx, ty, tz = target
    cx, cy, cz = box["center"]
    hx, hy, hz = box["half"]
    yaw = math.radians(box.get("yaw_deg", 0.0))
    c, s = math.cos(yaw), math.sin(yaw)

    def to_box(px, py, pz):
        rx, ry = px - cx, py - cy
        return (c * rx + s * ry, -s * rx + c * ry, pz - cz)

    ox, oy, oz = to_box(ex, ey, ez)
    gx, gy, gz = to_box(tx, ty, tz)
    dx, dy, dz = gx - ox, gy - oy, gz - oz

    t0, t1 = 0.0, 1.0
    for o, d, h in ((ox, dx, hx), (oy, dy, hy), (oz, dz, hz)):
        if abs(d) < 1e-15:
            if abs(o) > h:
                return False
            continue
        ta = (-h - o) / d
        tb = (h - o) / d
        if ta > tb:
            ta, tb = tb, ta
        t0 = max(t0, ta)
        t1 = min(t1, tb)
        if t0 > t1:
            return False
    return True


def oracle_visibility_dense(eye, actor, occluders, n=1_000_000, seed=0):
    """Visible fraction by uniform random sampling of the actor's side surface.

    Sampling matches the package's parameterization: perimeter position u of
    the footprint rectangle times height v, area-uniform because every side
    face shares the actor's height.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.uniform(0.0, 1.0, n)
    v = rng.uniform(0.0, 1.0, n)

    hl = actor["half_length"]
    hw = actor["half_width"]
    h = actor["height"]
    cx, cy = actor["center"]
    yaw = math.radians(actor.get("yaw_deg", 0.0))
    cth, sth = math.cos(yaw), math.sin(yaw)

    # rectangle perimeter walk, corners in local frame
    corners = [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)]
    side_len = [2 * hl, 2 * hw, 2 * hl, 2 * hw]
    perim = sum(side_len)
    edges = np.cumsum([0.0] + side_len)

    d = u * perim
    visible = 0
    for i in range(n):
        di = d[i]
        side = int(np.searchsorted(edges, di, side="right")) - 1
        side = min(side, 3)
        f = (di - edges[side]) / side_len[side]
        x0, y0 = corners[side]
        x1, y1 = corners[(side + 1) % 4]
        lx = x0 + f * (x1 - x0)
        ly = y0 + f * (y1 - y0)
        px = cx + cth * lx - sth * ly
        py = cy + sth * lx + cth * ly
        pz = v[i] * h
        blocked = any(_ray_hits_box(eye, (px, py, pz), box) for box in occluders)
        if not blocked:
            visible += 1
    return visible / n


# -- learner helpers ---------------------------------------------------------

def finite_difference_gradient(loss_fn, params, eps=1e-6):
    """Central differences over a flat float64 parameter vector."""
    params = np.asarray(params, dtype=float)
    grad = np.zeros_like(params)
    for i in range(params.size):
        bumped = params.copy()
        bumped[i] += eps
        up = loss_fn(bumped)
        bumped[i] -= 2 * eps
        down = loss_fn(bumped)
        grad[i] = (up - down) / (2 * eps)
    return grad


def naive_conv2d(x, w, b, stride):
    """Direct quadruple-loop valid convolution, one image."""
    h, wd, cin = x.shape
    kh, kw, _, cout = w.shape
    oh = (h - kh) // stride + 1
    ow = (wd - kw) // stride + 1
    out = np.zeros((oh, ow, cout))
    for i in range(oh):
        for j in range(ow):
            patch = x[i * stride : i * stride + kh, j * stride : j * stride + kw, :]
            for co in range(cout):
                out[i, j, co] = np.sum(patch * w[:, :, :, co]) + b[co]
    return out
