"""Affordance-driven longitudinal and lateral control.

Steering convention: positive steering turns the wheel clockwise (rightward),
so the simulator integrates heading as theta += -(v / wheelbase) * tan(steer) * dt.
With angle positive when the vehicle points counterclockwise of the road and
e = (lane_L - lane_R) / 2 positive when right of lane center, the stabilizing
proportional law is

    steering = k_angle * angle_rad - k_offset * e

clamped to +/-0.5 rad: sitting right of center (e > 0) commands negative
steering, a leftward correction, and the angle term damps the rotation the
offset term induces.

Speed control is the intelligent-driver-model form. With a lead obstruction
(car_M active), gap s = car_M - vehicle_length and

    accel = a_max * (1 - (v / v0)^4 - (s*/s)^2)
    s*    = max(0, s_min + v*T + v*closing_rate / (2*sqrt(a_max*b_comfort)))

otherwise only the free-road term applies. closing_rate is the rate at which
the gap shrinks (v - v_lead); callers that cannot observe it pass 0, which
leaves the equilibrium-gap algebra untouched. Acceleration clamps to
[-6, +3] m/s^2. Both laws are pure functions of their arguments.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict

from .affordances import AffordanceVector

KEEP = "keep"
SHIFT_LEFT = "shift_left"
SHIFT_RIGHT = "shift_right"

STEER_CLAMP_RAD = 0.5
ACCEL_BOUNDS = (-6.0, 3.0)


@dataclass(frozen=True)
class ControllerGains:
    k_angle: float = 0.75
    k_offset: float = 0.08
    v_desired: float = 30.0
    headway_T: float = 1.5
    accel_max: float = 1.5
    decel_comfort: float = 2.0
    min_gap: float = 2.0
    vehicle_length: float = 4.5
    gap_threshold: float = 25.0  # lane change considered below this lead gap
    clear_threshold: float = 35.0  # target lane must be clear beyond this

    def __post_init__(self):
        if self.v_desired <= 0 or self.accel_max <= 0 or self.decel_comfort <= 0:
            raise ValueError("v_desired, accel_max and decel_comfort must be positive")
        if self.min_gap < 0 or self.headway_T < 0:
            raise ValueError("min_gap and headway_T must be non-negative")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ControllerGains":
        return cls(**json.loads(text))


@dataclass(frozen=True)
class ControlOutput:
    steering: float  # rad, positive = clockwise/right
    accel: float  # m/s^2


def steer(aff: AffordanceVector, gains: ControllerGains) -> float:
    if not (aff.is_active("angle") and aff.is_active("lane_L") and aff.is_active("lane_R")):
        raise ValueError("steer needs angle, lane_L and lane_R active")
    e = 0.5 * (aff.lane_L - aff.lane_R)
    raw = gains.k_angle * math.radians(aff.angle) - gains.k_offset * e
    return min(max(raw, -STEER_CLAMP_RAD), STEER_CLAMP_RAD)


def speed_control(
    aff: AffordanceVector, speed: float, gains: ControllerGains, closing_rate: float = 0.0
) -> float:
    if speed < 0:
        raise ValueError("speed must be non-negative")
    free = gains.accel_max * (1.0 - (speed / gains.v_desired) ** 4)
    if not aff.is_active("car_M"):
        accel = free
    else:
        s = aff.car_M - gains.vehicle_length
        if s <= 0.1:
            accel = ACCEL_BOUNDS[0]
        else:
            s_star = gains.min_gap + speed * gains.headway_T + speed * closing_rate / (
                2.0 * math.sqrt(gains.accel_max * gains.decel_comfort)
            )
            s_star = max(0.0, s_star)
            accel = gains.accel_max * (1.0 - (speed / gains.v_desired) ** 4 - (s_star / s) ** 2)
    return min(max(accel, ACCEL_BOUNDS[0]), ACCEL_BOUNDS[1])


def idm_equilibrium_gap(speed: float, gains: ControllerGains) -> float:
    """Closed-form steady-following gap (accel = 0, closing_rate = 0) at a given speed.

    Returns the bumper gap s; the matching car_M is s + vehicle_length.
    """
    if speed >= gains.v_desired:
        raise ValueError("no following equilibrium at or above the desired speed")
    s_star = gains.min_gap + speed * gains.headway_T
    return s_star / math.sqrt(1.0 - (speed / gains.v_desired) ** 4)


def lane_change_decision(aff: AffordanceVector, gains: ControllerGains) -> str:
    """Shift only when blocked and the target lane exists and is clear.

    Blocked: car_M active below gap_threshold. A target lane exists when the
    matching second marking (lane_LL / lane_RR) is active; it is clear when
    its car slot is inactive or beyond clear_threshold. Ties prefer keeping
    the lane, then shifting left.
    """
    if not aff.is_active("car_M") or aff.car_M >= gains.gap_threshold:
        return KEEP
    left_ok = aff.is_active("lane_LL") and (
        not aff.is_active("car_L") or aff.car_L > gains.clear_threshold
    )
    right_ok = aff.is_active("lane_RR") and (
        not aff.is_active("car_R") or aff.car_R > gains.clear_threshold
    )
    if left_ok:
        return SHIFT_LEFT
    if right_ok:
        return SHIFT_RIGHT
    return KEEP
