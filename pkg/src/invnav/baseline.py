"""Decoupled comparison strategy: straight pre-planned path plus reactive avoidance.

The agent pure-pursues the start->target segment. When a return inside the
safety distance falls in the heading cone it stops and turns in place away
from the nearest such return, then drives straight for ``advance_time``
before rejoining the line. Speeds obey the same (v, omega) bounds as the
invariant-set controller.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .controller import ControlCommand, ControlGains
from .geometry import MeasurementTuple, Vec2, wrap_angle
from .scenario import BaselineParams


@dataclass
class BaselineMemory:
    advance_left: float = 0.0
    turning: bool = False


def _saturate(x: float, bound: float) -> float:
    return max(-bound, min(bound, x))


def lookahead_point(position: Vec2, start: Vec2, target: Vec2, lookahead: float) -> Vec2:
    seg = target - start
    length = seg.norm()
    if length == 0.0 or (target - position).norm() <= lookahead:
        return target
    s = (position - start).dot(seg) / length
    s = min(length, max(0.0, s) + lookahead)
    return start + seg * (s / length)


def baseline_step(
    position: Vec2,
    heading: float,
    start: Vec2,
    target: Vec2,
    measurements: Sequence[MeasurementTuple],
    d_max: float,
    radius: float,
    gains: ControlGains,
    params: BaselineParams,
    memory: BaselineMemory,
    period: float,
) -> ControlCommand:
    """One planning-period command for the decoupled strategy (mutates ``memory``)."""
    w_max = gains.omega_bound
    safe = radius + params.safety_gap
    blocking = [
        m for m in measurements
        if m.range < d_max and m.range < safe and abs(m.bearing) < params.cone_half_angle
    ]
    if blocking:
        nearest = min(blocking, key=lambda m: (m.range, m.bearing))
        # Turn away from the side of the nearest return; dead ahead turns right.
        direction = -1.0 if nearest.bearing >= 0.0 else 1.0
        memory.turning = True
        memory.advance_left = params.advance_time
        return ControlCommand(0.0, _saturate(direction * params.turn_rate, w_max))
    memory.turning = False
    if memory.advance_left > 0.0:
        memory.advance_left -= period
        return ControlCommand(gains.K1, 0.0)

    dist = (target - position).norm()
    look = lookahead_point(position, start, target, params.lookahead)
    to_look = look - position
    ld = to_look.norm()
    if ld == 0.0:
        return ControlCommand(0.0, 0.0)
    alpha = wrap_angle(to_look.angle() - heading)
    if abs(alpha) > params.align_angle:
        return ControlCommand(0.0, _saturate(2.0 * alpha, w_max))
    v = gains.K1 * math.tanh(dist)
    omega = _saturate(2.0 * v * math.sin(alpha) / ld, w_max)
    return ControlCommand(v, omega)
