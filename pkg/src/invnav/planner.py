"""Planner function construction and greedy waypoint selection.

For a bearing ``u`` the candidate disc of radius ``d`` is centred ``d`` along
``u`` so the agent sits on its boundary. Growing ``d`` yields nested discs,
hence each measurement bans exactly the radii at or above a threshold and the
planner function is the smallest such threshold over all measurements.

A static point ``p`` kept ``m`` away from the disc bans ``d`` from

    (|p|^2 - m^2) / (2 (p.u + m))        (never, if p.u + m <= 0)

and a point sweeping the segment ``p -> p + s`` during one planning period
bans ``d`` from the minimum of that ratio along the segment.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .geometry import (
    ORIGIN,
    InvariantDisc,
    MeasurementTuple,
    Vec2,
    d_dir,
    d_min,
    wrap_angle,
)


class ConstraintMode(str, enum.Enum):
    NOMINAL = "nominal"
    WORST_BOTH = "worst_both"
    KNOWN_SPEED = "known_speed"
    KNOWN_DIR = "known_dir"


@dataclass(frozen=True)
class PlannerConfig:
    n_beams: int = 64
    f_p: float = 10.0
    d_max: float = 4.0
    epsilon: float = 1e-3
    mode: ConstraintMode = ConstraintMode.NOMINAL
    v_max: float = 0.3
    inflation: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mode", ConstraintMode(self.mode))
        if self.n_beams < 8:
            raise ValueError(f"n_beams must be >= 8, got {self.n_beams}")
        if not self.f_p > 0.0:
            raise ValueError(f"f_p must be positive, got {self.f_p}")
        if not (0.0 < self.epsilon < 0.1 * self.d_max):
            raise ValueError(f"epsilon {self.epsilon} must satisfy 0 < epsilon << d_max {self.d_max}")
        if self.v_max < 0.0:
            raise ValueError(f"v_max must be >= 0, got {self.v_max}")
        if self.inflation < 0.0:
            raise ValueError(f"inflation must be >= 0, got {self.inflation}")

    @property
    def period(self) -> float:
        return 1.0 / self.f_p

    @property
    def cap(self) -> float:
        return self.d_max / 2.0

    def bearings(self) -> np.ndarray:
        return beam_bearings(self.n_beams)


@dataclass(frozen=True)
class PlannerFunction:
    bearings: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        if self.bearings.shape != self.radii.shape:
            raise ValueError("bearings and radii differ in length")

    def __len__(self) -> int:
        return len(self.radii)

    @property
    def blocked(self) -> bool:
        return not np.any(self.radii > 0.0)


@dataclass(frozen=True)
class WaypointChoice:
    W: Vec2
    d: float
    theta_index: int
    latched: bool
    distance: float

    @property
    def disc(self) -> InvariantDisc:
        return InvariantDisc(self.W, self.d)


@functools.lru_cache(maxsize=32)
def _bearing_table(n: int) -> np.ndarray:
    table = np.array([wrap_angle(2.0 * math.pi * k / n) for k in range(n)])
    table.flags.writeable = False
    return table


def beam_bearings(n: int) -> np.ndarray:
    """Evenly spaced ego bearings, beam 0 straight ahead, wrapped into (-pi, pi]."""
    return _bearing_table(n).copy()


def is_free_space(m: MeasurementTuple, cfg: PlannerConfig) -> bool:
    return m.range >= cfg.d_max


@dataclass(frozen=True)
class EncodedConstraints:
    """Per-measurement kernel inputs: point, swept displacement, margin, slack."""

    px: np.ndarray
    py: np.ndarray
    sx: np.ndarray
    sy: np.ndarray
    margin: np.ndarray
    slack: np.ndarray

    def __len__(self) -> int:
        return len(self.px)


def encode(measurements: Sequence[MeasurementTuple], cfg: PlannerConfig) -> EncodedConstraints:
    """Reduce every mode's constraint to a (possibly swept) point with a margin.

    Free-space returns mark the sensing limit rather than a body: they take no
    inflation and no epsilon, so an empty scan yields exactly the d_max/2 cap.
    """
    n = len(measurements)
    rho = np.fromiter((m.range for m in measurements), float, n)
    theta = np.fromiter((m.bearing for m in measurements), float, n)
    vx = np.fromiter((m.velocity.x for m in measurements), float, n)
    vy = np.fromiter((m.velocity.y for m in measurements), float, n)
    px = rho * np.cos(theta)
    py = rho * np.sin(theta)
    body = rho < cfg.d_max
    speed = np.hypot(vx, vy)
    moving = body & (speed > 0.0)
    T = cfg.period
    slack = np.where(body, cfg.epsilon, 0.0)
    margin = np.where(body, cfg.inflation, 0.0)
    sx = np.zeros(n)
    sy = np.zeros(n)
    mode = cfg.mode
    if mode is ConstraintMode.NOMINAL:
        sx = np.where(moving, vx * T, 0.0)
        sy = np.where(moving, vy * T, 0.0)
    elif mode is ConstraintMode.WORST_BOTH:
        margin = margin + np.where(body, cfg.v_max * T, 0.0)
    elif mode is ConstraintMode.KNOWN_SPEED:
        margin = margin + np.where(body, speed * T, 0.0)
    elif mode is ConstraintMode.KNOWN_DIR:
        with np.errstate(divide="ignore", invalid="ignore"):
            sx = np.where(moving, vx / speed * cfg.v_max * T, 0.0)
            sy = np.where(moving, vy / speed * cfg.v_max * T, 0.0)
        margin = margin + np.where(body & ~moving, cfg.v_max * T, 0.0)
    return EncodedConstraints(px, py, sx, sy, margin, slack)


def radii_from_encoded(
    enc: EncodedConstraints, bearings: np.ndarray, cfg: PlannerConfig, workers: int = 1
) -> np.ndarray:
    return kernels.planner_radii(
        np.ascontiguousarray(bearings, dtype=np.float64),
        enc.px, enc.py, enc.sx, enc.sy, enc.margin, enc.slack,
        cfg.cap, cfg.epsilon, workers,
    )


def max_safe_radius(theta: float, measurements: Sequence[MeasurementTuple], cfg: PlannerConfig) -> float:
    """Largest admissible disc radius along ego bearing ``theta``; 0 when blocked."""
    enc = encode(measurements, cfg)
    return float(radii_from_encoded(enc, np.array([theta]), cfg)[0])


def build_planner_function(
    measurements: Sequence[MeasurementTuple],
    cfg: PlannerConfig,
    workers: int = 1,
    bearings: np.ndarray | None = None,
) -> PlannerFunction:
    if bearings is None:
        bearings = cfg.bearings()
    enc = encode(measurements, cfg)
    radii = radii_from_encoded(enc, bearings, cfg, workers)
    return PlannerFunction(np.asarray(bearings, dtype=float), radii)


def constraint_mode(m: MeasurementTuple, disc: InvariantDisc, cfg: PlannerConfig) -> bool:
    """Whether measurement ``m`` leaves ``disc`` admissible under ``cfg.mode``.

    Evaluated directly from point-to-disc distances; the kernel's closed form
    is checked against this predicate.
    """
    p = m.point
    infl = cfg.inflation
    T = cfg.period
    if is_free_space(m, cfg):
        return d_min(p, disc) >= 0.0
    speed = m.speed
    mode = cfg.mode
    if mode is ConstraintMode.NOMINAL:
        if speed == 0.0:
            return d_min(p, disc) > infl
        return d_dir(p, m.velocity * (1.0 / speed), disc.inflated(infl)) > speed * T
    if mode is ConstraintMode.WORST_BOTH:
        return d_min(p, disc) > cfg.v_max * T + infl
    if mode is ConstraintMode.KNOWN_SPEED:
        return d_min(p, disc) > speed * T + infl
    if speed == 0.0:
        return d_min(p, disc) > cfg.v_max * T + infl
    return d_dir(p, m.velocity * (1.0 / speed), disc.inflated(infl)) > cfg.v_max * T


def select_waypoint(D: PlannerFunction, target: Vec2, cfg: PlannerConfig) -> WaypointChoice:
    """Feasible point closest to ``target`` (ego frame); ties go to the lowest bin."""
    radii = D.radii
    if not np.any(radii > 0.0):
        return WaypointChoice(ORIGIN, 0.0, -1, False, target.norm())
    ux = np.cos(D.bearings)
    uy = np.sin(D.bearings)
    proj = target.x * ux + target.y * uy
    d = np.clip(proj, 0.0, radii)
    dist = np.hypot(target.x - d * ux, target.y - d * uy)
    k = int(np.argmin(dist))
    W = Vec2(float(d[k] * ux[k]), float(d[k] * uy[k]))
    best = float(dist[k])
    return WaypointChoice(W, float(d[k]), k, best <= cfg.epsilon, best)


def one_period_clearance(
    measurements: Sequence[MeasurementTuple], disc: InvariantDisc, cfg: PlannerConfig
) -> np.ndarray:
    """Per measurement: smallest signed distance to ``disc`` while drifting at
    constant velocity for one planning period."""
    n = len(measurements)
    p = np.array([m.point.as_tuple() for m in measurements]).reshape(n, 2)
    s = np.array([m.velocity.as_tuple() for m in measurements]).reshape(n, 2) * cfg.period
    f = p - np.array(disc.center.as_tuple())
    ss = np.einsum("ij,ij->i", s, s)
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = np.where(ss > 0.0, np.clip(-np.einsum("ij,ij->i", f, s) / ss, 0.0, 1.0), 0.0)
    closest = f + s * tau[:, None]
    return np.hypot(closest[:, 0], closest[:, 1]) - disc.radius
