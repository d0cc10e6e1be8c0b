"""Planar primitives and closed-form point-to-disc distances."""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi

#: Returned by :func:`d_dir` when the ray never reaches the disc.
UNBOUNDED = math.inf


@dataclass(frozen=True)
class Vec2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite Vec2 ({self.x}, {self.y})")

    def __add__(self, other: Vec2) -> Vec2:
        return Vec2(self.x + other.x, self.y + other.y)

    def __sub__(self, other: Vec2) -> Vec2:
        return Vec2(self.x - other.x, self.y - other.y)

    def __mul__(self, s: float) -> Vec2:
        return Vec2(self.x * s, self.y * s)

    __rmul__ = __mul__

    def __neg__(self) -> Vec2:
        return Vec2(-self.x, -self.y)

    def dot(self, other: Vec2) -> float:
        return self.x * other.x + self.y * other.y

    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    def angle(self) -> float:
        return math.atan2(self.y, self.x)

    def unit(self) -> Vec2:
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalise the zero vector")
        return Vec2(self.x / n, self.y / n)

    def rotated(self, angle: float) -> Vec2:
        c, s = math.cos(angle), math.sin(angle)
        return Vec2(c * self.x - s * self.y, s * self.x + c * self.y)

    @staticmethod
    def polar(r: float, angle: float) -> Vec2:
        return Vec2(r * math.cos(angle), r * math.sin(angle))

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


ORIGIN = Vec2(0.0, 0.0)


@dataclass(frozen=True)
class InvariantDisc:
    """Disc ``{p : |p - center| <= radius}`` in the ego frame.

    Candidate discs put the agent (the ego origin) on the boundary, so
    ``|center| == radius``. :meth:`along` builds exactly that family.
    """

    center: Vec2
    radius: float

    def __post_init__(self):
        if self.radius < 0.0:
            raise ValueError(f"negative disc radius {self.radius}")

    @classmethod
    def along(cls, bearing: float, radius: float) -> InvariantDisc:
        return cls(Vec2.polar(radius, bearing), radius)

    def inflated(self, margin: float) -> InvariantDisc:
        return InvariantDisc(self.center, self.radius + margin)

    def contains(self, p: Vec2) -> bool:
        return (p - self.center).norm() <= self.radius

    def has_agent_on_boundary(self, rtol: float = 1e-9) -> bool:
        return abs(self.center.norm() - self.radius) <= rtol * max(self.radius, 1.0)


@dataclass(frozen=True)
class MeasurementTuple:
    """One range return in the ego frame: range, bearing, relative velocity."""

    range: float
    bearing: float
    velocity: Vec2 = ORIGIN

    def __post_init__(self):
        if self.range < 0.0 or not math.isfinite(self.range):
            raise ValueError(f"invalid range {self.range}")

    @property
    def point(self) -> Vec2:
        return Vec2.polar(self.range, self.bearing)

    @property
    def speed(self) -> float:
        return self.velocity.norm()

    @property
    def is_static(self) -> bool:
        return self.velocity.x == 0.0 and self.velocity.y == 0.0


def wrap_angle(a: float) -> float:
    """Map ``a`` into (-pi, pi]."""
    if not math.isfinite(a):
        raise ValueError(f"cannot wrap non-finite angle {a}")
    w = math.fmod(a + math.pi, TWO_PI)
    if w <= 0.0:
        w += TWO_PI
    return w - math.pi


def d_min(p: Vec2, disc: InvariantDisc) -> float:
    """Signed shortest distance from ``p`` to the disc (negative inside)."""
    return (p - disc.center).norm() - disc.radius


def d_dir(p: Vec2, direction: Vec2, disc: InvariantDisc) -> float:
    """Distance travelled from ``p`` along unit ``direction`` before touching the disc.

    Returns 0 when ``p`` is already in the closed disc and :data:`UNBOUNDED`
    when the ray misses.
    """
    f = p - disc.center
    c = f.dot(f) - disc.radius * disc.radius
    if c <= 0.0:
        return 0.0
    b = f.dot(direction)
    if b >= 0.0:
        return UNBOUNDED
    disc_q = b * b - c
    if disc_q < 0.0:
        return UNBOUNDED
    # t1 * t2 = c, so the near root is c / far root; no cancellation for grazing rays.
    return c / (-b + math.sqrt(disc_q))


def segment_clearance(p: Vec2, displacement: Vec2, disc: InvariantDisc) -> float:
    """Smallest signed distance from the segment ``p -> p + displacement`` to the disc."""
    f = p - disc.center
    dd = displacement.dot(displacement)
    tau = 0.0
    if dd > 0.0:
        tau = min(1.0, max(0.0, -f.dot(displacement) / dd))
    closest = f + displacement * tau
    return closest.norm() - disc.radius
