"""Input-constrained unicycle feedback law about a waypoint.

The law drives the agent onto the line through the waypoint (facing toward
or away from it) in finite time while the distance to the waypoint decays
monotonically, so the disc of radius R(0) about the waypoint is invariant.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .geometry import Vec2, wrap_angle

# Below this radius tanh(R)/R is replaced by its series 1 - R^2/3.
_TANH_RATIO_EPS = 1e-8


class SigmaBranch(enum.IntEnum):
    PARALLEL = 0
    ANTIPARALLEL = 1


@dataclass(frozen=True)
class ControlGains:
    K1: float = 0.2
    K2: float = 1.0

    def __post_init__(self):
        if not (self.K1 > 0.0 and self.K2 > 0.0):
            raise ValueError(f"gains must be positive, got K1={self.K1}, K2={self.K2}")

    @property
    def v_bound(self) -> float:
        return self.K1

    @property
    def omega_bound(self) -> float:
        return self.K2 * (math.pi / 2.0) + self.K1

    def check_platform(self, omega_max: float) -> None:
        if self.omega_bound > omega_max:
            raise ValueError(
                f"K2*pi/2 + K1 = {self.omega_bound:.4f} rad/s exceeds platform limit {omega_max}"
            )


@dataclass(frozen=True)
class Pose2D:
    position: Vec2
    heading: float

    def __post_init__(self):
        object.__setattr__(self, "heading", wrap_angle(self.heading))


@dataclass(frozen=True)
class ControllerState:
    R: float
    psi: float
    sigma_branch: SigmaBranch


@dataclass(frozen=True)
class ControlCommand:
    v: float
    omega: float


STOP = ControlCommand(0.0, 0.0)


def sgn(x: float) -> float:
    """Signum with sgn(0) = +1."""
    return -1.0 if x < 0.0 else 1.0


def branch_for(psi0: float) -> SigmaBranch:
    return SigmaBranch.ANTIPARALLEL if math.cos(psi0) < 0.0 else SigmaBranch.PARALLEL


def feedback_states(position: Vec2, heading: float, waypoint: Vec2) -> tuple[float, float]:
    """Radial distance to ``waypoint`` and bearing relative to the waypoint->agent axis."""
    rel = position - waypoint
    return rel.norm(), wrap_angle(heading - rel.angle())


def make_controller(pose: Pose2D, waypoint: Vec2) -> ControllerState:
    """Feedback states about ``waypoint`` with the sigma branch frozen from the current bearing."""
    R, psi = feedback_states(pose.position, pose.heading, waypoint)
    if R == 0.0:
        raise ValueError("agent already sits on the waypoint")
    return ControllerState(R, psi, branch_for(psi))


def sigma(state: ControllerState) -> float:
    psi = state.psi
    if state.sigma_branch is SigmaBranch.ANTIPARALLEL:
        shifted = psi - sgn(psi) * math.pi
        # already in (-pi, pi] except psi = 0 -> -pi
        return shifted + 2.0 * math.pi if shifted <= -math.pi else shifted
    return psi


def tanh_ratio(R: float) -> float:
    if R < _TANH_RATIO_EPS:
        return 1.0 - R * R / 3.0
    return math.tanh(R) / R


def control(state: ControllerState, gains: ControlGains) -> ControlCommand:
    s = sigma(state)
    c = sgn(math.cos(state.psi))
    v = -gains.K1 * math.tanh(state.R) * c
    omega = (
        -gains.K2 * math.sqrt(abs(s)) * sgn(s)
        - gains.K1 * tanh_ratio(state.R) * c * math.sin(state.psi)
    )
    return ControlCommand(v, omega)


def sigma_array(psi: np.ndarray, antiparallel: np.ndarray) -> np.ndarray:
    """Vectorised :func:`sigma`; ``antiparallel`` is a boolean mask."""
    psi = np.asarray(psi, dtype=float)
    sg = np.where(psi < 0.0, -1.0, 1.0)
    shifted = psi - sg * np.pi
    # psi - sgn(psi)*pi already lies in (-pi, pi] except psi = 0 -> -pi.
    shifted = np.where(shifted <= -np.pi, shifted + 2.0 * np.pi, shifted)
    return np.where(antiparallel, shifted, psi)


def control_array(
    R: np.ndarray, psi: np.ndarray, antiparallel: np.ndarray, K1, K2
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`control` over arrays of states (gains may be arrays too)."""
    R = np.asarray(R, dtype=float)
    psi = np.asarray(psi, dtype=float)
    s = sigma_array(psi, antiparallel)
    c = np.where(np.cos(psi) < 0.0, -1.0, 1.0)
    th = np.tanh(R)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(R < _TANH_RATIO_EPS, 1.0 - R * R / 3.0, th / R)
    v = -K1 * th * c
    omega = -K2 * np.sqrt(np.abs(s)) * np.where(s < 0.0, -1.0, 1.0) - K1 * ratio * c * np.sin(psi)
    return v, omega


def polar_rates(R: float, psi: float, v: float, omega: float) -> tuple[float, float]:
    """Right-hand side of the polar unicycle model about a fixed waypoint."""
    return v * math.cos(psi), omega - v / R * math.sin(psi)
