"""Independent reference computations used by the verification suite and tests.

None of these share code paths with the kernels they check: the radius oracle
bisects on direct point-to-disc predicates, the dual integrator works in polar
coordinates about the waypoint, and the closed-loop harness inspects every
RK4 step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .controller import (
    ControlGains,
    ControllerState,
    SigmaBranch,
    branch_for,
    control,
    polar_rates,
    sigma_array,
)
from .geometry import InvariantDisc, MeasurementTuple, Vec2, wrap_angle
from .planner import ConstraintMode, PlannerConfig, beam_bearings, constraint_mode, is_free_space


# ---------------------------------------------------------------------------
# planner radius by bisection


def _admissible(d: float, theta: float, measurements: Sequence[MeasurementTuple], cfg: PlannerConfig) -> bool:
    if d > cfg.cap:
        return False
    grown = InvariantDisc.along(theta, d + cfg.epsilon)
    disc = InvariantDisc.along(theta, d)
    for m in measurements:
        ok = constraint_mode(m, disc if is_free_space(m, cfg) else grown, cfg)
        if not ok:
            return False
    return True


def bisection_radius(
    theta: float, measurements: Sequence[MeasurementTuple], cfg: PlannerConfig, iterations: int = 60
) -> float:
    """Admissible radius along ``theta`` found by bisection on the direct predicates."""
    lo, hi = 0.0, cfg.cap
    if _admissible(hi, theta, measurements, cfg):
        best = hi
    elif not _admissible(lo, theta, measurements, cfg):
        best = 0.0
    else:
        for _ in range(iterations):
            mid = 0.5 * (lo + hi)
            if _admissible(mid, theta, measurements, cfg):
                lo = mid
            else:
                hi = mid
        best = lo
    return best if best >= cfg.epsilon else 0.0


def random_measurement_set(rng: np.random.Generator, cfg: PlannerConfig | None = None) -> tuple[list[MeasurementTuple], PlannerConfig]:
    """A scan with static, moving and free-space returns plus a random mode and inflation."""
    if cfg is None:
        cfg = PlannerConfig(
            n_beams=int(rng.integers(8, 65)),
            mode=ConstraintMode(rng.choice([m.value for m in ConstraintMode])),
            v_max=float(rng.uniform(0.1, 0.6)),
            inflation=float(rng.choice([0.0, rng.uniform(0.0, 0.25)])),
        )
    out = []
    for b in beam_bearings(cfg.n_beams):
        u = rng.random()
        if u < 0.25:
            out.append(MeasurementTuple(cfg.d_max, float(b)))
            continue
        rho = float(rng.uniform(0.02, cfg.d_max))
        if u < 0.55:
            v = Vec2(0.0, 0.0)
        else:
            v = Vec2.polar(float(rng.uniform(0.0, 0.6)), float(rng.uniform(-math.pi, math.pi)))
        out.append(MeasurementTuple(rho, float(b), v))
    return out, cfg


# ---------------------------------------------------------------------------
# closed-loop harness about a fixed waypoint


@dataclass
class ClosedLoopCase:
    R0: float
    psi0: float
    phi: float
    gains: ControlGains

    @property
    def sigma0(self) -> float:
        return float(sigma_array(np.array([self.psi0]), np.array([branch_for(self.psi0) is SigmaBranch.ANTIPARALLEL]))[0])

    @property
    def settle_time(self) -> float:
        """Finite-time bound after which sigma is identically zero in continuous time."""
        return 2.0 * math.sqrt(abs(self.sigma0)) / self.gains.K2


@dataclass
class ClosedLoopResult:
    max_R_ratio: np.ndarray
    max_sigma_after: np.ndarray
    settle_time: np.ndarray
    final_R: np.ndarray
    branch_crossings: int
    max_R_rise: np.ndarray  # largest single-step increase of R


def random_cases(n: int, seed: int, vary_gains: bool = True) -> list[ClosedLoopCase]:
    rng = np.random.default_rng([seed, 7])
    cases = []
    for _ in range(n):
        gains = ControlGains(float(rng.uniform(0.1, 0.5)), float(rng.uniform(0.5, 2.0))) if vary_gains else ControlGains()
        cases.append(
            ClosedLoopCase(
                R0=float(rng.uniform(0.05, 2.0)),
                psi0=float(rng.uniform(-math.pi, math.pi)),
                phi=float(rng.uniform(-math.pi, math.pi)),
                gains=gains,
            )
        )
    return cases


def closed_loop(
    cases: Sequence[ClosedLoopCase],
    dt: float = 1e-3,
    f_p: float = 10.0,
    settle_pad: float = 0.05,
    tail: float = 1.0,
) -> ClosedLoopResult:
    """Integrate every case with the simulator's RK4 and watch R and sigma at each step.

    The waypoint sits at the origin and is fixed; the sigma branch is refrozen
    from the current psi every ``1/f_p`` as a planning instance would.
    """
    n = len(cases)
    x = np.array([c.R0 * math.cos(c.phi) for c in cases])
    y = np.array([c.R0 * math.sin(c.phi) for c in cases])
    h = np.array([wrap_angle(c.phi + c.psi0) for c in cases])
    k1 = np.array([c.gains.K1 for c in cases])
    k2 = np.array([c.gains.K2 for c in cases])
    R0 = np.array([c.R0 for c in cases])
    settle = np.array([c.settle_time for c in cases])
    zeros = np.zeros(n)
    mode = np.ones(n, dtype=np.int64)
    empty = np.zeros(0)
    period = max(1, int(round(1.0 / (f_p * dt))))
    n_steps = int(math.ceil((settle.max() + settle_pad + tail) / dt))
    max_ratio = np.ones(n)
    max_sig = np.zeros(n)
    max_rise = np.full(n, -np.inf)
    R_prev = R0.copy()
    crossings = 0
    anti = np.zeros(n, dtype=np.int64)
    for step in range(n_steps):
        if step % period == 0:
            psi = np.array([wrap_angle(a - math.atan2(b, c)) for a, b, c in zip(h, y, x)])
            anti = (np.cos(psi) < 0.0).astype(np.int64)
        _, _, cross = kernels.advance(
            x, y, h, mode, zeros, zeros, zeros, zeros, anti, k1, k2, zeros, R0,
            empty, empty, empty, empty, empty, 1, dt,
        )
        crossings += int(cross.sum())
        R = np.hypot(x, y)
        max_ratio = np.maximum(max_ratio, R / R0)
        max_rise = np.maximum(max_rise, R - R_prev)
        R_prev = R
        t = (step + 1) * dt
        psi = np.arctan2(np.sin(h - np.arctan2(y, x)), np.cos(h - np.arctan2(y, x)))
        sig = np.abs(sigma_array(psi, anti != 0))
        late = t >= settle + settle_pad
        max_sig = np.where(late, np.maximum(max_sig, sig), max_sig)
    return ClosedLoopResult(max_ratio, max_sig, settle, np.hypot(x, y), crossings, max_rise)


# ---------------------------------------------------------------------------
# dual integration


def polar_rk4(R0: float, psi0: float, gains: ControlGains, t_end: float, dt: float = 1e-3) -> tuple[float, float]:
    """Integrate the closed loop directly in (R, psi) about a fixed waypoint."""
    branch = branch_for(psi0)

    def rates(R: float, psi: float) -> tuple[float, float]:
        cmd = control(ControllerState(R, wrap_angle(psi), branch), gains)
        return polar_rates(R, psi, cmd.v, cmd.omega)

    R, psi = R0, psi0
    for _ in range(int(round(t_end / dt))):
        a = rates(R, psi)
        b = rates(R + 0.5 * dt * a[0], psi + 0.5 * dt * a[1])
        c = rates(R + 0.5 * dt * b[0], psi + 0.5 * dt * b[1])
        d = rates(R + dt * c[0], psi + dt * c[1])
        R += dt / 6.0 * (a[0] + 2 * b[0] + 2 * c[0] + d[0])
        psi += dt / 6.0 * (a[1] + 2 * b[1] + 2 * c[1] + d[1])
    return R, wrap_angle(psi)


def global_rk4(R0: float, psi0: float, gains: ControlGains, t_end: float, dt: float = 1e-3, phi: float = 0.3) -> tuple[float, float]:
    """Same closed loop through the simulator's global-frame kernel."""
    x = np.array([R0 * math.cos(phi)])
    y = np.array([R0 * math.sin(phi)])
    h = np.array([wrap_angle(phi + psi0)])
    z = np.zeros(1)
    empty = np.zeros(0)
    anti = np.array([int(branch_for(psi0))], dtype=np.int64)
    kernels.advance(
        x, y, h, np.ones(1, dtype=np.int64), z, z, z, z, anti,
        np.array([gains.K1]), np.array([gains.K2]), z, z,
        empty, empty, empty, empty, empty, int(round(t_end / dt)), dt,
    )
    R = math.hypot(x[0], y[0])
    return R, wrap_angle(h[0] - math.atan2(y[0], x[0]))


def dual_integration_gap(case: ClosedLoopCase, t_end: float = 1.0, dt: float = 1e-3) -> float:
    """Largest of |dR| and |d psi| between the polar and global integrations."""
    Rp, pp = polar_rk4(case.R0, case.psi0, case.gains, t_end, dt)
    Rg, pg = global_rk4(case.R0, case.psi0, case.gains, t_end, dt, case.phi)
    return max(abs(Rp - Rg), abs(wrap_angle(pp - pg)))

