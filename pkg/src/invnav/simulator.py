"""Deterministic multi-agent world running the self-navigation loop per agent.

Time advances in integer ticks of ``dt``. Each agent plans on its own
schedule (period ``1/f_p``, phase offset drawn from the scenario seed), reads
an immutable snapshot of the world, and then all bodies are integrated with
RK4 until the next planning instance of any agent.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels
from .baseline import BaselineMemory, baseline_step
from .controller import (
    STOP,
    ControlCommand,
    ControllerState,
    Pose2D,
    SigmaBranch,
    control,
    feedback_states,
    make_controller,
)
from .geometry import MeasurementTuple, Vec2
from .planner import (
    PlannerFunction,
    WaypointChoice,
    build_planner_function,
    is_free_space,
    one_period_clearance,
    select_waypoint,
)
from .scenario import AgentSpec, ControlHold, ScenarioConfig, Strategy, VelocityFrame

CSV_HEADER = ["t", "agent", "x", "y", "heading", "v", "omega", "Wx", "Wy", "disc_r", "plan_ms", "event"]

HOLD, FEEDBACK = 0, 1


@dataclass
class TraceRow:
    t: float
    agent: str
    x: float
    y: float
    heading: float
    v: float
    omega: float
    Wx: float | None
    Wy: float | None
    disc_r: float | None
    plan_ms: float | None
    event: str

    def cells(self) -> list[str]:
        def f(v, fmt="%.6f"):
            return "" if v is None else fmt % v

        return [
            "%.3f" % self.t, self.agent, f(self.x), f(self.y), f(self.heading), f(self.v),
            f(self.omega), f(self.Wx), f(self.Wy), f(self.disc_r), f(self.plan_ms, "%.3f"), self.event,
        ]


@dataclass
class TrajectoryLog:
    rows: list[TraceRow]
    summary: dict

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow(r.cells())
        return buf.getvalue()

    def summary_json(self) -> str:
        return json.dumps(self.summary, indent=2, sort_keys=True) + "\n"

    def traces(self) -> dict[str, np.ndarray]:
        out: dict[str, list[tuple[float, float]]] = {}
        for r in self.rows:
            out.setdefault(r.agent, []).append((r.x, r.y))
        return {k: np.array(v) for k, v in out.items()}


@dataclass
class AgentRuntime:
    spec: AgentSpec
    x: float
    y: float
    h: float
    period_ticks: int
    next_tick: int
    mode: int = HOLD
    v: float = 0.0
    w: float = 0.0
    Wx: float = 0.0
    Wy: float = 0.0
    anti: int = 0
    disc_r: float = 0.0
    converged: bool = False
    converged_time: float | None = None
    pending_events: list[str] = field(default_factory=list)
    memory: BaselineMemory = field(default_factory=BaselineMemory)
    min_clearance: float = math.inf

    @property
    def pose(self) -> Pose2D:
        return Pose2D(Vec2(self.x, self.y), self.h)

    @property
    def position(self) -> Vec2:
        return Vec2(self.x, self.y)

    def command_now(self) -> ControlCommand:
        if self.mode == HOLD:
            return ControlCommand(self.v, self.w)
        R, psi = feedback_states(self.position, self.h, Vec2(self.Wx, self.Wy))
        return control(ControllerState(R, psi, SigmaBranch(self.anti)), self.spec.gains)

    def velocity(self) -> Vec2:
        v = self.command_now().v
        return Vec2(v * math.cos(self.h), v * math.sin(self.h))


@dataclass
class PlanResult:
    choice: WaypointChoice | None
    command: ControlCommand
    D: PlannerFunction | None = None
    events: list[str] = field(default_factory=list)
    safety_margin: float | None = None


class World:
    """Mutable world state for one scenario run."""

    def __init__(self, cfg: ScenarioConfig, workers: int = 1, record_timing: bool = False):
        self.cfg = cfg
        self.workers = workers
        self.record_timing = record_timing
        self.tick = 0
        self.noise_rng = np.random.default_rng([cfg.seed, 2])
        phase_rng = np.random.default_rng([cfg.seed, 1])
        self.agents: list[AgentRuntime] = []
        for spec in cfg.agents:
            period = max(1, int(round(spec.planner_cfg.period / cfg.dt)))
            offset = int(phase_rng.integers(0, period)) if cfg.stagger else 0
            p = spec.start.position
            self.agents.append(AgentRuntime(spec, float(p.x), float(p.y), float(spec.start.heading), period, offset))
        self.obstacles = list(cfg.obstacles)

    @property
    def time(self) -> float:
        return self.tick * self.cfg.dt

    def index(self, agent_id: str) -> int:
        for i, a in enumerate(self.agents):
            if a.spec.id == agent_id:
                return i
        raise KeyError(agent_id)

    def bodies(self, exclude: int | None = None):
        """Centres, radii and global velocities of every body except agent ``exclude``."""
        cx, cy, cr, vel = [], [], [], []
        for j, a in enumerate(self.agents):
            if j == exclude:
                continue
            cx.append(a.x)
            cy.append(a.y)
            cr.append(a.spec.radius)
            vel.append(a.velocity())
        t = self.time
        for o in self.obstacles:
            p, v = o.state(t)
            cx.append(p.x)
            cy.append(p.y)
            cr.append(o.radius)
            vel.append(v)
        return np.array(cx), np.array(cy), np.array(cr), vel


def simulate_lidar(world: World, agent_id: str | int) -> list[MeasurementTuple]:
    """Simulated 360-degree range scan for one agent, tagged with velocities in ego axes."""
    i = agent_id if isinstance(agent_id, int) else world.index(agent_id)
    a = world.agents[i]
    pcfg = a.spec.planner_cfg
    bearings = pcfg.bearings()
    cx, cy, cr, vel = world.bodies(exclude=i)
    ranges, hits = kernels.raycast(a.x, a.y, a.h, bearings, pcfg.d_max, cx, cy, cr)
    own = a.velocity() if world.cfg.velocity_frame is VelocityFrame.RELATIVE else Vec2(0.0, 0.0)
    rn, vn = world.cfg.range_noise, world.cfg.velocity_noise
    below = math.nextafter(pcfg.d_max, 0.0)
    out = []
    for n in range(len(bearings)):
        j = int(hits[n])
        if j < 0:
            out.append(MeasurementTuple(pcfg.d_max, float(bearings[n])))
            continue
        rho = float(ranges[n])
        v = (vel[j] - own).rotated(-a.h)
        if rn > 0.0:
            rho = min(below, max(0.0, rho + world.noise_rng.normal(0.0, rn)))
        if vn > 0.0:
            v = v + Vec2(*world.noise_rng.normal(0.0, vn, size=2))
        out.append(MeasurementTuple(rho, float(bearings[n]), v))
    return out


def step_agent(world: World, agent_id: str | int, M: Sequence[MeasurementTuple]) -> PlanResult:
    """One planning instance: build D, pick the waypoint, freeze and evaluate the feedback law."""
    i = agent_id if isinstance(agent_id, int) else world.index(agent_id)
    a = world.agents[i]
    spec = a.spec
    pcfg = spec.planner_cfg
    if spec.strategy is Strategy.DECOUPLED_BASELINE:
        cmd = baseline_step(
            a.position, a.h, spec.start.position, spec.target, M, pcfg.d_max, spec.radius,
            spec.gains, world.cfg.baseline, a.memory, pcfg.period,
        )
        a.mode, a.v, a.w, a.disc_r = HOLD, cmd.v, cmd.omega, 0.0
        return PlanResult(None, cmd, events=["avoid"] if a.memory.turning else [])

    D = build_planner_function(M, pcfg, workers=world.workers)
    target_ego = (spec.target - a.position).rotated(-a.h)
    choice = select_waypoint(D, target_ego, pcfg)
    events = ["latched"] if choice.latched else []
    if choice.d <= 0.0:
        a.mode, a.v, a.w, a.disc_r = HOLD, 0.0, 0.0, 0.0
        events.append("boxed_in" if D.blocked else "stop")
        return PlanResult(choice, STOP, D, events)

    W = a.position + choice.W.rotated(a.h)
    state = make_controller(a.pose, W)
    cmd = control(state, spec.gains)
    a.Wx, a.Wy, a.anti, a.disc_r = W.x, W.y, int(state.sigma_branch), choice.d
    if world.cfg.control_hold is ControlHold.FEEDBACK:
        a.mode = FEEDBACK
    else:
        a.mode = HOLD
    a.v, a.w = cmd.v, cmd.omega

    bodies = [m for m in M if not is_free_space(m, pcfg)]
    margin = None
    if bodies:
        margin = float(np.min(one_period_clearance(bodies, choice.disc, pcfg))) - pcfg.inflation
    return PlanResult(choice, cmd, D, events, margin)


def integrate(world: World, n_steps: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Advance every agent ``n_steps`` RK4 steps of ``dt`` under its current controller."""
    ags = world.agents
    x = np.array([a.x for a in ags], dtype=float)
    y = np.array([a.y for a in ags], dtype=float)
    h = np.array([a.h for a in ags], dtype=float)
    mode = np.array([a.mode for a in ags], dtype=np.int64)
    f = lambda attr: np.array([getattr(a, attr) for a in ags], dtype=float)  # noqa: E731
    anti = np.array([a.anti for a in ags], dtype=np.int64)
    k1 = np.array([a.spec.gains.K1 for a in ags])
    k2 = np.array([a.spec.gains.K2 for a in ags])
    radius = np.array([a.spec.radius for a in ags])
    disc_r = f("disc_r")
    t = world.time
    obs = [o.state(t) for o in world.obstacles]
    ox = np.array([p.x for p, _ in obs])
    oy = np.array([p.y for p, _ in obs])
    ovx = np.array([v.x for _, v in obs])
    ovy = np.array([v.y for _, v in obs])
    orad = np.array([o.radius for o in world.obstacles])
    clear, exc, cross = kernels.advance(
        x, y, h, mode, f("v"), f("w"), f("Wx"), f("Wy"), anti, k1, k2, radius, disc_r,
        ox, oy, ovx, ovy, orad, int(n_steps), world.cfg.dt,
    )
    for i, a in enumerate(ags):
        a.x, a.y, a.h = float(x[i]), float(y[i]), float(h[i])
    world.tick += n_steps
    return clear, exc, cross


def initial_clearance(world: World) -> np.ndarray:
    ags = world.agents
    out = np.full(len(ags), np.inf)
    obs = [(o.state(0.0)[0], o.radius) for o in world.obstacles]
    for i, a in enumerate(ags):
        for j, b in enumerate(ags):
            if i != j:
                out[i] = min(out[i], (a.position - b.position).norm() - a.spec.radius - b.spec.radius)
        for p, r in obs:
            out[i] = min(out[i], (a.position - p).norm() - a.spec.radius - r)
    return out


def run_scenario(
    cfg: ScenarioConfig, workers: int = 1, record_timing: bool = False
) -> TrajectoryLog:
    world = World(cfg, workers, record_timing)
    ags = world.agents
    max_ticks = int(round(cfg.timeout / cfg.dt))
    breakpoints = sorted(
        {int(round(t / cfg.dt)) for o in cfg.obstacles for t in o.breakpoints() if t > 0.0}
    )
    rows: list[TraceRow] = []
    stats = {
        "collisions": 0,
        "collision_times": [],
        "safety_checks": 0,
        "safety_violations": 0,
        "min_safety_margin": math.inf,
        "max_disc_excursion": -math.inf,
        "branch_crossings": 0,
        "boxed_in_events": 0,
        "stop_events": 0,
        "latch_events": 0,
    }
    plan_ms: list[float] = []
    in_collision = [False] * len(ags)
    clear0 = initial_clearance(world)
    for i, a in enumerate(ags):
        a.min_clearance = float(clear0[i])
        if clear0[i] <= 0.0:
            in_collision[i] = True
            stats["collisions"] += 1
            stats["collision_times"].append(0.0)

    while True:
        due = [i for i, a in enumerate(ags) if not a.converged and a.next_tick == world.tick]
        t_now = world.time
        scans = {}
        for i in due:
            a = ags[i]
            if (a.position - a.spec.target).norm() <= cfg.delta:
                a.converged, a.converged_time = True, t_now
                a.mode, a.v, a.w, a.disc_r = HOLD, 0.0, 0.0, 0.0
                rows.append(_row(t_now, a, None, "|".join(a.pending_events + ["converged"])))
                a.pending_events.clear()
                continue
            scans[i] = simulate_lidar(world, i)
        for i, M in scans.items():
            a = ags[i]
            t0 = time.perf_counter()
            res = step_agent(world, i, M)
            ms = (time.perf_counter() - t0) * 1e3
            plan_ms.append(ms)
            for ev in res.events:
                if ev == "boxed_in":
                    stats["boxed_in_events"] += 1
                elif ev == "stop":
                    stats["stop_events"] += 1
                elif ev == "latched":
                    stats["latch_events"] += 1
            if res.safety_margin is not None:
                stats["safety_checks"] += 1
                stats["min_safety_margin"] = min(stats["min_safety_margin"], res.safety_margin)
                if res.safety_margin < -1e-9:
                    stats["safety_violations"] += 1
            rows.append(
                _row(t_now, a, res, "|".join(a.pending_events + res.events), ms if record_timing else None)
            )
            a.pending_events.clear()
            a.next_tick += a.period_ticks

        if all(a.converged for a in ags) or world.tick >= max_ticks:
            break
        nxt = [a.next_tick for a in ags if not a.converged]
        nxt += [b for b in breakpoints if b > world.tick]
        nxt.append(max_ticks)
        target = min(nxt)
        clear, exc, cross = integrate(world, target - world.tick)
        for i, a in enumerate(ags):
            a.min_clearance = min(a.min_clearance, float(clear[i]))
            hit = clear[i] <= 0.0
            if hit and not in_collision[i]:
                stats["collisions"] += 1
                stats["collision_times"].append(round(world.time, 6))
                a.pending_events.append("collision")
            in_collision[i] = bool(hit)
            if np.isfinite(exc[i]):
                stats["max_disc_excursion"] = max(stats["max_disc_excursion"], float(exc[i]))
            if cross[i]:
                stats["branch_crossings"] += 1
                a.pending_events.append("branch_cross")

    t_end = world.time
    for a in ags:
        if not a.converged:
            rows.append(_row(t_end, a, None, "|".join(a.pending_events + ["timeout"])))
    summary = _summary(cfg, world, stats, plan_ms if record_timing else None)
    log = TrajectoryLog(rows, summary)
    from .metrics import run_metrics

    summary["metrics"] = run_metrics(log, cfg)
    return log


def _row(t: float, a: AgentRuntime, res: PlanResult | None, event: str, ms: float | None = None) -> TraceRow:
    Wx = Wy = dr = None
    v = w = 0.0
    if res is not None:
        v, w = res.command.v, res.command.omega
        if res.choice is not None and res.choice.d > 0.0:
            Wx, Wy, dr = a.Wx, a.Wy, res.choice.d
    return TraceRow(t, a.spec.id, a.x, a.y, a.h, v, w, Wx, Wy, dr, ms, event)


def _finite(x: float) -> float | None:
    return float(x) if math.isfinite(x) else None


def _summary(cfg: ScenarioConfig, world: World, stats: dict, plan_ms: list[float] | None) -> dict:
    ags = world.agents
    first = ags[0].spec.planner_cfg
    summary = {
        "scenario": cfg.name,
        "seed": cfg.seed,
        "n_agents": len(ags),
        "strategy": sorted({a.spec.strategy.value for a in ags}),
        "mode": first.mode.value,
        "n_beams": first.n_beams,
        "f_p": first.f_p,
        "d_max": first.d_max,
        "dt": cfg.dt,
        "timeout": cfg.timeout,
        "delta": cfg.delta,
        "control_hold": cfg.control_hold.value,
        "velocity_frame": cfg.velocity_frame.value,
        "workers": world.workers,
        "final_time": round(world.time, 6),
        "converged": {a.spec.id: a.converged for a in ags},
        "all_converged": all(a.converged for a in ags),
        "completion_time": {a.spec.id: a.converged_time for a in ags},
        "min_clearance": _finite(min(a.min_clearance for a in ags)),
        "agent_min_clearance": {a.spec.id: _finite(a.min_clearance) for a in ags},
        "collisions": stats["collisions"],
        "collision_times": stats["collision_times"],
        "safety_checks": stats["safety_checks"],
        "safety_violations": stats["safety_violations"],
        "min_safety_margin": _finite(stats["min_safety_margin"]),
        "max_disc_excursion": _finite(stats["max_disc_excursion"]),
        "branch_crossings": stats["branch_crossings"],
        "boxed_in_events": stats["boxed_in_events"],
        "stop_events": stats["stop_events"],
        "latch_events": stats["latch_events"],
    }
    if plan_ms is not None:
        from .metrics import duration_stats

        summary["plan_duration_ms"] = duration_stats(plan_ms)
    return summary
