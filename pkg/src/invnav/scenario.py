"""Scenario configuration: TOML loading, validation and random crowd generation."""

from __future__ import annotations

import dataclasses
import enum
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .controller import ControlGains, Pose2D
from .geometry import Vec2
from .planner import ConstraintMode, PlannerConfig


class Strategy(str, enum.Enum):
    INVARIANT_SET = "invariant_set"
    DECOUPLED_BASELINE = "decoupled_baseline"


class ControlHold(str, enum.Enum):
    # Feedback law re-evaluated every integration step, waypoint frozen per instance.
    FEEDBACK = "feedback"
    # (v, omega) frozen per instance.
    COMMAND = "command"


class VelocityFrame(str, enum.Enum):
    RELATIVE = "relative"
    ABSOLUTE = "absolute"


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.message = message
        self.line = line
        self.source = source
        where = ""
        if source:
            where = f"{source}:{line}: " if line else f"{source}: "
        elif line:
            where = f"line {line}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class AgentSpec:
    id: str
    radius: float
    start: Pose2D
    target: Vec2
    gains: ControlGains
    planner_cfg: PlannerConfig
    strategy: Strategy = Strategy.INVARIANT_SET

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError(f"agent {self.id}: radius must be positive")
        if (self.start.position - self.target).norm() == 0.0:
            raise ValueError(f"agent {self.id}: start coincides with target")


@dataclass(frozen=True)
class ObstacleSpec:
    """Scripted disc moving piecewise-linearly through timed waypoints ``(t, x, y)``."""

    id: str
    radius: float
    waypoints: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError(f"obstacle {self.id}: radius must be positive")
        if not self.waypoints:
            raise ValueError(f"obstacle {self.id}: needs at least one waypoint")
        times = [w[0] for w in self.waypoints]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"obstacle {self.id}: waypoint times must increase")

    def state(self, t: float) -> tuple[Vec2, Vec2]:
        """Position and velocity at time ``t``; the velocity is the one ahead of ``t``."""
        wps = self.waypoints
        if len(wps) == 1 or t < wps[0][0]:
            return Vec2(wps[0][1], wps[0][2]), Vec2(0.0, 0.0)
        for (t0, x0, y0), (t1, x1, y1) in zip(wps, wps[1:]):
            if t0 <= t < t1:
                a = (t - t0) / (t1 - t0)
                vel = Vec2((x1 - x0) / (t1 - t0), (y1 - y0) / (t1 - t0))
                return Vec2(x0 + a * (x1 - x0), y0 + a * (y1 - y0)), vel
        return Vec2(wps[-1][1], wps[-1][2]), Vec2(0.0, 0.0)

    def breakpoints(self) -> list[float]:
        return [w[0] for w in self.waypoints]


@dataclass(frozen=True)
class BaselineParams:
    lookahead: float = 0.3
    safety_gap: float = 0.3
    cone_half_angle: float = math.radians(90.0)
    turn_rate: float = 1.0
    advance_time: float = 1.0
    align_angle: float = math.radians(60.0)


@dataclass(frozen=True)
class RandomCrowd:
    n_agents: int
    arena: float = 2.0
    radius: float = 0.1
    min_separation: float = 0.6
    min_travel: float = 1.0
    strategy: Strategy = Strategy.INVARIANT_SET


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    agents: tuple[AgentSpec, ...]
    obstacles: tuple[ObstacleSpec, ...] = ()
    seed: int = 0
    dt: float = 1e-3
    timeout: float = 120.0
    delta: float = 0.05
    control_hold: ControlHold = ControlHold.FEEDBACK
    velocity_frame: VelocityFrame = VelocityFrame.RELATIVE
    range_noise: float = 0.0
    velocity_noise: float = 0.0
    stagger: bool = True
    bounds: tuple[float, float, float, float] | None = None
    baseline: BaselineParams = field(default_factory=BaselineParams)

    def __post_init__(self):
        object.__setattr__(self, "control_hold", ControlHold(self.control_hold))
        object.__setattr__(self, "velocity_frame", VelocityFrame(self.velocity_frame))
        if not self.agents:
            raise ValueError("scenario needs at least one agent")
        ids = [a.id for a in self.agents] + [o.id for o in self.obstacles]
        if len(set(ids)) != len(ids):
            raise ValueError("agent/obstacle ids must be unique")
        fp = max(a.planner_cfg.f_p for a in self.agents)
        if self.dt > 1.0 / (10.0 * fp) + 1e-15:
            raise ValueError(f"dt {self.dt} exceeds 1/(10 f_p) = {1.0 / (10.0 * fp)}")
        if self.timeout <= 0.0 or self.delta <= 0.0:
            raise ValueError("timeout and delta must be positive")

    def with_strategy(self, strategy: Strategy) -> ScenarioConfig:
        agents = tuple(dataclasses.replace(a, strategy=Strategy(strategy)) for a in self.agents)
        return dataclasses.replace(self, agents=agents)

    def with_mode(self, mode: ConstraintMode) -> ScenarioConfig:
        agents = tuple(
            dataclasses.replace(a, planner_cfg=dataclasses.replace(a.planner_cfg, mode=ConstraintMode(mode)))
            for a in self.agents
        )
        return dataclasses.replace(self, agents=agents)


def random_crowd(
    crowd: RandomCrowd,
    seed: int,
    gains: ControlGains,
    planner: PlannerConfig,
    clearance_margin: float = 0.05,
) -> list[AgentSpec]:
    """Rejection-sample starts and targets in ``[-arena, arena]^2``."""
    rng = np.random.default_rng([seed, 0])

    def sample(existing: list[Vec2], tries: int = 20000) -> Vec2:
        for _ in range(tries):
            p = Vec2(*rng.uniform(-crowd.arena, crowd.arena, size=2))
            if all((p - q).norm() >= crowd.min_separation for q in existing):
                return p
        raise ConfigError(
            f"cannot place {crowd.n_agents} agents {crowd.min_separation} m apart in arena {crowd.arena}"
        )

    starts: list[Vec2] = []
    for _ in range(crowd.n_agents):
        starts.append(sample(starts))
    targets: list[Vec2] = []
    for i in range(crowd.n_agents):
        for _ in range(20000):
            t = sample(targets)
            if (t - starts[i]).norm() >= crowd.min_travel:
                break
        else:
            raise ConfigError("cannot satisfy min_travel")
        targets.append(t)
    headings = rng.uniform(-math.pi, math.pi, size=crowd.n_agents)
    pcfg = dataclasses.replace(planner, inflation=crowd.radius + clearance_margin)
    return [
        AgentSpec(
            id=f"a{i}",
            radius=crowd.radius,
            start=Pose2D(starts[i], float(headings[i])),
            target=targets[i],
            gains=gains,
            planner_cfg=pcfg,
            strategy=crowd.strategy,
        )
        for i in range(crowd.n_agents)
    ]


def random_scenario(
    n_agents: int,
    seed: int,
    *,
    arena: float = 2.0,
    radius: float = 0.1,
    min_separation: float = 0.6,
    min_travel: float = 1.0,
    strategy: Strategy = Strategy.INVARIANT_SET,
    gains: ControlGains | None = None,
    planner: PlannerConfig | None = None,
    name: str | None = None,
    **kwargs: Any,
) -> ScenarioConfig:
    gains = gains or ControlGains()
    planner = planner or PlannerConfig()
    crowd = RandomCrowd(n_agents, arena, radius, min_separation, min_travel, Strategy(strategy))
    agents = random_crowd(crowd, seed, gains, planner)
    return ScenarioConfig(
        name=name or f"random_{n_agents}_s{seed}", agents=tuple(agents), seed=seed, **kwargs
    )


# ---------------------------------------------------------------------------
# TOML loading


class _Locator:
    """Finds the source line of a key so semantic errors can point at it."""

    def __init__(self, text: str):
        self.lines = text.splitlines()

    def _header_lines(self, header: str) -> list[int]:
        pat = re.compile(r"^\s*" + re.escape(header) + r"\s*(#.*)?$")
        return [i for i, ln in enumerate(self.lines) if pat.match(ln)]

    def find(self, key: str | None, table: str | None = None, index: int | None = None) -> int | None:
        start, stop = 0, len(self.lines)
        if table is not None:
            heads = self._header_lines(f"[[{table}]]" if index is not None else f"[{table}]")
            if index is not None:
                if index >= len(heads):
                    return None
                heads = heads[index:]
            if not heads:
                return None
            start = heads[0]
            if key is None:
                return start + 1
            nxt = [i for i, ln in enumerate(self.lines) if i > start and ln.lstrip().startswith("[")]
            stop = nxt[0] if nxt else len(self.lines)
        elif key is not None:
            first_table = [i for i, ln in enumerate(self.lines) if ln.lstrip().startswith("[")]
            stop = first_table[0] if first_table else len(self.lines)
        if key is None:
            return None
        pat = re.compile(r"^\s*" + re.escape(key) + r"\s*=")
        for i in range(start, stop):
            if pat.match(self.lines[i]):
                return i + 1
        return start + 1 if table is not None else None


_TOP_KEYS = {
    "name", "seed", "dt", "timeout", "delta", "control_hold", "velocity_frame",
    "clearance_margin", "stagger", "bounds", "planner", "controller", "sensing",
    "baseline", "random", "agents", "obstacles",
}
_PLANNER_KEYS = {f.name for f in dataclasses.fields(PlannerConfig)}
_CONTROLLER_KEYS = {"K1", "K2", "omega_max"}
_SENSING_KEYS = {"range_noise", "velocity_noise"}
_BASELINE_KEYS = {f.name for f in dataclasses.fields(BaselineParams)} | {"cone_half_angle_deg", "align_angle_deg"}
_RANDOM_KEYS = {f.name for f in dataclasses.fields(RandomCrowd)}
_AGENT_KEYS = {"id", "radius", "start", "target", "strategy", "K1", "K2", "inflation", "mode"}
_OBSTACLE_KEYS = {"id", "radius", "waypoints", "position"}


def _check_keys(d: dict, allowed: set[str], where: str, loc: _Locator, table=None, index=None) -> None:
    for k in d:
        if k not in allowed:
            raise ConfigError(f"unknown key {k!r} in {where}", loc.find(k, table, index))


def _num(d: dict, key: str, default, loc: _Locator, table=None, index=None, kind=float):
    if key not in d:
        return default
    v = d[key]
    ok = isinstance(v, (int, float)) and not isinstance(v, bool)
    if kind is int:
        ok = isinstance(v, int) and not isinstance(v, bool)
    if not ok or (kind is float and not math.isfinite(v)):
        raise ConfigError(f"{key} must be {'an integer' if kind is int else 'a number'}, got {v!r}",
                          loc.find(key, table, index))
    return kind(v)


def _vec(d: dict, key: str, n: int, loc: _Locator, table=None, index=None) -> list[float]:
    v = d.get(key)
    if not (isinstance(v, list) and len(v) == n and all(isinstance(x, (int, float)) for x in v)):
        raise ConfigError(f"{key} must be a list of {n} numbers, got {v!r}", loc.find(key, table, index))
    return [float(x) for x in v]


def parse_scenario(text: str, source: str | None = None) -> ScenarioConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(f"malformed TOML: {exc}", int(m.group(1)) if m else None, source) from None
    loc = _Locator(text)
    try:
        return _build(raw, loc)
    except ConfigError as exc:
        if source and exc.source is None:
            raise ConfigError(exc.message, exc.line, source) from None
        raise


def load_scenario(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc}", None, str(path)) from None
    return parse_scenario(text, str(path))


def _build(raw: dict, loc: _Locator) -> ScenarioConfig:
    _check_keys(raw, _TOP_KEYS, "scenario", loc)
    name = raw.get("name", "scenario")
    if not isinstance(name, str):
        raise ConfigError("name must be a string", loc.find("name"))
    seed = _num(raw, "seed", 0, loc, kind=int)
    margin = _num(raw, "clearance_margin", 0.05, loc)

    pl = raw.get("planner", {})
    _check_keys(pl, _PLANNER_KEYS, "[planner]", loc, "planner")
    pkw: dict[str, Any] = {}
    for k in _PLANNER_KEYS:
        if k in pl:
            if k == "mode":
                try:
                    pkw[k] = ConstraintMode(pl[k])
                except ValueError:
                    raise ConfigError(f"unknown planner mode {pl[k]!r}", loc.find(k, "planner")) from None
            else:
                pkw[k] = _num(pl, k, None, loc, "planner", kind=int if k == "n_beams" else float)
    try:
        planner = PlannerConfig(**pkw)
    except ValueError as exc:
        raise ConfigError(str(exc), loc.find(None, "planner")) from None

    ct = raw.get("controller", {})
    _check_keys(ct, _CONTROLLER_KEYS, "[controller]", loc, "controller")
    try:
        gains = ControlGains(_num(ct, "K1", 0.2, loc, "controller"), _num(ct, "K2", 1.0, loc, "controller"))
        if "omega_max" in ct:
            gains.check_platform(_num(ct, "omega_max", None, loc, "controller"))
    except ValueError as exc:
        key = "K1" if "K1" in ct and not ct["K1"] > 0 else "K2" if "K2" in ct and not ct["K2"] > 0 else "omega_max"
        raise ConfigError(str(exc), loc.find(key, "controller")) from None

    se = raw.get("sensing", {})
    _check_keys(se, _SENSING_KEYS, "[sensing]", loc, "sensing")
    range_noise = _num(se, "range_noise", 0.0, loc, "sensing")
    velocity_noise = _num(se, "velocity_noise", 0.0, loc, "sensing")
    if range_noise < 0 or velocity_noise < 0:
        raise ConfigError("noise levels must be >= 0", loc.find(None, "sensing"))

    bl = raw.get("baseline", {})
    _check_keys(bl, _BASELINE_KEYS, "[baseline]", loc, "baseline")
    bkw = {k: _num(bl, k, None, loc, "baseline") for k in bl if not k.endswith("_deg")}
    if "cone_half_angle_deg" in bl:
        bkw["cone_half_angle"] = math.radians(_num(bl, "cone_half_angle_deg", None, loc, "baseline"))
    if "align_angle_deg" in bl:
        bkw["align_angle"] = math.radians(_num(bl, "align_angle_deg", None, loc, "baseline"))
    baseline = BaselineParams(**bkw)

    agents: list[AgentSpec] = []
    if "random" in raw:
        rd = raw["random"]
        _check_keys(rd, _RANDOM_KEYS, "[random]", loc, "random")
        if "n_agents" not in rd:
            raise ConfigError("[random] needs n_agents", loc.find(None, "random"))
        try:
            crowd = RandomCrowd(
                n_agents=_num(rd, "n_agents", None, loc, "random", kind=int),
                arena=_num(rd, "arena", 2.0, loc, "random"),
                radius=_num(rd, "radius", 0.1, loc, "random"),
                min_separation=_num(rd, "min_separation", 0.6, loc, "random"),
                min_travel=_num(rd, "min_travel", 1.0, loc, "random"),
                strategy=Strategy(rd.get("strategy", "invariant_set")),
            )
        except ValueError as exc:
            raise ConfigError(str(exc), loc.find("strategy", "random")) from None
        agents.extend(random_crowd(crowd, seed, gains, planner, margin))

    raw_agents = raw.get("agents", [])
    if not isinstance(raw_agents, list):
        raise ConfigError("agents must be an array of tables", loc.find("agents"))
    for i, a in enumerate(raw_agents):
        _check_keys(a, _AGENT_KEYS, f"agent #{i}", loc, "agents", i)
        aid = str(a.get("id", f"agent{i}"))
        radius = _num(a, "radius", 0.1, loc, "agents", i)
        if radius <= 0:
            raise ConfigError(f"agent {aid}: radius must be positive", loc.find("radius", "agents", i))
        if "start" not in a or "target" not in a:
            raise ConfigError(f"agent {aid}: start and target are required", loc.find(None, "agents", i))
        sx, sy, sh = _vec(a, "start", 3, loc, "agents", i)
        tx, ty = _vec(a, "target", 2, loc, "agents", i)
        try:
            agains = ControlGains(_num(a, "K1", gains.K1, loc, "agents", i), _num(a, "K2", gains.K2, loc, "agents", i))
            pcfg = dataclasses.replace(
                planner,
                inflation=_num(a, "inflation", radius + margin, loc, "agents", i),
                mode=ConstraintMode(a.get("mode", planner.mode)),
            )
            agents.append(
                AgentSpec(aid, radius, Pose2D(Vec2(sx, sy), sh), Vec2(tx, ty), agains, pcfg,
                          Strategy(a.get("strategy", "invariant_set")))
            )
        except ValueError as exc:
            key = "target" if "coincides" in str(exc) else None
            for k in ("K1", "K2", "mode", "strategy"):
                if k in a and k in str(exc):
                    key = k
            raise ConfigError(str(exc), loc.find(key, "agents", i)) from None

    obstacles: list[ObstacleSpec] = []
    for i, o in enumerate(raw.get("obstacles", [])):
        _check_keys(o, _OBSTACLE_KEYS, f"obstacle #{i}", loc, "obstacles", i)
        oid = str(o.get("id", f"obstacle{i}"))
        if "waypoints" in o:
            wps = o["waypoints"]
            if not (isinstance(wps, list) and all(isinstance(w, list) and len(w) == 3 for w in wps)):
                raise ConfigError("waypoints must be a list of [t, x, y]", loc.find("waypoints", "obstacles", i))
            wps = tuple(tuple(float(v) for v in w) for w in wps)
        elif "position" in o:
            px, py = _vec(o, "position", 2, loc, "obstacles", i)
            wps = ((0.0, px, py),)
        else:
            raise ConfigError(f"obstacle {oid}: needs waypoints or position", loc.find(None, "obstacles", i))
        try:
            obstacles.append(ObstacleSpec(oid, _num(o, "radius", 0.25, loc, "obstacles", i), wps))
        except ValueError as exc:
            key = "waypoints" if "waypoint" in str(exc) and "waypoints" in o else "radius" if "radius" in o else None
            raise ConfigError(str(exc), loc.find(key, "obstacles", i)) from None

    bounds = None
    if "bounds" in raw:
        bounds = tuple(_vec(raw, "bounds", 4, loc))
    try:
        return ScenarioConfig(
            name=name,
            agents=tuple(agents),
            obstacles=tuple(obstacles),
            seed=seed,
            dt=_num(raw, "dt", 1e-3, loc),
            timeout=_num(raw, "timeout", 120.0, loc),
            delta=_num(raw, "delta", 0.05, loc),
            control_hold=ControlHold(raw.get("control_hold", "feedback")),
            velocity_frame=VelocityFrame(raw.get("velocity_frame", "relative")),
            range_noise=range_noise,
            velocity_noise=velocity_noise,
            stagger=bool(raw.get("stagger", True)),
            bounds=bounds,
            baseline=baseline,
        )
    except ValueError as exc:
        key = next((k for k in ("dt", "control_hold", "velocity_frame", "timeout", "delta") if k in str(exc)), None)
        raise ConfigError(str(exc), loc.find(key) if key else None) from None
