"""Dependency-free SVG rendering of trajectories with invariant-disc overlays."""

from __future__ import annotations

from typing import Sequence

from .simulator import TraceRow, TrajectoryLog
from .scenario import ScenarioConfig

PALETTE = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
    "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f",
]


def _f(x: float) -> str:
    return f"{x:.4f}".rstrip("0").rstrip(".")


def _extent(cfg: ScenarioConfig, rows: Sequence[TraceRow]) -> tuple[float, float, float, float]:
    if cfg.bounds is not None:
        return cfg.bounds
    xs = [r.x for r in rows] + [a.target.x for a in cfg.agents]
    ys = [r.y for r in rows] + [a.target.y for a in cfg.agents]
    for o in cfg.obstacles:
        for _, x, y in o.waypoints:
            xs.append(x)
            ys.append(y)
    pad = 0.5
    return min(xs) - pad, min(ys) - pad, max(xs) + pad, max(ys) + pad


def render_svg(log: TrajectoryLog, cfg: ScenarioConfig, disc_every: float = 2.0, size: int = 640) -> str:
    """Paths per agent, start 'o' and target 'x' markers, and discs every ``disc_every`` seconds."""
    x0, y0, x1, y1 = _extent(cfg, log.rows)
    scale = size / max(x1 - x0, y1 - y0)
    w = (x1 - x0) * scale
    h = (y1 - y0) * scale

    def X(x: float) -> str:
        return _f((x - x0) * scale)

    def Y(y: float) -> str:
        return _f((y1 - y) * scale)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(w)}" height="{_f(h)}" '
        f'viewBox="0 0 {_f(w)} {_f(h)}">',
        f'<title>{cfg.name}</title>',
        f'<rect width="{_f(w)}" height="{_f(h)}" fill="white"/>',
    ]
    by_agent: dict[str, list[TraceRow]] = {}
    for r in log.rows:
        by_agent.setdefault(r.agent, []).append(r)

    for k, a in enumerate(cfg.agents):
        color = PALETTE[k % len(PALETTE)]
        rows = by_agent.get(a.id, [])
        out.append(f'<g id="{a.id}" stroke="{color}" fill="none">')
        next_disc = 0.0
        for r in rows:
            if r.disc_r is not None and r.t >= next_disc:
                out.append(
                    f'<circle cx="{X(r.Wx)}" cy="{Y(r.Wy)}" r="{_f(r.disc_r * scale)}" '
                    f'stroke-opacity="0.35" stroke-width="1"/>'
                )
                next_disc = r.t + disc_every
        p = a.start.position
        pts = [(p.x, p.y)] + [(r.x, r.y) for r in rows]
        path = " ".join(f"{X(x)},{Y(y)}" for x, y in pts)
        out.append(f'<polyline points="{path}" stroke-width="2"/>')
        out.append(f'<circle cx="{X(p.x)}" cy="{Y(p.y)}" r="{_f(a.radius * scale)}" stroke-width="1.5"/>')
        t = a.target
        s = 6
        out.append(
            f'<path d="M{_f((t.x - x0) * scale - s)} {_f((y1 - t.y) * scale - s)} l{2 * s} {2 * s} '
            f'M{_f((t.x - x0) * scale - s)} {_f((y1 - t.y) * scale + s)} l{2 * s} {-2 * s}" stroke-width="2"/>'
        )
        out.append("</g>")

    for o in cfg.obstacles:
        pts = " ".join(f"{X(x)},{Y(y)}" for _, x, y in o.waypoints)
        out.append(f'<polyline points="{pts}" stroke="black" stroke-dasharray="4 3" fill="none"/>')
        _, x, y = o.waypoints[0]
        out.append(f'<circle cx="{X(x)}" cy="{Y(y)}" r="{_f(o.radius * scale)}" fill="black" fill-opacity="0.3"/>')
    # 1 m scale bar
    out.append(
        f'<line x1="10" y1="{_f(h - 10)}" x2="{_f(10 + scale)}" y2="{_f(h - 10)}" stroke="black" stroke-width="2"/>'
    )
    out.append(f'<text x="10" y="{_f(h - 14)}" font-size="11">1 m</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"

