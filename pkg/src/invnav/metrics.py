"""Path length, average curvature, clearance, completion time and timing statistics."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:
    from .scenario import ScenarioConfig
    from .simulator import TrajectoryLog

DEFAULT_SPACING = 0.02


def _points(trace) -> np.ndarray:
    pts = np.asarray(trace, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"trace must be an (n, 2) array of positions, got shape {pts.shape}")
    return pts


def path_length(trace) -> float:
    pts = _points(trace)
    if len(pts) < 2:
        raise ValueError("path_length needs at least 2 points")
    return float(np.sum(np.hypot(*np.diff(pts, axis=0).T)))


def resample(trace, h: float = DEFAULT_SPACING) -> np.ndarray:
    """Points at uniform arc-length spacing ``h`` along the polyline (duplicates dropped)."""
    pts = _points(trace)
    seg = np.hypot(*np.diff(pts, axis=0).T)
    keep = np.concatenate([[True], seg > 0.0])
    pts = pts[keep]
    if len(pts) < 2:
        return pts
    s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])
    n = int(math.floor(s[-1] / h + 1e-9))
    q = np.arange(n + 1) * h
    return np.column_stack([np.interp(q, s, pts[:, 0]), np.interp(q, s, pts[:, 1])])


def menger(pts: np.ndarray) -> np.ndarray:
    """Three-point curvature at each interior sample; NaN where a side has zero length."""
    a, b, c = pts[:-2], pts[1:-1], pts[2:]
    ab = np.hypot(*(b - a).T)
    bc = np.hypot(*(c - b).T)
    ca = np.hypot(*(a - c).T)
    cross = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    denom = ab * bc * ca
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(denom > 0.0, 2.0 * np.abs(cross) / denom, np.nan)


def avg_curvature(trace, h: float = DEFAULT_SPACING) -> float:
    """Mean Menger curvature over interior samples of the arc-length resampled trace.

    Triples with a zero-length side are skipped; a straight triple counts as
    zero curvature rather than being dropped, otherwise a polyline's corners
    would dominate the mean.
    """
    pts = _points(trace)
    if len(pts) < 3:
        raise ValueError("avg_curvature needs at least 3 points")
    rs = resample(pts, h)
    if len(rs) < 3:
        return 0.0
    k = menger(rs)
    k = k[np.isfinite(k)]
    return float(k.mean()) if len(k) else 0.0


def duration_stats(values_ms: Iterable[float]) -> dict:
    v = np.asarray(list(values_ms), dtype=float)
    if len(v) == 0:
        return {"n": 0, "mean": None, "p50": None, "p95": None}
    return {
        "n": int(len(v)),
        "mean": float(v.mean()),
        "p50": float(np.percentile(v, 50)),
        "p95": float(np.percentile(v, 95)),
    }


@dataclass
class RunMetrics:
    path_length: dict[str, float]
    avg_curvature: dict[str, float]
    min_clearance: float | None
    completion_time: dict[str, float | None]
    plan_duration_stats: dict | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def metrics_from_traces(
    traces: dict[str, np.ndarray],
    min_clearance: float | None = None,
    completion_time: dict | None = None,
    plan_duration_stats: dict | None = None,
    h: float = DEFAULT_SPACING,
) -> RunMetrics:
    pl, kc = {}, {}
    for aid, pts in sorted(traces.items()):
        pl[aid] = path_length(pts) if len(pts) >= 2 else 0.0
        kc[aid] = avg_curvature(pts, h) if len(pts) >= 3 else 0.0
    return RunMetrics(pl, kc, min_clearance, completion_time or {}, plan_duration_stats)


def run_metrics(log: "TrajectoryLog", cfg: "ScenarioConfig | None" = None) -> dict:
    traces = log.traces()
    if cfg is not None:
        # prepend the start pose so the first planning delay does not clip the path
        for a in cfg.agents:
            p = a.start.position
            if a.id in traces and not np.array_equal(traces[a.id][0], (p.x, p.y)):
                traces[a.id] = np.vstack([[p.x, p.y], traces[a.id]])
    s = log.summary
    m = metrics_from_traces(
        traces, s.get("min_clearance"), s.get("completion_time"), s.get("plan_duration_ms")
    )
    return m.to_dict()


def read_trace(source) -> dict[str, np.ndarray]:
    """Per-agent position arrays from a trace CSV (path or text)."""
    if isinstance(source, str) and "\n" in source:
        fh = io.StringIO(source)
    else:
        fh = open(source, newline="")
    with fh:
        reader = csv.DictReader(fh)
        missing = {"t", "agent", "x", "y"} - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"trace CSV lacks columns {sorted(missing)}")
        out: dict[str, list] = {}
        for row in reader:
            out.setdefault(row["agent"], []).append((float(row["x"]), float(row["y"])))
    return {k: np.array(v) for k, v in out.items()}


COMPARISON_HEADER = [
    "scenario", "agent",
    "path_length_proposed", "path_length_decoupled", "path_length_diff",
    "avg_curvature_proposed", "avg_curvature_decoupled",
    "converged_proposed", "converged_decoupled",
]


@dataclass
class ComparisonRow:
    scenario: str
    agent: str
    path_length_proposed: float
    path_length_decoupled: float
    avg_curvature_proposed: float
    avg_curvature_decoupled: float
    converged_proposed: bool
    converged_decoupled: bool

    @property
    def path_length_diff(self) -> float:
        return self.path_length_proposed - self.path_length_decoupled

    def cells(self) -> list[str]:
        return [
            self.scenario, self.agent,
            "%.6f" % self.path_length_proposed, "%.6f" % self.path_length_decoupled,
            "%.6f" % self.path_length_diff,
            "%.6f" % self.avg_curvature_proposed, "%.6f" % self.avg_curvature_decoupled,
            str(int(self.converged_proposed)), str(int(self.converged_decoupled)),
        ]


def compare_summaries(name: str, proposed: dict, decoupled: dict) -> list[ComparisonRow]:
    """Pair per-agent metrics from two run summaries of the same scenario."""
    mp, md = proposed["metrics"], decoupled["metrics"]
    rows = []
    for aid in sorted(mp["path_length"]):
        rows.append(
            ComparisonRow(
                name, aid,
                mp["path_length"][aid], md["path_length"][aid],
                mp["avg_curvature"][aid], md["avg_curvature"][aid],
                bool(proposed["converged"][aid]), bool(decoupled["converged"][aid]),
            )
        )
    return rows


def comparison_csv(rows: Sequence[ComparisonRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COMPARISON_HEADER)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def scenario_ratios(rows: Sequence[ComparisonRow]) -> tuple[float, float]:
    """(curvature ratio proposed/decoupled, relative path-length difference) for one scenario."""
    kp = float(np.mean([r.avg_curvature_proposed for r in rows]))
    kd = float(np.mean([r.avg_curvature_decoupled for r in rows]))
    lp = sum(r.path_length_proposed for r in rows)
    ld = sum(r.path_length_decoupled for r in rows)
    ratio = kp / kd if kd > 0.0 else (0.0 if kp == 0.0 else math.inf)
    return ratio, (lp - ld) / ld if ld > 0.0 else math.inf
