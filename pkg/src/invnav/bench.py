"""Timing of planner-function construction across beam counts and worker counts."""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, dataclass, fields
from typing import Sequence

import numpy as np

from . import kernels
from .geometry import MeasurementTuple, Vec2
from .planner import ConstraintMode, PlannerConfig, build_planner_function


class BenchMismatch(RuntimeError):
    """Parallel planner output differs from the serial output."""


@dataclass
class BenchReport:
    n_beams: int
    n_agents: int
    workers: int
    backend: str
    repetitions: int
    total_completion: float
    iter_mean_ms: float
    iter_p50_ms: float
    iter_p95_ms: float
    agent_mean_ms: float
    agent_p50_ms: float
    agent_p95_ms: float
    speedup: float


def synthetic_scans(
    n_beams: int, n_agents: int, seed: int = 0, arena: float = 2.0, radius: float = 0.1, speed: float = 0.3
) -> tuple[list[list[MeasurementTuple]], PlannerConfig]:
    """One scan per agent of a random crowd; every body moves, so all returns carry velocity."""
    rng = np.random.default_rng([seed, 3])
    cfg = PlannerConfig(n_beams=n_beams, mode=ConstraintMode.NOMINAL, inflation=radius + 0.05)
    pos = rng.uniform(-arena, arena, size=(n_agents, 2))
    vel = [Vec2.polar(float(rng.uniform(0.0, speed)), float(rng.uniform(-math.pi, math.pi))) for _ in range(n_agents)]
    heads = rng.uniform(-math.pi, math.pi, size=n_agents)
    bearings = cfg.bearings()
    scans = []
    for i in range(n_agents):
        others = [j for j in range(n_agents) if j != i]
        cx = pos[others, 0]
        cy = pos[others, 1]
        cr = np.full(len(others), radius)
        ranges, hits = kernels.raycast(pos[i, 0], pos[i, 1], heads[i], bearings, cfg.d_max, cx, cy, cr)
        scan = []
        for n in range(n_beams):
            j = int(hits[n])
            if j < 0:
                scan.append(MeasurementTuple(cfg.d_max, float(bearings[n])))
            else:
                v = (vel[others[j]] - vel[i]).rotated(-heads[i])
                scan.append(MeasurementTuple(float(ranges[n]), float(bearings[n]), v))
        scans.append(scan)
    return scans, cfg


def check_parallel_equal(scans, cfg: PlannerConfig, workers: int) -> None:
    for k, M in enumerate(scans):
        a = build_planner_function(M, cfg, workers=1).radii
        b = build_planner_function(M, cfg, workers=workers).radii
        if a.tobytes() != b.tobytes():
            bad = int(np.flatnonzero(a != b)[0])
            raise BenchMismatch(
                f"agent {k}: workers={workers} differs from serial at bin {bad} ({b[bad]!r} vs {a[bad]!r})"
            )


def time_iterations(scans, cfg: PlannerConfig, workers: int, repetitions: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-iteration (all agents) and per-agent durations in milliseconds."""
    per_iter, per_agent = [], []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        for M in scans:
            a0 = time.perf_counter()
            build_planner_function(M, cfg, workers=workers)
            per_agent.append((time.perf_counter() - a0) * 1e3)
        per_iter.append((time.perf_counter() - t0) * 1e3)
    return np.array(per_iter), np.array(per_agent)


def run_bench(
    beams: Sequence[int],
    n_agents: int,
    workers: Sequence[int],
    repetitions: int = 5,
    seed: int = 0,
    backend: str | None = None,
) -> list[BenchReport]:
    if any(w < 1 for w in workers):
        raise ValueError("worker counts must be >= 1")
    if backend is not None:
        previous = kernels.backend_name()
        kernels.use_backend(backend)
    try:
        reports = []
        for nb in beams:
            scans, cfg = synthetic_scans(nb, n_agents, seed)
            for w in workers:
                if w > 1:
                    check_parallel_equal(scans, cfg, w)
            build_planner_function(scans[0], cfg)  # warm-up
            base = None
            rows = []
            for w in sorted(set(workers), key=lambda w: (w != 1, w)):
                t0 = time.perf_counter()
                it, ag = time_iterations(scans, cfg, w, repetitions)
                total = time.perf_counter() - t0
                mean = float(it.mean())
                if w == 1:
                    base = mean
                rows.append((w, total, it, ag, mean))
            for w, total, it, ag, mean in sorted(rows, key=lambda r: workers.index(r[0])):
                reports.append(
                    BenchReport(
                        nb, n_agents, w, kernels.backend_name(), repetitions, total,
                        mean, float(np.percentile(it, 50)), float(np.percentile(it, 95)),
                        float(ag.mean()), float(np.percentile(ag, 50)), float(np.percentile(ag, 95)),
                        1.0 if w == 1 else (base / mean if base is not None else math.nan),
                    )
                )
        return reports
    finally:
        if backend is not None:
            kernels.use_backend(previous)


def report_csv(reports: Sequence[BenchReport]) -> str:
    buf = io.StringIO()
    names = [f.name for f in fields(BenchReport)]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for r in reports:
        d = asdict(r)
        w.writerow([f"{d[k]:.6g}" if isinstance(d[k], float) else d[k] for k in names])
    return buf.getvalue()
