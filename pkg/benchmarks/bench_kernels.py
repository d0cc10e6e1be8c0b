"""Compiled kernels vs the numpy fallback on the three hot loops.

    python benchmarks/bench_kernels.py --beams 256 1024 --repeat 5
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from invnav import kernels
from invnav.bench import synthetic_scans
from invnav.planner import encode


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def planner_case(backend, n_beams: int):
    scans, cfg = synthetic_scans(n_beams, 10)
    enc = encode(scans[0], cfg)
    bearings = cfg.bearings()
    args = (bearings, enc.px, enc.py, enc.sx, enc.sy, enc.margin, enc.slack, cfg.cap, cfg.epsilon, 1)
    return lambda: backend.planner_radii(*args), backend.planner_radii(*args)


def raycast_case(backend, n_beams: int):
    rng = np.random.default_rng(0)
    cx, cy = rng.uniform(-3, 3, (2, 30))
    cr = np.full(30, 0.1)
    bearings = np.linspace(-np.pi, np.pi, n_beams, endpoint=False)
    call = lambda: backend.raycast(0.0, 0.0, 0.3, bearings, 4.0, cx, cy, cr)  # noqa: E731
    return call, call()[0]


def advance_case(backend, n_agents: int = 10, n_steps: int = 100):
    rng = np.random.default_rng(1)
    base = rng.uniform(-2, 2, (3, n_agents))
    w = rng.uniform(-2, 2, (2, n_agents))
    z = np.zeros(n_agents)
    e = np.zeros(0)

    def call():
        x, y, h = (a.copy() for a in base)
        backend.advance(
            x, y, h, np.ones(n_agents, dtype=np.int64), z, z, w[0], w[1], np.zeros(n_agents, dtype=np.int64),
            np.full(n_agents, 0.2), np.ones(n_agents), np.full(n_agents, 0.1), np.ones(n_agents),
            e, e, e, e, e, n_steps, 1e-3,
        )
        return np.concatenate([x, y, h])

    return call, call()


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--beams", type=int, nargs="+", default=[256, 1024])
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)
    if "compiled" not in kernels.BACKENDS:
        print("compiled extension not built; only the fallback is available")
        return 1
    comp, py = kernels.get("compiled"), kernels.get("python")
    cases = []
    for nb in args.beams:
        cases.append((f"planner_radii {nb}x{nb}", lambda b, nb=nb: planner_case(b, nb)))
        cases.append((f"raycast {nb} beams x 30 bodies", lambda b, nb=nb: raycast_case(b, nb)))
    cases.append(("advance 10 agents x 100 RK4 steps", advance_case))
    print(f"{'kernel':<36} {'compiled ms':>12} {'python ms':>12} {'ratio':>8}  max |diff|")
    for name, make in cases:
        fc, rc = make(comp)
        fp, rp = make(py)
        tc = best_of(fc, args.repeat) * 1e3
        tp = best_of(fp, args.repeat) * 1e3
        diff = float(np.max(np.abs(np.asarray(rc) - np.asarray(rp))))
        print(f"{name:<36} {tc:12.3f} {tp:12.3f} {tp / tc:8.1f}  {diff:.2e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
