"""Oracle cross-check suite behind ``invnav verify``."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import oracles
from .controller import control_array
from .planner import max_safe_radius
from .scenario import random_scenario
from .simulator import run_scenario


@dataclass
class CheckResult:
    name: str
    value: float
    limit: float
    passed: bool
    seconds: float
    detail: str = ""


@dataclass(frozen=True)
class SuiteSize:
    bound_samples: int = 1_000_000
    radius_sets: int = 1000
    dual_cases: int = 20
    closed_loop_runs: int = 100
    safety_agents: int = 4

    @classmethod
    def quick(cls) -> SuiteSize:
        return cls(100_000, 150, 4, 30, 2)


def check_bounds(seed: int, n: int) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng([seed, 10])
    K1 = rng.uniform(0.05, 1.0, n)
    K2 = rng.uniform(0.1, 3.0, n)
    R = np.exp(rng.uniform(math.log(1e-9), math.log(50.0), n))
    psi = rng.uniform(-math.pi, math.pi, n)
    # branch follows psi at invocation, so |sigma| <= pi/2 as the state requires
    anti = np.cos(psi) < 0.0
    v, w = control_array(R, psi, anti, K1, K2)
    bad = int(np.sum(np.abs(v) > K1) + np.sum(np.abs(w) > K2 * math.pi / 2.0 + K1))
    return CheckResult("controller input bounds", bad, 0, bad == 0, time.perf_counter() - t0, f"{n} samples")


def check_radius_oracle(seed: int, n: int) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng([seed, 11])
    worst = 0.0
    for _ in range(n):
        M, cfg = oracles.random_measurement_set(rng)
        if rng.random() < 0.5:
            theta = float(rng.choice(cfg.bearings()))
        else:
            theta = float(rng.uniform(-math.pi, math.pi))
        worst = max(worst, abs(max_safe_radius(theta, M, cfg) - oracles.bisection_radius(theta, M, cfg)))
    return CheckResult(
        "closed form vs bisection radius", worst, 1e-6, worst <= 1e-6, time.perf_counter() - t0, f"{n} sets, all modes"
    )


def check_dual_integration(seed: int, n: int) -> CheckResult:
    t0 = time.perf_counter()
    gap = max(oracles.dual_integration_gap(c) for c in oracles.random_cases(n, seed + 1000))
    return CheckResult("polar vs global integration", gap, 1e-9, gap <= 1e-9, time.perf_counter() - t0, f"{n} runs, 1 s")


def check_invariance(seed: int, n: int) -> list[CheckResult]:
    t0 = time.perf_counter()
    res = oracles.closed_loop(oracles.random_cases(n, seed))
    dt = time.perf_counter() - t0
    growth = float(res.max_R_ratio.max())
    sig = float(res.max_sigma_after.max())
    return [
        CheckResult("invariance max R/R0", growth, 1.001, growth <= 1.001, dt, f"{n} runs"),
        CheckResult("sigma after settle time", sig, 1e-3, sig <= 1e-3, 0.0, f"{res.branch_crossings} branch crossings"),
    ]


def check_safety(seed: int, n_agents: int) -> CheckResult:
    t0 = time.perf_counter()
    s = run_scenario(random_scenario(n_agents, seed, timeout=60.0)).summary
    bad = s["safety_violations"] + s["collisions"]
    return CheckResult(
        "one-period safety + collisions", bad, 0, bad == 0, time.perf_counter() - t0,
        f"{s['safety_checks']} instances, {n_agents} agents",
    )


def run_suite(seed: int = 0, size: SuiteSize | None = None) -> list[CheckResult]:
    size = size or SuiteSize()
    out = [
        check_bounds(seed, size.bound_samples),
        check_radius_oracle(seed, size.radius_sets),
        check_dual_integration(seed, size.dual_cases),
    ]
    out += check_invariance(seed, size.closed_loop_runs)
    out.append(check_safety(seed, size.safety_agents))
    return out


def format_table(results: list[CheckResult], seed: int | None = None) -> str:
    lines = []
    if seed is not None:
        lines.append(f"suite seed {seed}")
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"  {status}  {r.name:<{width}}  {r.value:.3g} (limit {r.limit:g})  {r.seconds:.2f}s  {r.detail}")
    return "\n".join(lines)
