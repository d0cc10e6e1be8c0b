"""Command-line entry points: run, bench, verify, compare."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import kernels
from .bench import BenchMismatch, report_csv, run_bench
from .metrics import compare_summaries, comparison_csv, scenario_ratios
from .planner import ConstraintMode
from .scenario import ConfigError, Strategy, load_scenario, random_scenario
from .simulator import run_scenario

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def available_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # not on Linux
        return os.cpu_count() or 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(kind):
    def conv(text):
        value = kind(text)
        if value < 1:
            raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
        return value

    return conv


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="invnav", description=__doc__)
    p.add_argument("--backend", choices=sorted(kernels.BACKENDS), help="kernel backend (default: compiled if built)")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="simulate one scenario file")
    r.add_argument("scenario", type=Path)
    r.add_argument("-o", "--out", type=Path, default=Path("out"))
    r.add_argument("--plot", action="store_true", help="also write trace.svg")
    r.add_argument("--mode", choices=[m.value for m in ConstraintMode], help="override the planner constraint mode")
    r.add_argument("--strategy", choices=[s.value for s in Strategy], help="override every agent's strategy")
    r.add_argument("--workers", type=_positive(int), default=available_workers())
    r.add_argument("--timing", action="store_true", help="record wall-clock planning durations (not reproducible)")

    b = sub.add_parser("bench", help="time planner construction across beams and workers")
    b.add_argument("--beams", type=_positive(int), nargs="+", default=[128, 256, 512, 1024])
    b.add_argument("--agents", type=_positive(int), default=10)
    b.add_argument("--workers", type=_positive(int), nargs="+", default=[1, 2, 4])
    b.add_argument("--repetitions", type=_positive(int), default=5)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("-o", "--out", type=Path, default=Path("bench.csv"))

    v = sub.add_parser("verify", help="run the oracle cross-check suite")
    v.add_argument("--seeds", type=_positive(int), default=1, help="number of independent suites")
    v.add_argument("--seed", type=int, default=0, help="first suite seed")
    v.add_argument("--quick", action="store_true", help="reduced sample counts")

    c = sub.add_parser("compare", help="paired proposed-vs-decoupled runs written as a comparison CSV")
    c.add_argument("scenarios", type=Path, nargs="*", help="scenario files (default: random crowds)")
    c.add_argument("--agents", type=_positive(int), default=4, help="agents per random crowd")
    c.add_argument("--count", type=_positive(int), default=12, help="number of random crowds")
    c.add_argument("--seed", type=int, default=0, help="first random crowd seed")
    c.add_argument("--workers", type=_positive(int), default=available_workers())
    c.add_argument("-o", "--out", type=Path, default=Path("comparison.csv"))
    return p


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_run(args) -> int:
    cfg = load_scenario(args.scenario)
    if args.mode:
        cfg = cfg.with_mode(ConstraintMode(args.mode))
    if args.strategy:
        cfg = cfg.with_strategy(Strategy(args.strategy))
    log = run_scenario(cfg, workers=args.workers, record_timing=args.timing)
    args.out.mkdir(parents=True, exist_ok=True)
    _write(args.out / "trace.csv", log.to_csv())
    _write(args.out / "metrics.json", log.summary_json())
    if args.plot:
        from .plotting import render_svg

        _write(args.out / "trace.svg", render_svg(log, cfg))
    s = log.summary
    print(
        f"{cfg.name}: {sum(s['converged'].values())}/{s['n_agents']} converged at t={s['final_time']:.2f}s, "
        f"collisions={s['collisions']}, safety violations={s['safety_violations']}, "
        f"min clearance={s['min_clearance']}"
    )
    if not s["all_converged"]:
        stuck = ", ".join(k for k, ok in s["converged"].items() if not ok)
        print(f"warning: not converged within {cfg.timeout}s: {stuck}", file=sys.stderr)
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        reports = run_bench(args.beams, args.agents, args.workers, args.repetitions, args.seed)
    except BenchMismatch as exc:
        print(f"error: parallel output differs from serial: {exc}", file=sys.stderr)
        return EXIT_FAIL
    _write(args.out, report_csv(reports))
    for r in reports:
        print(
            f"beams={r.n_beams:5d} agents={r.n_agents} workers={r.workers}  "
            f"iter {r.iter_mean_ms:8.2f} ms  agent {r.agent_mean_ms:7.3f} ms  speedup {r.speedup:.2f}"
        )
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import SuiteSize, format_table, run_suite

    size = SuiteSize.quick() if args.quick else SuiteSize()
    ok = True
    t0 = time.perf_counter()
    print(f"backend: {kernels.backend_name()}")
    for seed in range(args.seed, args.seed + args.seeds):
        results = run_suite(seed, size)
        print(format_table(results, seed))
        ok &= all(r.passed for r in results)
    print(f"{'all checks passed' if ok else 'FAILED'} in {time.perf_counter() - t0:.1f}s")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_compare(args) -> int:
    if args.scenarios:
        configs = [load_scenario(p) for p in args.scenarios]
    else:
        configs = [random_scenario(args.agents, s) for s in range(args.seed, args.seed + args.count)]
    rows = []
    for cfg in configs:
        prop = run_scenario(cfg.with_strategy(Strategy.INVARIANT_SET), workers=args.workers).summary
        base = run_scenario(cfg.with_strategy(Strategy.DECOUPLED_BASELINE), workers=args.workers).summary
        pair = compare_summaries(cfg.name, prop, base)
        ratio, dl = scenario_ratios(pair)
        print(f"{cfg.name}: curvature ratio {ratio:.3f}, path length diff {100 * dl:+.1f}%")
        rows += pair
    _write(args.out, comparison_csv(rows))
    return EXIT_OK


COMMANDS = {"run": cmd_run, "bench": cmd_bench, "verify": cmd_verify, "compare": cmd_compare}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.backend:
        kernels.use_backend(args.backend)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
