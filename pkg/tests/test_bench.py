import numpy as np
import pytest

from invnav import bench
from invnav.bench import BenchMismatch, check_parallel_equal, report_csv, run_bench, synthetic_scans


def test_single_worker_speedup_is_one():
    reports = run_bench([64], 3, [1], repetitions=2)
    assert len(reports) == 1
    r = reports[0]
    assert r.speedup == 1.0
    assert r.iter_mean_ms > 0 and r.agent_mean_ms > 0 and r.total_completion > 0
    assert r.iter_p50_ms <= r.iter_p95_ms


def test_report_order_follows_request():
    reports = run_bench([32], 2, [2, 1], repetitions=1)
    assert [r.workers for r in reports] == [2, 1]
    assert reports[1].speedup == 1.0
    text = report_csv(reports)
    assert text.count("\n") == 3


def test_rejects_zero_workers():
    with pytest.raises(ValueError):
        run_bench([32], 2, [0])


def test_synthetic_scans_are_crowded_and_reproducible():
    a, cfg = synthetic_scans(128, 10, seed=1)
    b, _ = synthetic_scans(128, 10, seed=1)
    assert a == b
    hits = [m for m in a[0] if m.range < cfg.d_max]
    assert hits and all(m.speed >= 0.0 for m in hits)


def test_mismatch_is_detected(monkeypatch):
    scans, cfg = synthetic_scans(64, 2)
    real = bench.build_planner_function

    def skewed(M, cfg, workers=1):
        D = real(M, cfg, workers=workers)
        if workers > 1:
            D.radii[3] = np.nextafter(D.radii[3], 0.0)
        return D

    monkeypatch.setattr(bench, "build_planner_function", skewed)
    with pytest.raises(BenchMismatch, match="bin 3"):
        check_parallel_equal(scans, cfg, 2)


def test_backend_argument_restores_previous():
    from invnav import kernels

    before = kernels.backend_name()
    r = run_bench([32], 2, [1], repetitions=1, backend="python")
    assert r[0].backend == "python"
    assert kernels.backend_name() == before
