import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invnav.geometry import InvariantDisc, MeasurementTuple, Vec2
from invnav.oracles import bisection_radius, random_measurement_set
from invnav.planner import (
    ConstraintMode,
    PlannerConfig,
    PlannerFunction,
    beam_bearings,
    build_planner_function,
    constraint_mode,
    max_safe_radius,
    one_period_clearance,
    select_waypoint,
)

EPS = 1e-3


def empty_scan(cfg):
    return [MeasurementTuple(cfg.d_max, float(t)) for t in beam_bearings(64)]


def two_neighbours(cfg):
    b = beam_bearings(64)
    M = empty_scan(cfg)
    M[8] = MeasurementTuple(1.0, float(b[8]))
    M[9] = MeasurementTuple(0.95, float(b[9]))
    M[10] = MeasurementTuple(1.0, float(b[10]))
    M[48] = MeasurementTuple(1.5, float(b[48]), Vec2(0.0, 0.3))
    M[49] = MeasurementTuple(1.45, float(b[49]), Vec2(0.0, 0.3))
    return M


# bisection oracle output for two_neighbours with 16 bins, inflation 0.15
GOLDEN_TWO_NEIGHBOURS = [
    0.569232334, 0.444422935, 0.400670405, 0.414449698, 0.49653498, 0.691702125, 1.415295876, 2.0,
    2.0, 1.499537555, 0.897905145, 0.707970184, 0.636970617, 0.659437381, 0.79694975, 0.916524312,
]


def test_bearings_start_ahead_and_wrap():
    b = beam_bearings(8)
    assert b[0] == 0.0
    assert b[4] == pytest.approx(math.pi)
    assert np.all((b > -math.pi) & (b <= math.pi))


def test_config_validation():
    with pytest.raises(ValueError):
        PlannerConfig(n_beams=4)
    with pytest.raises(ValueError):
        PlannerConfig(epsilon=0.0)
    with pytest.raises(ValueError):
        PlannerConfig(inflation=-1.0)
    assert PlannerConfig(mode="known_dir").mode is ConstraintMode.KNOWN_DIR


def test_static_point_ahead():
    cfg = PlannerConfig()
    assert max_safe_radius(0.0, [MeasurementTuple(2.0, 0.0)], cfg) == pytest.approx(1.0 - EPS, abs=1e-12)


def test_static_point_behind_hits_cap():
    cfg = PlannerConfig()
    assert max_safe_radius(0.0, [MeasurementTuple(2.0, math.pi)], cfg) == cfg.cap == 2.0


def test_moving_point_toward_agent():
    cfg = PlannerConfig(f_p=10.0)
    M = [MeasurementTuple(2.0, 0.0, Vec2(-1.0, 0.0))]
    assert max_safe_radius(0.0, M, cfg) == pytest.approx(0.95 - EPS, abs=1e-12)


def test_empty_world_all_cap():
    cfg = PlannerConfig(inflation=0.15)
    D = build_planner_function(empty_scan(cfg), cfg)
    assert np.all(D.radii == cfg.cap)
    assert not D.blocked


def test_single_point_matches_closed_form_every_bin():
    cfg = PlannerConfig(n_beams=32)
    rho, th = 2.0, 0.3
    D = build_planner_function([MeasurementTuple(rho, th)], cfg)
    for t, r in zip(D.bearings, D.radii):
        c = math.cos(th - t)
        expected = cfg.cap if c <= 0 else min(cfg.cap, rho / (2 * c) - EPS)
        assert r == pytest.approx(max(expected, 0.0), abs=1e-12)


def test_two_neighbours_golden():
    cfg = PlannerConfig(n_beams=16, inflation=0.15)
    D = build_planner_function(two_neighbours(cfg), cfg)
    np.testing.assert_allclose(D.radii, GOLDEN_TWO_NEIGHBOURS, atol=1e-8)
    # occupied sectors dip, the free sector between them is full
    assert D.radii[2] < 0.5 and D.radii[7] == cfg.cap and D.radii[12] < 0.7


@pytest.mark.parametrize("mode", list(ConstraintMode))
def test_closed_form_matches_bisection(mode, backend):
    rng = np.random.default_rng([42, int(list(ConstraintMode).index(mode))])
    worst = 0.0
    for _ in range(40):
        M, cfg = random_measurement_set(rng, PlannerConfig(n_beams=16, mode=mode, inflation=0.12))
        for t in cfg.bearings():
            worst = max(worst, abs(max_safe_radius(float(t), M, cfg) - bisection_radius(float(t), M, cfg)))
    assert worst <= 1e-6


def test_radii_nonnegative_and_clamped():
    rng = np.random.default_rng(5)
    for _ in range(20):
        M, cfg = random_measurement_set(rng)
        D = build_planner_function(M, cfg)
        assert np.all(D.radii >= 0.0) and np.all(D.radii <= cfg.cap)
        assert np.all((D.radii == 0.0) | (D.radii >= cfg.epsilon))


def test_boxed_in_returns_zero():
    cfg = PlannerConfig(n_beams=16)
    M = [MeasurementTuple(EPS, float(t)) for t in beam_bearings(64)]
    D = build_planner_function(M, cfg)
    assert D.blocked
    choice = select_waypoint(D, Vec2(3.0, 0.0), cfg)
    assert choice.W == Vec2(0.0, 0.0) and choice.d == 0.0 and not choice.latched


def test_conservativity_ordering():
    rng = np.random.default_rng(9)
    for _ in range(30):
        base, cfg = random_measurement_set(rng, PlannerConfig(n_beams=16, inflation=0.1, v_max=0.4))
        M = [m if m.speed <= cfg.v_max else MeasurementTuple(m.range, m.bearing, m.velocity * (cfg.v_max / m.speed))
             for m in base]
        r = {mode: build_planner_function(M, PlannerConfig(n_beams=16, inflation=0.1, v_max=0.4, mode=mode)).radii
             for mode in ConstraintMode}
        assert np.all(r[ConstraintMode.WORST_BOTH] <= r[ConstraintMode.KNOWN_SPEED] + 1e-12)
        assert np.all(r[ConstraintMode.KNOWN_SPEED] <= r[ConstraintMode.NOMINAL] + 1e-12)


def test_constraint_mode_examples():
    cfg = PlannerConfig()
    disc = InvariantDisc.along(0.0, 1.0)
    assert constraint_mode(MeasurementTuple(2.0 + EPS, 0.0), disc, cfg)
    assert not constraint_mode(MeasurementTuple(2.0 - EPS, 0.0), disc, cfg)
    # direction misses the disc: admissible whatever v_max is
    kd = PlannerConfig(mode=ConstraintMode.KNOWN_DIR, v_max=100.0)
    assert constraint_mode(MeasurementTuple(2.1, 0.0, Vec2(0.0, 0.5)), disc, kd)
    assert not constraint_mode(MeasurementTuple(2.1, 0.0, Vec2(-0.5, 0.0)), disc, kd)


@settings(max_examples=200)
@given(
    st.floats(0.2, 4.0), st.floats(-math.pi, math.pi), st.floats(-math.pi, math.pi),
    st.floats(0.05, 1.9), st.floats(-math.pi, math.pi),
)
def test_worst_both_implies_nominal_at_vmax(rho, th, vdir, d, bearing):
    cfg = PlannerConfig(v_max=0.5)
    worst = PlannerConfig(v_max=0.5, mode=ConstraintMode.WORST_BOTH)
    disc = InvariantDisc.along(bearing, d)
    moving = MeasurementTuple(rho, th, Vec2.polar(cfg.v_max, vdir))
    if constraint_mode(MeasurementTuple(rho, th), disc, worst):
        assert constraint_mode(moving, disc, cfg)


def test_select_waypoint_examples():
    cfg = PlannerConfig(n_beams=8)
    b = beam_bearings(8)
    one = PlannerFunction(b, np.where(np.arange(8) == 0, 1.0, 0.0))
    c = select_waypoint(one, Vec2(5.0, 0.0), cfg)
    assert c.W == Vec2(1.0, 0.0) and c.distance == pytest.approx(4.0) and not c.latched
    c = select_waypoint(one, Vec2(0.5, 0.0), cfg)
    assert c.W == Vec2(0.5, 0.0) and c.latched
    uniform = PlannerFunction(b, np.ones(8))
    c = select_waypoint(uniform, Vec2(0.0, 3.0), cfg)
    assert c.theta_index == 2
    assert c.W.x == pytest.approx(0.0, abs=1e-15) and c.W.y == pytest.approx(1.0)


def test_select_waypoint_grid_oracle():
    rng = np.random.default_rng(3)
    cfg = PlannerConfig(n_beams=16)
    b = beam_bearings(16)
    for _ in range(50):
        D = PlannerFunction(b, rng.uniform(0.0, 2.0, 16))
        T = Vec2(*rng.uniform(-3, 3, 2))
        c = select_waypoint(D, T, cfg)
        assert c.d <= D.radii[c.theta_index] and abs(c.W.norm() - c.d) < 1e-12
        grid = min(
            math.hypot(T.x - d * math.cos(t), T.y - d * math.sin(t))
            for t, r in zip(b, D.radii) for d in np.linspace(0.0, r, 401)
        )
        assert c.distance <= grid + 1e-12


def test_ties_go_to_lowest_bin():
    cfg = PlannerConfig(n_beams=8)
    D = PlannerFunction(beam_bearings(8), np.full(8, 0.5))
    assert select_waypoint(D, Vec2(-3.0, 0.0), cfg).theta_index == 4
    assert select_waypoint(D, Vec2(0.0, 0.0), cfg).theta_index == 0


def test_waypoint_progress_in_empty_world():
    cfg = PlannerConfig(n_beams=32)
    D = build_planner_function(empty_scan(cfg), cfg)
    T = Vec2(7.0, 2.0)
    last = math.inf
    for _ in range(10):
        c = select_waypoint(D, T, cfg)
        assert c.distance <= last + 1e-12
        last = c.distance
        T = T - c.W * 0.5  # agent moves half way to W
    assert last < 0.5


@pytest.mark.parametrize("workers", [2, 3, 8])
def test_parallel_bitwise_equal(workers, backend):
    rng = np.random.default_rng(11)
    M, cfg = random_measurement_set(rng, PlannerConfig(n_beams=257, inflation=0.1))
    a = build_planner_function(M, cfg, workers=1).radii
    b = build_planner_function(M, cfg, workers=workers).radii
    assert a.tobytes() == b.tobytes()


def test_one_period_safety_of_chosen_disc():
    rng = np.random.default_rng(17)
    for _ in range(100):
        M, cfg = random_measurement_set(rng, PlannerConfig(n_beams=32, inflation=0.1))
        D = build_planner_function(M, cfg)
        c = select_waypoint(D, Vec2(*rng.uniform(-5, 5, 2)), cfg)
        if c.d == 0.0:
            continue
        body = [m for m in M if m.range < cfg.d_max]
        if body:
            assert one_period_clearance(body, c.disc, cfg).min() >= cfg.inflation
