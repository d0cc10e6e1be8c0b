import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invnav.geometry import (
    UNBOUNDED,
    InvariantDisc,
    MeasurementTuple,
    Vec2,
    d_dir,
    d_min,
    segment_clearance,
    wrap_angle,
)

coord = st.floats(-20, 20, allow_nan=False)
angle = st.floats(-math.pi, math.pi, allow_nan=False)


def test_vec2_arithmetic():
    a, b = Vec2(1.0, 2.0), Vec2(-3.0, 0.5)
    assert a + b == Vec2(-2.0, 2.5)
    assert a - b == Vec2(4.0, 1.5)
    assert a * 2 == Vec2(2.0, 4.0)
    assert -a == Vec2(-1.0, -2.0)
    assert a.dot(b) == pytest.approx(-2.0)
    assert Vec2(3.0, 4.0).norm() == 5.0
    assert Vec2(0.0, 2.0).unit() == Vec2(0.0, 1.0)
    r = Vec2(1.0, 0.0).rotated(math.pi / 2)
    assert r.x == pytest.approx(0.0, abs=1e-15) and r.y == pytest.approx(1.0)


def test_vec2_rejects_non_finite():
    with pytest.raises(ValueError):
        Vec2(math.nan, 0.0)
    with pytest.raises(ValueError):
        Vec2(0.0, math.inf)


def test_disc_along_puts_origin_on_boundary():
    L = InvariantDisc.along(0.7, 1.3)
    assert L.center.norm() == pytest.approx(1.3, rel=1e-12)
    assert L.has_agent_on_boundary()
    with pytest.raises(ValueError):
        InvariantDisc(Vec2(0.0, 0.0), -1.0)


def test_measurement_point_and_speed():
    m = MeasurementTuple(2.0, math.pi / 2, Vec2(3.0, 4.0))
    assert m.point.x == pytest.approx(0.0, abs=1e-15)
    assert m.point.y == pytest.approx(2.0)
    assert m.speed == 5.0
    assert not m.is_static
    assert MeasurementTuple(1.0, 0.0).is_static


@pytest.mark.parametrize(
    "p, center, r, expected",
    [
        ((2, 0), (1, 0), 1.0, 0.0),
        ((3, 0), (1, 0), 1.0, 1.0),
        # |(2,2) - (1,1)| equals the radius, so this point sits on the boundary
        ((2, 2), (1, 1), math.sqrt(2), 0.0),
        ((3, 3), (1, 1), math.sqrt(2), math.sqrt(2)),
    ],
)
def test_d_min_examples(p, center, r, expected):
    assert d_min(Vec2(*p), InvariantDisc(Vec2(*center), r)) == pytest.approx(expected, abs=1e-12)


def test_d_min_matches_sampled_boundary():
    L = InvariantDisc(Vec2(1.0, 1.0), math.sqrt(2))
    t = np.linspace(0, 2 * np.pi, 100_000, endpoint=False)
    bx = 1 + math.sqrt(2) * np.cos(t)
    by = 1 + math.sqrt(2) * np.sin(t)
    sampled = np.min(np.hypot(bx - 2, by - 2))
    assert d_min(Vec2(2.0, 2.0), L) == pytest.approx(sampled, abs=1e-8)


def test_d_dir_examples():
    L = InvariantDisc(Vec2(0.5, 0.0), 0.5)
    P = Vec2(2.0, 0.0)
    assert d_dir(P, Vec2(-1.0, 0.0), L) == pytest.approx(1.0)
    assert d_dir(P, Vec2(0.0, 1.0), L) == UNBOUNDED
    toward = (L.center - P).unit()
    assert d_dir(P, toward, L) == pytest.approx(d_min(P, L), abs=1e-12)


def test_d_dir_grazing_ray_is_stable():
    L = InvariantDisc(Vec2(0.0, 0.0), 1.0)
    # ray along y = 1 - 1e-12 from far away: enters near the top of the circle
    t = d_dir(Vec2(-5.0, 1.0 - 1e-12), Vec2(1.0, 0.0), L)
    assert math.isfinite(t)
    assert t == pytest.approx(5.0, abs=2e-6)


@pytest.mark.parametrize("a, expected", [(0.0, 0.0), (3 * math.pi / 2, -math.pi / 2), (-math.pi, math.pi), (math.pi, math.pi)])
def test_wrap_angle_examples(a, expected):
    assert wrap_angle(a) == pytest.approx(expected, abs=1e-15)


@given(st.floats(-1e4, 1e4, allow_nan=False))
def test_wrap_angle_range_idempotent_periodic(a):
    w = wrap_angle(a)
    assert -math.pi < w <= math.pi
    assert wrap_angle(w) == w
    assert math.cos(wrap_angle(a + 2 * math.pi)) == pytest.approx(math.cos(w), abs=1e-9)
    assert math.sin(wrap_angle(a + 2 * math.pi)) == pytest.approx(math.sin(w), abs=1e-9)


@settings(max_examples=300)
@given(coord, coord, coord, coord, st.floats(0.01, 5), st.floats(0.0, 3.0))
def test_d_min_radial_shift(px, py, cx, cy, r, delta):
    P, C = Vec2(px, py), Vec2(cx, cy)
    if (P - C).norm() < 1e-6:
        return
    L = InvariantDisc(C, r)
    P2 = C + (P - C).unit() * ((P - C).norm() + delta)
    assert d_min(P2, L) - d_min(P, L) == pytest.approx(delta, abs=1e-12 * max(1.0, abs(px) + abs(py) + abs(cx) + abs(cy)))


@settings(max_examples=300)
@given(coord, coord, coord, coord, st.floats(0.01, 5), angle)
def test_d_dir_at_least_d_min(px, py, cx, cy, r, a):
    P, L = Vec2(px, py), InvariantDisc(Vec2(cx, cy), r)
    if d_min(P, L) <= 0.0:
        return
    t = d_dir(P, Vec2.polar(1.0, a), L)
    if math.isfinite(t):
        assert t >= d_min(P, L) - 1e-9
    toward = (L.center - P).unit()
    assert d_dir(P, toward, L) == pytest.approx(d_min(P, L), abs=1e-9)


def test_segment_clearance():
    L = InvariantDisc(Vec2(0.0, 0.0), 1.0)
    assert segment_clearance(Vec2(3.0, 0.0), Vec2(-1.0, 0.0), L) == pytest.approx(1.0)
    assert segment_clearance(Vec2(3.0, -2.0), Vec2(0.0, 4.0), L) == pytest.approx(2.0)
    assert segment_clearance(Vec2(3.0, 0.0), Vec2(1.0, 0.0), L) == pytest.approx(2.0)
