import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from invnav import kernels


def _sampled(px, py, sx, sy, m, ux, uy, tau):
    qx, qy = px + tau * sx, py + tau * sy
    den = qx * ux + qy * uy + m
    num = qx * qx + qy * qy - m * m
    blocked = np.where(num <= 0.0, 0.0, np.inf)  # touching the agent
    return np.maximum(np.where(den > 0.0, num / (2.0 * np.where(den > 0.0, den, 1.0)), blocked), 0.0)


def brute_threshold(px, py, sx, sy, m, ux, uy, n=2001, rounds=6):
    """Grid minimum over the sweep, refined around the best sample."""
    lo, hi = 0.0, 1.0
    best = math.inf
    for _ in range(rounds):
        tau = np.linspace(lo, hi, n)
        vals = _sampled(px, py, sx, sy, m, ux, uy, tau)
        k = int(np.argmin(vals))
        best = min(best, float(vals[k]))
        step = (hi - lo) / (n - 1)
        lo, hi = max(0.0, tau[k] - 2 * step), min(1.0, tau[k] + 2 * step)
    return best


coord = st.floats(-3.0, 3.0)


@settings(max_examples=300, deadline=None)
# swept points always carry a body margin; only static free-space returns have m = 0
@given(coord, coord, coord, coord, st.floats(0.01, 0.5), st.floats(-math.pi, math.pi))
def test_seg_threshold_matches_sampling(px, py, sx, sy, m, th):
    ux, uy = math.cos(th), math.sin(th)
    brute = brute_threshold(px, py, sx, sy, m, ux, uy)
    for name in kernels.BACKENDS:
        got = kernels.get(name).seg_threshold(px, py, sx, sy, m, ux, uy)
        if brute > 1e6:
            # far beyond any radius cap; underflow can make either side infinite
            assert got > 1e6
        else:
            # sampling can only overestimate the minimum
            assert got <= brute + 1e-9
            assert got >= brute - 1e-6 * max(1.0, abs(brute))


def test_static_threshold_closed_form():
    for name in kernels.BACKENDS:
        k = kernels.get(name)
        assert k.seg_threshold(2.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0) == pytest.approx(1.0)
        assert k.seg_threshold(-2.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0) == math.inf
        # a point sitting on the agent with no margin blocks every bearing
        assert k.seg_threshold(0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0) == 0.0
        assert k.seg_threshold(0.0, 0.0, 0.0, 1.0, 0.0, 0.6, 0.8) == 0.0


@pytest.mark.skipif(len(kernels.BACKENDS) < 2, reason="compiled extension not built")
def test_planner_radii_backends_agree():
    rng = np.random.default_rng(0)
    n = 200
    b = np.linspace(-math.pi, math.pi, 97, endpoint=False)
    px, py, sx, sy = rng.uniform(-3, 3, (4, n))
    sx[::3] = sy[::3] = 0.0
    margin = rng.uniform(0.0, 0.3, n)
    slack = np.full(n, 1e-3)
    out = [kernels.get(k).planner_radii(b, px, py, sx, sy, margin, slack, 2.0, 1e-3, w)
           for k in sorted(kernels.BACKENDS) for w in (1, 4)]
    for o in out[1:]:
        np.testing.assert_allclose(o, out[0], rtol=1e-12, atol=1e-12)


@pytest.mark.skipif(len(kernels.BACKENDS) < 2, reason="compiled extension not built")
def test_raycast_backends_agree():
    rng = np.random.default_rng(1)
    cx, cy = rng.uniform(-3, 3, (2, 25))
    cr = rng.uniform(0.05, 0.4, 25)
    b = np.linspace(-math.pi, math.pi, 360, endpoint=False)
    res = [kernels.get(k).raycast(0.1, -0.2, 0.4, b, 4.0, cx, cy, cr) for k in sorted(kernels.BACKENDS)]
    np.testing.assert_allclose(res[0][0], res[1][0], rtol=1e-12)
    np.testing.assert_array_equal(res[0][1], res[1][1])


def test_raycast_inside_body_is_zero(backend):
    r, hit = kernels.raycast(0.0, 0.0, 0.0, np.array([0.0, 1.0]), 4.0, np.array([0.05]), np.array([0.0]), np.array([0.2]))
    assert list(r) == [0.0, 0.0] and list(hit) == [0, 0]


@pytest.mark.skipif(len(kernels.BACKENDS) < 2, reason="compiled extension not built")
def test_advance_backends_agree():
    rng = np.random.default_rng(2)
    n = 6
    base = rng.uniform(-2, 2, (3, n))
    W = rng.uniform(-2, 2, (2, n))
    mode = np.array([1, 1, 1, 0, 0, 1], dtype=np.int64)
    anti = np.array([0, 1, 0, 0, 1, 1], dtype=np.int64)
    outs = []
    for k in sorted(kernels.BACKENDS):
        x, y, h = (a.copy() for a in base)
        extra = kernels.get(k).advance(
            x, y, h, mode, np.full(n, 0.1), np.full(n, 0.3), W[0], W[1], anti,
            np.full(n, 0.2), np.ones(n), np.full(n, 0.1), np.full(n, 1.0),
            np.array([0.0]), np.array([0.0]), np.array([0.1]), np.array([-0.1]), np.array([0.25]),
            500, 1e-3,
        )
        outs.append((x, y, h) + tuple(extra))
    for a, b in zip(*outs):
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)


def test_use_backend_rejects_unknown():
    with pytest.raises(ValueError):
        kernels.use_backend("gpu")


def test_default_backend_prefers_compiled():
    expected = "compiled" if "compiled" in kernels.BACKENDS else "python"
    assert kernels.backend_name() == expected
