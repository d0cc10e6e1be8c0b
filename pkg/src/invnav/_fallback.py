"""Pure-Python/numpy versions of the compiled kernels in ``_kernels.pyx``."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

_TWO_PI = 2.0 * math.pi


def _wrap(a):
    w = np.fmod(a + math.pi, _TWO_PI)
    w = np.where(w <= 0.0, w + _TWO_PI, w)
    return w - math.pi


def _ratio(num, den):
    with np.errstate(divide="ignore", invalid="ignore"):
        # num <= 0 with den <= 0: the point touches the agent, no strict clearance possible
        return np.where(den > 0.0, num / (2.0 * den), np.where(num <= 0.0, 0.0, np.inf))


@np.errstate(divide="ignore", invalid="ignore", over="ignore")  # near-degenerate sweeps overflow to inf on purpose
def _seg_threshold(px, py, sx, sy, m, ux, uy):
    """Broadcasting version of the swept-point radius threshold."""
    g = px * ux + py * uy + m
    e = sx * ux + sy * uy
    a = sx * sx + sy * sy
    b = 2.0 * (px * sx + py * sy)
    c = px * px + py * py - m * m
    g, e, a, b, c = np.broadcast_arrays(g, e, a, b, c)
    with np.errstate(divide="ignore", invalid="ignore"):
        tau0 = np.where(e != 0.0, -g / e, 0.0)
    lo = np.where((e > 0.0) & (tau0 > 0.0), tau0, 0.0)
    hi = np.where((e < 0.0) & (tau0 < 1.0), tau0, 1.0)
    empty = ((e > 0.0) & (tau0 >= 1.0)) | ((e < 0.0) & (tau0 <= 0.0)) | ((e == 0.0) & (g <= 0.0))

    def f(t):
        return _ratio(a * t * t + b * t + c, g + e * t)

    best = np.minimum(f(lo), f(hi))
    with np.errstate(divide="ignore", invalid="ignore"):
        # closest point of the sweep to the agent, num from the cross product so a pass through it is exact
        t_near = np.where(a > 0.0, -b / (2.0 * a), np.nan)
        cr = px * sy - py * sx
        near = np.where((t_near > 0.0) & (t_near < 1.0), _ratio(cr * cr / a - m * m, g + e * t_near), np.inf)
    best = np.minimum(best, near)
    with np.errstate(divide="ignore", invalid="ignore"):
        # e == 0: single stationary point
        t_lin = np.where(a > 0.0, -b / (2.0 * a), np.nan)
        A = a * e
        B = 2.0 * a * g
        C = b * g - e * c
        disc = B * B - 4.0 * A * C
        sq = np.sqrt(np.where(disc >= 0.0, disc, 0.0))
        q = np.where(B >= 0.0, -0.5 * (B + sq), -0.5 * (B - sq))
        ok = (disc >= 0.0) & (q != 0.0) & (e != 0.0)
        t1 = np.where(ok, q / A, np.nan)
        t2 = np.where(ok, C / q, np.nan)
    for t in (np.where(e == 0.0, t_lin, np.nan), t1, t2):
        inside = (t > lo) & (t < hi)
        best = np.where(inside, np.minimum(best, f(np.where(inside, t, 0.0))), best)
    static = a == 0.0
    best = np.where(static, _ratio(c, g), best)
    # no point of the sweep is ahead of the agent; it can still touch it
    touch = np.minimum(np.minimum(_ratio(c, g), _ratio(a + b + c, g + e)), near)
    best = np.where(empty & ~static, touch, best)
    # a negative threshold only says the point already overlaps the margin; no disc either way
    return np.maximum(best, 0.0)


def seg_threshold(px, py, sx, sy, m, ux, uy):
    return float(_seg_threshold(*(np.float64(v) for v in (px, py, sx, sy, m, ux, uy))))


def _radii_chunk(bearings, px, py, sx, sy, margin, slack, cap, eps):
    ux = np.cos(bearings)[:, None]
    uy = np.sin(bearings)[:, None]
    f = _seg_threshold(px[None, :], py[None, :], sx[None, :], sy[None, :], margin[None, :], ux, uy)
    f = f - slack[None, :]
    best = np.minimum(f.min(axis=1, initial=np.inf), cap)
    return np.where(best < eps, 0.0, best)


def planner_radii(bearings, px, py, sx, sy, margin, slack, cap, eps, workers=1):
    bearings = np.ascontiguousarray(bearings, dtype=np.float64)
    args = [np.ascontiguousarray(v, dtype=np.float64) for v in (px, py, sx, sy, margin, slack)]
    n = bearings.shape[0]
    workers = max(1, int(workers))
    if workers == 1 or n < 2:
        return _radii_chunk(bearings, *args, cap, eps)
    bounds = np.linspace(0, n, min(workers, n) + 1).astype(int)
    out = np.empty(n)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {
            (lo, hi): pool.submit(_radii_chunk, bearings[lo:hi], *args, cap, eps)
            for lo, hi in zip(bounds[:-1], bounds[1:])
        }
        for (lo, hi), fut in futures.items():
            out[lo:hi] = fut.result()
    return out


def raycast(x, y, heading, bearings, d_max, cx, cy, cr):
    bearings = np.asarray(bearings, dtype=np.float64)
    cx, cy, cr = (np.asarray(v, dtype=np.float64) for v in (cx, cy, cr))
    n = bearings.shape[0]
    if cx.size == 0:
        return np.full(n, float(d_max)), np.full(n, -1, dtype=np.int64)
    dx = np.cos(heading + bearings)[:, None]
    dy = np.sin(heading + bearings)[:, None]
    fx = (x - cx)[None, :]
    fy = (y - cy)[None, :]
    c = fx * fx + fy * fy - cr[None, :] ** 2
    b = fx * dx + fy * dy
    disc = b * b - c
    with np.errstate(divide="ignore", invalid="ignore"):
        t = c / (-b + np.sqrt(np.where(disc >= 0.0, disc, 0.0)))
    t = np.where((b < 0.0) & (disc >= 0.0), t, np.inf)
    t = np.where(c <= 0.0, 0.0, t)
    t = np.where(t < d_max, t, np.inf)
    idx = np.argmin(t, axis=1)
    best = t[np.arange(n), idx]
    hit = np.isfinite(best)
    return np.where(hit, best, float(d_max)), np.where(hit, idx, -1).astype(np.int64)


def _rates(x, y, h, mode, vc, wc, wx, wy, anti, k1, k2):
    rx = x - wx
    ry = y - wy
    R = np.hypot(rx, ry)
    psi = _wrap(h - np.arctan2(ry, rx))
    shifted = np.where(psi < 0.0, psi + math.pi, psi - math.pi)
    shifted = np.where(shifted <= -math.pi, shifted + _TWO_PI, shifted)
    s = np.where(anti != 0, shifted, psi)
    cs = np.where(np.cos(psi) < 0.0, -1.0, 1.0)
    th = np.tanh(R)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(R < 1e-8, 1.0 - R * R / 3.0, th / R)
    v_fb = -k1 * th * cs
    w_fb = -k2 * np.sqrt(np.abs(s)) * np.where(s < 0.0, -1.0, 1.0) - k1 * ratio * cs * np.sin(psi)
    fb = mode == 1
    v = np.where(fb, v_fb, vc)
    w = np.where(fb, w_fb, wc)
    return v * np.cos(h), v * np.sin(h), w


def advance(x, y, h, mode, vc, wc, wx, wy, anti, k1, k2, radius, disc_r,
            ox, oy, ovx, ovy, orad, n_steps, dt):
    na = x.shape[0]
    clear = np.full(na, np.inf)
    exc = np.full(na, -np.inf)
    cross = np.zeros(na, dtype=np.int64)
    params = (mode, vc, wc, wx, wy, anti, k1, k2)
    tracked = disc_r > 0.0
    iu, ju = np.triu_indices(na, k=1)
    half = 0.5 * dt
    for step in range(1, n_steps + 1):
        a1 = _rates(x, y, h, *params)
        a2 = _rates(x + half * a1[0], y + half * a1[1], h + half * a1[2], *params)
        a3 = _rates(x + half * a2[0], y + half * a2[1], h + half * a2[2], *params)
        a4 = _rates(x + dt * a3[0], y + dt * a3[1], h + dt * a3[2], *params)
        x += dt / 6.0 * (a1[0] + 2.0 * a2[0] + 2.0 * a3[0] + a4[0])
        y += dt / 6.0 * (a1[1] + 2.0 * a2[1] + 2.0 * a3[1] + a4[1])
        h[:] = _wrap(h + dt / 6.0 * (a1[2] + 2.0 * a2[2] + 2.0 * a3[2] + a4[2]))
        if tracked.any():
            rx = x - wx
            ry = y - wy
            R = np.hypot(rx, ry)
            with np.errstate(divide="ignore", invalid="ignore"):
                rel = np.where(tracked, (R - disc_r) / disc_r, -np.inf)
            exc = np.maximum(exc, rel)
            psi = _wrap(h - np.arctan2(ry, rx))
            flip = tracked & (mode == 1) & (R > 1e-6) & ((np.cos(psi) < 0.0) != (anti != 0))
            cross[flip] = 1
        t = step * dt
        if iu.size:
            d = np.hypot(x[iu] - x[ju], y[iu] - y[ju]) - radius[iu] - radius[ju]
            np.minimum.at(clear, iu, d)
            np.minimum.at(clear, ju, d)
        if ox.size:
            d = np.hypot(x[:, None] - (ox + ovx * t)[None, :], y[:, None] - (oy + ovy * t)[None, :])
            d = d - radius[:, None] - orad[None, :]
            clear = np.minimum(clear, d.min(axis=1))
    return clear, exc, cross
