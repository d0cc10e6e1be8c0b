# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: planner radii, simulated range scans, closed-loop stepping.

Every routine mirrors a function of the same name in ``_fallback`` and must
stay numerically interchangeable with it.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport fmax, sqrt, cos, sin, tanh, atan2, fabs, fmod, INFINITY, M_PI

cnp.import_array()

cdef double TWO_PI = 2.0 * M_PI


cdef inline double _wrap(double a) noexcept nogil:
    cdef double w = fmod(a + M_PI, TWO_PI)
    if w <= 0.0:
        w += TWO_PI
    return w - M_PI


cdef inline double _ratio(double num, double den) noexcept nogil:
    if den > 0.0:
        return num / (2.0 * den)
    if num <= 0.0:
        return 0.0  # point touches the agent: no strict clearance possible
    return INFINITY


cdef inline double _nearest(double px, double py, double sx, double sy, double a,
                           double b, double m, double g, double e) noexcept nogil:
    # closest point of the sweep to the agent, num from the cross product so a pass through it is exact
    cdef double t = -b / (2.0 * a)
    cdef double cr
    if not (0.0 < t < 1.0):
        return INFINITY
    cr = px * sy - py * sx
    return _ratio(cr * cr / a - m * m, g + e * t)


cdef inline double _touch(double a, double b, double c, double g, double e, double near) noexcept nogil:
    # no point of the sweep is ahead of the agent; it can still touch it
    cdef double best = _ratio(c, g)
    cdef double r = _ratio(a + b + c, g + e)
    if r < best:
        best = r
    if near < best:
        best = near
    return best


cdef inline double _seg_raw(double px, double py, double sx, double sy,
                                  double m, double ux, double uy) noexcept nogil:
    cdef double g = px * ux + py * uy + m
    cdef double e = sx * ux + sy * uy
    cdef double a = sx * sx + sy * sy
    cdef double b = 2.0 * (px * sx + py * sy)
    cdef double c = px * px + py * py - m * m
    cdef double lo = 0.0, hi = 1.0, tau0, best, t, A, B, C, disc, q, sq, near
    if a == 0.0:
        return _ratio(c, g)
    near = _nearest(px, py, sx, sy, a, b, m, g, e)
    if e > 0.0:
        tau0 = -g / e
        if tau0 >= 1.0:
            return _touch(a, b, c, g, e, near)
        if tau0 > lo:
            lo = tau0
    elif e < 0.0:
        tau0 = -g / e
        if tau0 <= 0.0:
            return _touch(a, b, c, g, e, near)
        if tau0 < hi:
            hi = tau0
    elif g <= 0.0:
        return _touch(a, b, c, g, e, near)
    best = _ratio(a * lo * lo + b * lo + c, g + e * lo)
    t = _ratio(a * hi * hi + b * hi + c, g + e * hi)
    if t < best:
        best = t
    if near < best:
        best = near
    if e == 0.0:
        t = -b / (2.0 * a)
        if lo < t < hi:
            t = _ratio(a * t * t + b * t + c, g + e * t)
            if t < best:
                best = t
        return best
    A = a * e
    B = 2.0 * a * g
    C = b * g - e * c
    disc = B * B - 4.0 * A * C
    if disc < 0.0:
        return best
    sq = sqrt(disc)
    if B >= 0.0:
        q = -0.5 * (B + sq)
    else:
        q = -0.5 * (B - sq)
    if q != 0.0:
        t = q / A
        if lo < t < hi:
            t = _ratio(a * t * t + b * t + c, g + e * t)
            if t < best:
                best = t
        t = C / q
        if lo < t < hi:
            t = _ratio(a * t * t + b * t + c, g + e * t)
            if t < best:
                best = t
    return best


cdef inline double _seg_threshold(double px, double py, double sx, double sy,
                                  double m, double ux, double uy) noexcept nogil:
    # a negative threshold only says the point already overlaps the margin; no disc either way
    return fmax(_seg_raw(px, py, sx, sy, m, ux, uy), 0.0)


def seg_threshold(double px, double py, double sx, double sy, double m, double ux, double uy):
    return _seg_threshold(px, py, sx, sy, m, ux, uy)


def planner_radii(const double[::1] bearings, const double[::1] px, const double[::1] py,
                  const double[::1] sx, const double[::1] sy, const double[::1] margin,
                  const double[::1] slack, double cap, double eps, int workers=1):
    cdef Py_ssize_t n_bins = bearings.shape[0]
    cdef Py_ssize_t n_meas = px.shape[0]
    out = np.empty(n_bins, dtype=np.float64)
    cdef double[::1] radii = out
    cdef Py_ssize_t n, k
    cdef double ux, uy, best, f
    if workers < 1:
        workers = 1
    for n in prange(n_bins, nogil=True, num_threads=workers, schedule="static"):
        ux = cos(bearings[n])
        uy = sin(bearings[n])
        best = cap
        for k in range(n_meas):
            f = _seg_threshold(px[k], py[k], sx[k], sy[k], margin[k], ux, uy) - slack[k]
            if f < best:
                best = f
        if best < eps:
            best = 0.0
        radii[n] = best
    return out


def raycast(double x, double y, double heading, const double[::1] bearings, double d_max,
            const double[::1] cx, const double[::1] cy, const double[::1] cr):
    cdef Py_ssize_t n_beams = bearings.shape[0]
    cdef Py_ssize_t n_bodies = cx.shape[0]
    ranges_arr = np.empty(n_beams, dtype=np.float64)
    hits_arr = np.empty(n_beams, dtype=np.int64)
    cdef double[::1] ranges = ranges_arr
    cdef cnp.int64_t[::1] hits = hits_arr
    cdef Py_ssize_t n, j
    cdef double dx, dy, fx, fy, b, c, disc, t, best
    cdef cnp.int64_t hit
    for n in range(n_beams):
        dx = cos(heading + bearings[n])
        dy = sin(heading + bearings[n])
        best = d_max
        hit = -1
        for j in range(n_bodies):
            fx = x - cx[j]
            fy = y - cy[j]
            c = fx * fx + fy * fy - cr[j] * cr[j]
            if c <= 0.0:
                t = 0.0
            else:
                b = fx * dx + fy * dy
                if b >= 0.0:
                    continue
                disc = b * b - c
                if disc < 0.0:
                    continue
                t = c / (-b + sqrt(disc))
            if t < best:
                best = t
                hit = j
        ranges[n] = best
        hits[n] = hit
    return ranges_arr, hits_arr


cdef inline void _rates(double x, double y, double h, int mode, double vc, double wc,
                        double wx, double wy, int anti, double k1, double k2,
                        double* dx, double* dy, double* dh) noexcept nogil:
    cdef double v = vc, w = wc, rx, ry, R, psi, s, cs, th, ratio
    if mode == 1:
        rx = x - wx
        ry = y - wy
        R = sqrt(rx * rx + ry * ry)
        psi = _wrap(h - atan2(ry, rx))
        if anti:
            if psi < 0.0:
                s = psi + M_PI
            else:
                s = psi - M_PI
            if s <= -M_PI:
                s += TWO_PI
        else:
            s = psi
        cs = -1.0 if cos(psi) < 0.0 else 1.0
        th = tanh(R)
        if R < 1e-8:
            ratio = 1.0 - R * R / 3.0
        else:
            ratio = th / R
        v = -k1 * th * cs
        w = -k2 * sqrt(fabs(s)) * (-1.0 if s < 0.0 else 1.0) - k1 * ratio * cs * sin(psi)
    dx[0] = v * cos(h)
    dy[0] = v * sin(h)
    dh[0] = w


def advance(double[::1] x, double[::1] y, double[::1] h,
            const cnp.int64_t[::1] mode, const double[::1] vc, const double[::1] wc,
            const double[::1] wx, const double[::1] wy, const cnp.int64_t[::1] anti,
            const double[::1] k1, const double[::1] k2, const double[::1] radius,
            const double[::1] disc_r,
            const double[::1] ox, const double[::1] oy, const double[::1] ovx,
            const double[::1] ovy, const double[::1] orad,
            Py_ssize_t n_steps, double dt):
    """Integrate all agents ``n_steps`` RK4 steps in place.

    Returns per-agent minimum clearance, per-agent maximum relative excursion
    outside the active disc, and per-agent sigma-branch crossing flags.
    """
    cdef Py_ssize_t na = x.shape[0]
    cdef Py_ssize_t no = ox.shape[0]
    clear_arr = np.full(na, np.inf)
    exc_arr = np.full(na, -np.inf)
    cross_arr = np.zeros(na, dtype=np.int64)
    cdef double[::1] clear = clear_arr
    cdef double[::1] exc = exc_arr
    cdef cnp.int64_t[::1] cross = cross_arr
    cdef Py_ssize_t step, i, j
    cdef double k1x, k1y, k1h, k2x, k2y, k2h, k3x, k3y, k3h, k4x, k4y, k4h
    cdef double half = 0.5 * dt, t, ddx, ddy, dist, rx, ry, R, psi
    for step in range(1, n_steps + 1):
        for i in range(na):
            _rates(x[i], y[i], h[i], mode[i], vc[i], wc[i], wx[i], wy[i], anti[i], k1[i], k2[i],
                   &k1x, &k1y, &k1h)
            _rates(x[i] + half * k1x, y[i] + half * k1y, h[i] + half * k1h, mode[i], vc[i], wc[i],
                   wx[i], wy[i], anti[i], k1[i], k2[i], &k2x, &k2y, &k2h)
            _rates(x[i] + half * k2x, y[i] + half * k2y, h[i] + half * k2h, mode[i], vc[i], wc[i],
                   wx[i], wy[i], anti[i], k1[i], k2[i], &k3x, &k3y, &k3h)
            _rates(x[i] + dt * k3x, y[i] + dt * k3y, h[i] + dt * k3h, mode[i], vc[i], wc[i],
                   wx[i], wy[i], anti[i], k1[i], k2[i], &k4x, &k4y, &k4h)
            x[i] += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            y[i] += dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
            h[i] = _wrap(h[i] + dt / 6.0 * (k1h + 2.0 * k2h + 2.0 * k3h + k4h))
            if disc_r[i] > 0.0:
                rx = x[i] - wx[i]
                ry = y[i] - wy[i]
                R = sqrt(rx * rx + ry * ry)
                dist = (R - disc_r[i]) / disc_r[i]
                if dist > exc[i]:
                    exc[i] = dist
                if mode[i] == 1 and R > 1e-6:
                    psi = _wrap(h[i] - atan2(ry, rx))
                    if (cos(psi) < 0.0) != (anti[i] != 0):
                        cross[i] = 1
        t = step * dt
        for i in range(na):
            for j in range(i + 1, na):
                ddx = x[i] - x[j]
                ddy = y[i] - y[j]
                dist = sqrt(ddx * ddx + ddy * ddy) - radius[i] - radius[j]
                if dist < clear[i]:
                    clear[i] = dist
                if dist < clear[j]:
                    clear[j] = dist
            for j in range(no):
                ddx = x[i] - (ox[j] + ovx[j] * t)
                ddy = y[i] - (oy[j] + ovy[j] * t)
                dist = sqrt(ddx * ddx + ddy * ddy) - radius[i] - orad[j]
                if dist < clear[i]:
                    clear[i] = dist
    return clear_arr, exc_arr, cross_arr
