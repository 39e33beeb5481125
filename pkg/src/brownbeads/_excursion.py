"""Numba kernel: does a half-plane excursion from 0 avoid an analytic hull?

Steps are exact transitions of (BM, BES(3)).  Far from the hull the step
variance grows like (d / kappa)^2 with the distance d, so a chord that
stays clear of the hull misses it with overwhelming probability (the
excursion between grid points would have to travel kappa standard
deviations).  Near the hull the step is the nominal dt, which is where the
polyline discretization error lives.
"""
import numpy as np
from numba import njit

from ._wos import seg_dist

SLIT = 0
DISK = 1


@njit(cache=True, nogil=True)
def _hull_dist(kind, x0, s, x, y):
    if kind == SLIT:
        return seg_dist(x, y, x0, 0.0, x0, s)
    d = np.sqrt((x - x0) ** 2 + y * y) - s
    return max(d, 0.0)


@njit(cache=True, nogil=True)
def _chord_hits(kind, x0, s, ax, ay, bx, by):
    if kind == DISK:
        return seg_dist(x0, 0.0, ax, ay, bx, by) <= s
    # chord against the vertical segment {x0} x [0, s]
    if (ax - x0) * (bx - x0) > 0.0:
        return False
    if ax == bx:
        return min(ay, by) <= s
    t = (x0 - ax) / (bx - ax)
    return ay + t * (by - ay) <= s


@njit(cache=True, nogil=True)
def avoid_run(kind, x0, s, dt, kappa, y_max, max_steps, n_paths, seed):
    """Per path: 1 hit, 0 escaped to y_max, -1 ran out of steps."""
    np.random.seed(seed)
    out = np.zeros(n_paths, dtype=np.int8)
    for p in range(n_paths):
        x = 0.0
        y = 0.0
        res = -1
        for _ in range(max_steps):
            if y >= y_max:
                res = 0
                break
            d = _hull_dist(kind, x0, s, x, y)
            h = (d / kappa) ** 2
            if h < dt:
                h = dt
            r = np.sqrt(h)
            nx = x + r * np.random.standard_normal()
            g1 = y + r * np.random.standard_normal()
            g2 = r * np.random.standard_normal()
            g3 = r * np.random.standard_normal()
            ny = np.sqrt(g1 * g1 + g2 * g2 + g3 * g3)
            if _chord_hits(kind, x0, s, x, y, nx, ny):
                res = 1
                break
            x = nx
            y = ny
        out[p] = res
    return out


@njit(cache=True, nogil=True)
def bm_first_passage(level, dt, t_max, n_paths, seed):
    """First grid time a Gaussian random walk reaches ``level``; inf when
    that does not happen by ``t_max``."""
    np.random.seed(seed)
    out = np.full(n_paths, np.inf)
    s = np.sqrt(dt)
    m = int(t_max / dt)
    for p in range(n_paths):
        x = 0.0
        for k in range(1, m + 1):
            x += s * np.random.standard_normal()
            if x >= level:
                out[p] = k * dt
                break
    return out
