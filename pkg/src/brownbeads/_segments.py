"""Numba kernels for polyline self-intersection.

Segments are s_i = [p_i, p_{i+1}].  Orientation signs come from a floating
point filter; anything the filter cannot certify is reported back to the
caller as "uncertain" and resolved exactly in Python (see ``cut.py``).
"""
import numpy as np
from numba import njit

# Shewchuk's ccwerrboundA
CCW_ERR = 3.3306690738754716e-16
UNCERTAIN = 2

NONE = 0
POINT = 1
CROSS = 2
OVERLAP = 3


@njit(cache=True, nogil=True)
def orient(ax, ay, bx, by, cx, cy):
    """Sign of the turn a -> b -> c, or UNCERTAIN."""
    if (cx == ax and cy == ay) or (cx == bx and cy == by):
        return 0
    l = (bx - ax) * (cy - ay)
    r = (by - ay) * (cx - ax)
    det = l - r
    bound = CCW_ERR * (abs(l) + abs(r))
    if det > bound:
        return 1
    if -det > bound:
        return -1
    lz = (bx - ax) == 0.0 or (cy - ay) == 0.0
    rz = (by - ay) == 0.0 or (cx - ax) == 0.0
    if lz and rz:
        return 0
    return UNCERTAIN


@njit(cache=True, nogil=True)
def classify(ax0, ay0, ax1, ay1, bx0, by0, bx1, by1, o1, o2, o3, o4):
    """Intersection type of two non-degenerate segments given exact signs.

    o1, o2: orientation of b0, b1 w.r.t. line a; o3, o4: of a0, a1 w.r.t. b.
    Returns (kind, endpoint); endpoint names the touching vertex for POINT
    (0: a0, 1: a1, 2: b0, 3: b1).
    """
    if o1 == 0 and o2 == 0:
        if ax0 != ax1:
            alo, ahi = min(ax0, ax1), max(ax0, ax1)
            b0, b1 = bx0, bx1
        else:
            alo, ahi = min(ay0, ay1), max(ay0, ay1)
            b0, b1 = by0, by1
        blo, bhi = min(b0, b1), max(b0, b1)
        lo = max(alo, blo)
        hi = min(ahi, bhi)
        if lo > hi:
            return NONE, -1
        if lo < hi:
            return OVERLAP, -1
        if b0 == lo:
            return POINT, 2
        return POINT, 3
    if o1 != 0 and o1 == o2:
        return NONE, -1
    if o3 != 0 and o3 == o4:
        return NONE, -1
    if o1 == 0:
        return POINT, 2
    if o2 == 0:
        return POINT, 3
    if o3 == 0:
        return POINT, 0
    if o4 == 0:
        return POINT, 1
    return CROSS, -1


@njit(cache=True, nogil=True)
def cell_index(v, lo, cell, nc):
    c = int((v - lo) / cell)
    if c < 0:
        return 0
    if c >= nc:
        return nc - 1
    return c


@njit(cache=True, nogil=True)
def build_grid(pts, valid, x0, y0, cell, nx, ny):
    """CSR bucket table: every valid segment is registered in every cell its
    bounding box overlaps.  Items within a cell are in increasing order."""
    nseg = pts.shape[0] - 1
    counts = np.zeros(nx * ny + 1, dtype=np.int64)
    for i in range(nseg):
        if not valid[i]:
            continue
        ix0 = cell_index(min(pts[i, 0], pts[i + 1, 0]), x0, cell, nx)
        ix1 = cell_index(max(pts[i, 0], pts[i + 1, 0]), x0, cell, nx)
        iy0 = cell_index(min(pts[i, 1], pts[i + 1, 1]), y0, cell, ny)
        iy1 = cell_index(max(pts[i, 1], pts[i + 1, 1]), y0, cell, ny)
        for cx in range(ix0, ix1 + 1):
            for cy in range(iy0, iy1 + 1):
                counts[cx * ny + cy + 1] += 1
    start = np.cumsum(counts)
    fill = start[:-1].copy()
    items = np.empty(start[-1], dtype=np.int64)
    for i in range(nseg):
        if not valid[i]:
            continue
        ix0 = cell_index(min(pts[i, 0], pts[i + 1, 0]), x0, cell, nx)
        ix1 = cell_index(max(pts[i, 0], pts[i + 1, 0]), x0, cell, nx)
        iy0 = cell_index(min(pts[i, 1], pts[i + 1, 1]), y0, cell, ny)
        iy1 = cell_index(max(pts[i, 1], pts[i + 1, 1]), y0, cell, ny)
        for cx in range(ix0, ix1 + 1):
            for cy in range(iy0, iy1 + 1):
                c = cx * ny + cy
                items[fill[c]] = i
                fill[c] += 1
    return start, items


@njit(cache=True, nogil=True)
def _push(buf, n, a, b, c, d):
    if n >= buf.shape[0]:
        new = np.empty((2 * buf.shape[0] + 16, 4), dtype=np.int64)
        new[:n] = buf[:n]
        buf = new
    buf[n, 0] = a
    buf[n, 1] = b
    buf[n, 2] = c
    buf[n, 3] = d
    return buf, n + 1


@njit(cache=True, nogil=True)
def pair_pass(pts, valid, dup, interior_flag, x0, y0, cell, nx, ny, start, items):
    """Enumerate intersecting segment pairs once each.

    Returns
    -------
    reach : int64[nseg]
        max j over generic killing pairs (i, j); -1 if none.
    specials : (m, 4) rows (i, j, kind, vertex) whose kill interval may have
        an exempt vertex; resolved by the caller.
    uncertain : (u, 4) rows (i, j, 0, 0) the float filter could not decide.
    incid : (q, 4) rows (vertex, segment, 0, 0): vertex lies strictly inside
        the segment.
    """
    nseg = pts.shape[0] - 1
    reach = np.full(nseg, -1, dtype=np.int64)
    specials = np.empty((16, 4), dtype=np.int64)
    ns = 0
    unc = np.empty((16, 4), dtype=np.int64)
    nu = 0
    incid = np.empty((16, 4), dtype=np.int64)
    ni = 0
    for c in range(nx * ny):
        cx = c // ny
        cy = c - cx * ny
        s0 = start[c]
        s1 = start[c + 1]
        for a in range(s0, s1):
            i = items[a]
            ax0 = pts[i, 0]
            ay0 = pts[i, 1]
            ax1 = pts[i + 1, 0]
            ay1 = pts[i + 1, 1]
            aminx = min(ax0, ax1)
            amaxx = max(ax0, ax1)
            aminy = min(ay0, ay1)
            amaxy = max(ay0, ay1)
            for b in range(a + 1, s1):
                j = items[b]
                bx0 = pts[j, 0]
                by0 = pts[j, 1]
                bx1 = pts[j + 1, 0]
                by1 = pts[j + 1, 1]
                mx = max(aminx, min(bx0, bx1))
                my = max(aminy, min(by0, by1))
                if mx > min(amaxx, max(bx0, bx1)) or my > min(amaxy, max(by0, by1)):
                    continue
                if cell_index(mx, x0, cell, nx) != cx or cell_index(my, y0, cell, ny) != cy:
                    continue
                o1 = orient(ax0, ay0, ax1, ay1, bx0, by0)
                o2 = orient(ax0, ay0, ax1, ay1, bx1, by1)
                o3 = orient(bx0, by0, bx1, by1, ax0, ay0)
                o4 = orient(bx0, by0, bx1, by1, ax1, ay1)
                if o1 == UNCERTAIN or o2 == UNCERTAIN or o3 == UNCERTAIN or o4 == UNCERTAIN:
                    unc, nu = _push(unc, nu, i, j, 0, 0)
                    continue
                kind, ep = classify(ax0, ay0, ax1, ay1, bx0, by0, bx1, by1, o1, o2, o3, o4)
                if kind == NONE:
                    continue
                if kind == OVERLAP:
                    if j > reach[i]:
                        reach[i] = j
                    continue
                if kind == CROSS:
                    if interior_flag[i] and interior_flag[j]:
                        specials, ns = _push(specials, ns, i, j, CROSS, -1)
                    elif j > reach[i]:
                        reach[i] = j
                    continue
                # single touching point at a vertex
                if j == i + 1:
                    continue
                if ep == 0:
                    v = i
                elif ep == 1:
                    v = i + 1
                elif ep == 2:
                    v = j
                else:
                    v = j + 1
                # vertex strictly inside the other segment?
                if ep <= 1:
                    if not ((pts[v, 0] == bx0 and pts[v, 1] == by0) or (pts[v, 0] == bx1 and pts[v, 1] == by1)):
                        incid, ni = _push(incid, ni, v, j, 0, 0)
                else:
                    if not ((pts[v, 0] == ax0 and pts[v, 1] == ay0) or (pts[v, 0] == ax1 and pts[v, 1] == ay1)):
                        incid, ni = _push(incid, ni, v, i, 0, 0)
                if (i < v and v <= j) or dup[v]:
                    specials, ns = _push(specials, ns, i, j, POINT, v)
                elif j > reach[i]:
                    reach[i] = j
    return reach, specials[:ns], unc[:nu], incid[:ni]


@njit(cache=True, nogil=True)
def segment_min_hit(qx0, qy0, qx1, qy1, limit, pts, x0, y0, cell, nx, ny, start, items):
    """Smallest index i < limit of a grid segment meeting [q0, q1]; -1 if none.

    Undecidable orientations count as a hit.
    """
    best = -1
    qminx = min(qx0, qx1)
    qmaxx = max(qx0, qx1)
    qminy = min(qy0, qy1)
    qmaxy = max(qy0, qy1)
    ix0 = cell_index(qminx, x0, cell, nx)
    ix1 = cell_index(qmaxx, x0, cell, nx)
    iy0 = cell_index(qminy, y0, cell, ny)
    iy1 = cell_index(qmaxy, y0, cell, ny)
    for cx in range(ix0, ix1 + 1):
        for cy in range(iy0, iy1 + 1):
            c = cx * ny + cy
            for a in range(start[c], start[c + 1]):
                i = items[a]
                if i >= limit:
                    break
                if best >= 0 and i >= best:
                    break
                ax0 = pts[i, 0]
                ay0 = pts[i, 1]
                ax1 = pts[i + 1, 0]
                ay1 = pts[i + 1, 1]
                if max(qminx, min(ax0, ax1)) > min(qmaxx, max(ax0, ax1)):
                    continue
                if max(qminy, min(ay0, ay1)) > min(qmaxy, max(ay0, ay1)):
                    continue
                o1 = orient(ax0, ay0, ax1, ay1, qx0, qy0)
                o2 = orient(ax0, ay0, ax1, ay1, qx1, qy1)
                o3 = orient(qx0, qy0, qx1, qy1, ax0, ay0)
                o4 = orient(qx0, qy0, qx1, qy1, ax1, ay1)
                if o1 == UNCERTAIN or o2 == UNCERTAIN or o3 == UNCERTAIN or o4 == UNCERTAIN:
                    best = i
                    continue
                if qx0 == qx1 and qy0 == qy1:
                    continue
                kind, ep = classify(ax0, ay0, ax1, ay1, qx0, qy0, qx1, qy1, o1, o2, o3, o4)
                if kind != NONE:
                    best = i
    return best


@njit(cache=True, nogil=True)
def continue_until_height(x, y, limit, dt, kappa, y_stop, max_steps, seed,
                          pts, x0, y0, cell, nx, ny, start, items, bx0, bx1, by0, by1):
    """Run a half-plane excursion from (x, y) until Im >= y_stop.

    Steps are exact in law at their grid times: x gains N(0, h), the height
    is the norm of a 3-d Gaussian step from (y, 0, 0).  The step h is dt
    inside the bounding box [bx0, bx1] x [by0, by1] of the obstacle polyline
    and grows as (d / kappa)^2 with the distance d to that box.  Every step
    segment is tested against obstacle segments with index < limit.

    Returns (min index hit or -1, steps taken, reached y_stop).
    """
    np.random.seed(seed)
    best = -1
    lim = limit
    steps = 0
    while steps < max_steps:
        if y >= y_stop:
            return best, steps, True
        dx = 0.0
        if x < bx0:
            dx = bx0 - x
        elif x > bx1:
            dx = x - bx1
        dy = 0.0
        if y > by1:
            dy = y - by1
        d = np.sqrt(dx * dx + dy * dy)
        h = (d / kappa) ** 2
        if h < dt:
            h = dt
        s = np.sqrt(h)
        nx_ = x + s * np.random.standard_normal()
        g1 = y + s * np.random.standard_normal()
        g2 = s * np.random.standard_normal()
        g3 = s * np.random.standard_normal()
        ny_ = np.sqrt(g1 * g1 + g2 * g2 + g3 * g3)
        steps += 1
        if lim > 0 and not (max(x, nx_) < bx0 or min(x, nx_) > bx1 or min(y, ny_) > by1):
            hit = segment_min_hit(x, y, nx_, ny_, lim, pts, x0, y0, cell, nx, ny, start, items)
            if hit >= 0:
                best = hit
                lim = hit
        x = nx_
        y = ny_
    return best, steps, y >= y_stop
