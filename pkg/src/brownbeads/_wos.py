"""Numba walk-on-spheres kernels for harmonic measure in H minus a hull.

A hull is a soup of segments (rows ax, ay, bx, by) plus closed half-disks
centred on the real axis (rows cx, r).  Segments are indexed; a "prefix k"
hull is the half-disks together with segments [0, k).  Segment distance
queries go through a bounding volume tree over chunks of consecutive
segments, so prefix restriction is a cheap prune on index ranges.
"""
import numpy as np
from numba import njit

CHUNK = 8
INF = np.inf


@njit(cache=True, nogil=True)
def seg_dist(px, py, ax, ay, bx, by):
    dx = bx - ax
    dy = by - ay
    L = dx * dx + dy * dy
    t = 0.0
    if L > 0.0:
        t = ((px - ax) * dx + (py - ay) * dy) / L
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    qx = ax + t * dx - px
    qy = ay + t * dy - py
    return np.sqrt(qx * qx + qy * qy)


@njit(cache=True, nogil=True)
def build_tree(segs):
    """Implicit complete binary tree over chunks of CHUNK segments.

    Node v has children 2v, 2v+1; leaves sit at base + c.  Returns boxes
    (2 base, 4) as (xmin, ymin, xmax, ymax), the first segment index of each
    node, and base.
    """
    m = segs.shape[0]
    nch = (m + CHUNK - 1) // CHUNK
    base = 1
    while base < max(nch, 1):
        base *= 2
    boxes = np.empty((2 * base, 4))
    boxes[:, 0] = INF
    boxes[:, 1] = INF
    boxes[:, 2] = -INF
    boxes[:, 3] = -INF
    lo = np.full(2 * base, m, dtype=np.int64)
    for c in range(nch):
        v = base + c
        lo[v] = c * CHUNK
        for s in range(c * CHUNK, min((c + 1) * CHUNK, m)):
            boxes[v, 0] = min(boxes[v, 0], segs[s, 0], segs[s, 2])
            boxes[v, 1] = min(boxes[v, 1], segs[s, 1], segs[s, 3])
            boxes[v, 2] = max(boxes[v, 2], segs[s, 0], segs[s, 2])
            boxes[v, 3] = max(boxes[v, 3], segs[s, 1], segs[s, 3])
    for v in range(base - 1, 0, -1):
        a = 2 * v
        b = a + 1
        boxes[v, 0] = min(boxes[a, 0], boxes[b, 0])
        boxes[v, 1] = min(boxes[a, 1], boxes[b, 1])
        boxes[v, 2] = max(boxes[a, 2], boxes[b, 2])
        boxes[v, 3] = max(boxes[a, 3], boxes[b, 3])
        lo[v] = min(lo[a], lo[b])
    return boxes, lo, base


@njit(cache=True, nogil=True)
def _box_dist(px, py, boxes, v):
    dx = 0.0
    if px < boxes[v, 0]:
        dx = boxes[v, 0] - px
    elif px > boxes[v, 2]:
        dx = px - boxes[v, 2]
    dy = 0.0
    if py < boxes[v, 1]:
        dy = boxes[v, 1] - py
    elif py > boxes[v, 3]:
        dy = py - boxes[v, 3]
    return np.sqrt(dx * dx + dy * dy)


@njit(cache=True, nogil=True)
def prefix_dist(px, py, K, segs, boxes, lo, base, stack):
    """Distance from (px, py) to segments [0, K)."""
    best = INF
    if K <= 0:
        return best
    top = 0
    stack[0] = 1
    top = 1
    while top > 0:
        top -= 1
        v = stack[top]
        if lo[v] >= K:
            continue
        if _box_dist(px, py, boxes, v) >= best:
            continue
        if v >= base:
            s0 = lo[v]
            s1 = min(s0 + CHUNK, K, segs.shape[0])
            for s in range(s0, s1):
                d = seg_dist(px, py, segs[s, 0], segs[s, 1], segs[s, 2], segs[s, 3])
                if d < best:
                    best = d
        else:
            a = 2 * v
            # visit the nearer child first
            da = _box_dist(px, py, boxes, a)
            db = _box_dist(px, py, boxes, a + 1)
            if da <= db:
                stack[top] = a + 1
                stack[top + 1] = a
            else:
                stack[top] = a
                stack[top + 1] = a + 1
            top += 2
    return best


@njit(cache=True, nogil=True)
def prefix_min_within(px, py, K, eps, segs, boxes, lo, base, stack):
    """Smallest segment index s < K with distance <= eps, or -1."""
    if K <= 0:
        return -1
    stack[0] = 1
    top = 1
    while top > 0:
        top -= 1
        v = stack[top]
        if lo[v] >= K or _box_dist(px, py, boxes, v) > eps:
            continue
        if v >= base:
            s0 = lo[v]
            s1 = min(s0 + CHUNK, K, segs.shape[0])
            for s in range(s0, s1):
                if seg_dist(px, py, segs[s, 0], segs[s, 1], segs[s, 2], segs[s, 3]) <= eps:
                    return s
        else:
            # left child (lower indices) must be popped first
            stack[top] = 2 * v + 1
            stack[top + 1] = 2 * v
            top += 2
    return -1


@njit(cache=True, nogil=True)
def disk_dist(px, py, disks):
    best = INF
    for q in range(disks.shape[0]):
        dx = px - disks[q, 0]
        d = np.sqrt(dx * dx + py * py) - disks[q, 1]
        if d < best:
            best = d
    if best < 0.0:
        best = 0.0
    return best


@njit(cache=True, nogil=True)
def wos_prefix(starts, segs, boxes, lo, base, disks, ks, eps, max_steps, seed):
    """Walk-on-spheres from each start point, shared across prefix hulls.

    ``ks`` is an ascending array of prefix lengths.  For walker w and prefix
    ks[q], ``im[w, q]`` is the height at which the walker is absorbed by that
    prefix hull (0 when it reaches the real axis first) and ``hit[w, q]``
    says whether the hull was hit.  A walker absorbed by the current hull at
    a segment of index j is also absorbed, at that same point, by every
    larger prefix; it continues against prefix j for the smaller ones.
    ``escaped[w]`` flags walkers that ran out of steps.
    """
    np.random.seed(seed)
    N = starts.shape[0]
    nk = ks.shape[0]
    im = np.zeros((N, nk))
    hit = np.zeros((N, nk), dtype=np.bool_)
    escaped = np.zeros(N, dtype=np.bool_)
    steps_total = 0
    stack = np.empty(64 * 2 + 8, dtype=np.int64)
    for w in range(N):
        x = starts[w, 0]
        y = starts[w, 1]
        K = ks[nk - 1]
        todo = nk  # prefixes ks[:todo] still unassigned
        steps = 0
        while todo > 0:
            if y <= eps:
                break
            d = disk_dist(x, y, disks)
            if d <= eps:
                for q in range(todo):
                    im[w, q] = y
                    hit[w, q] = True
                todo = 0
                break
            ds = prefix_dist(x, y, K, segs, boxes, lo, base, stack)
            if ds <= eps:
                j = prefix_min_within(x, y, K, eps, segs, boxes, lo, base, stack)
                if j < 0:
                    j = K - 1
                while todo > 0 and ks[todo - 1] > j:
                    im[w, todo - 1] = y
                    hit[w, todo - 1] = True
                    todo -= 1
                if todo > 0:
                    K = ks[todo - 1]
                continue
            if ds < d:
                d = ds
            r = d
            if y < r:
                r = y
            if steps >= max_steps:
                escaped[w] = True
                break
            th = 2.0 * np.pi * np.random.random()
            x += r * np.cos(th)
            y += r * np.sin(th)
            steps += 1
        steps_total += steps
    return im, hit, escaped, steps_total
