"""Discrete cut vertices of a polyline path.

Vertex k (1 <= k <= n-1) is a cut vertex when every pair of segments
s_i, s_j with i < k <= j meets at most in the single point p_k.  The fast
engine buckets segments in a uniform grid, computes for every segment the
furthest later segment it touches, and finishes with a prefix-max sweep.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _segments as _seg
from .sim import Path, _as_stream, kernel_seed

__all__ = ["CutSet", "find_cuttimes", "find_cuttimes_continued", "naive_cuttimes",
           "has_cuttime_in", "SegmentGrid"]


@dataclass(frozen=True, eq=False)
class CutSet:
    indices: np.ndarray
    n: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def __len__(self):
        return self.indices.size

    def __iter__(self):
        return iter(self.indices.tolist())

    def __contains__(self, k):
        return bool(np.any(self.indices == k))

    def __eq__(self, other):
        if not isinstance(other, CutSet):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.indices, other.indices)

    __hash__ = None

    def times(self, dt: float) -> np.ndarray:
        return self.indices * dt


def _points(p) -> np.ndarray:
    pts = p.points if isinstance(p, Path) else np.asarray(p, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("expected an (n + 1, 2) array of points")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    return np.ascontiguousarray(pts, dtype=np.float64)


class SegmentGrid:
    """Uniform bucket grid over the segments of a polyline.

    The cell size defaults to four times the median non-zero segment length;
    it is enlarged if the grid would exceed ``4 n + 64`` cells.
    """

    def __init__(self, points, cell: float | None = None):
        pts = _points(points)
        self.points = pts
        nseg = pts.shape[0] - 1
        d = np.diff(pts, axis=0)
        self.valid = np.any(d != 0.0, axis=1)
        if cell is None:
            lens = np.hypot(d[:, 0], d[:, 1])[self.valid]
            cell = 4.0 * float(np.median(lens)) if lens.size else 1.0
            if not cell > 0:
                cell = 1.0
        self.x0, self.y0 = pts.min(axis=0)
        self.x1, self.y1 = pts.max(axis=0)
        nx = int((self.x1 - self.x0) / cell) + 1
        ny = int((self.y1 - self.y0) / cell) + 1
        max_cells = 4 * nseg + 64
        if nx * ny > max_cells:
            cell *= np.sqrt(nx * ny / max_cells) * 1.01
            nx = int((self.x1 - self.x0) / cell) + 1
            ny = int((self.y1 - self.y0) / cell) + 1
        self.cell, self.nx, self.ny = float(cell), nx, ny
        self.start, self.items = _seg.build_grid(pts, self.valid, self.x0, self.y0,
                                                 self.cell, nx, ny)

    @property
    def kernel_args(self):
        return (self.points, self.x0, self.y0, self.cell, self.nx, self.ny, self.start, self.items)

    def min_hit(self, q0, q1, limit: int) -> int:
        """Smallest segment index below ``limit`` meeting segment [q0, q1], or -1."""
        return int(_seg.segment_min_hit(q0[0], q0[1], q1[0], q1[1], limit, *self.kernel_args))


# exact arithmetic fallback ---------------------------------------------------

def _orient_exact(a, b, c) -> int:
    ax, ay = Fraction(a[0]), Fraction(a[1])
    d = (Fraction(b[0]) - ax) * (Fraction(c[1]) - ay) - (Fraction(b[1]) - ay) * (Fraction(c[0]) - ax)
    return (d > 0) - (d < 0)


def _pair_outcome(pts, i, j, dup, flags):
    """Exact classification of one pair; mirrors the compiled pass.

    Returns (reach_j or None, special row or None, incidence row or None).
    """
    a0, a1, b0, b1 = pts[i], pts[i + 1], pts[j], pts[j + 1]
    o1 = _orient_exact(a0, a1, b0)
    o2 = _orient_exact(a0, a1, b1)
    o3 = _orient_exact(b0, b1, a0)
    o4 = _orient_exact(b0, b1, a1)
    kind, ep = _seg.classify(a0[0], a0[1], a1[0], a1[1], b0[0], b0[1], b1[0], b1[1], o1, o2, o3, o4)
    if kind == _seg.NONE:
        return None, None, None
    if kind == _seg.OVERLAP:
        return j, None, None
    if kind == _seg.CROSS:
        if flags[i] and flags[j]:
            return None, (i, j, _seg.CROSS, -1), None
        return j, None, None
    if j == i + 1:
        return None, None, None
    v = (i, i + 1, j, j + 1)[ep]
    other = (b0, b1) if ep <= 1 else (a0, a1)
    seg_other = j if ep <= 1 else i
    inc = None
    if not any(pts[v][0] == o[0] and pts[v][1] == o[1] for o in other):
        inc = (v, seg_other)
    if i < v <= j or dup[v]:
        return None, (i, j, _seg.POINT, v), inc
    return j, None, inc


def _coincident_groups(pts):
    """Group id per vertex (equal coordinates share an id) and a dup mask."""
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    s = pts[order]
    new = np.ones(len(s), dtype=bool)
    new[1:] = np.any(s[1:] != s[:-1], axis=1)
    gid_sorted = np.cumsum(new) - 1
    gid = np.empty(len(s), dtype=np.int64)
    gid[order] = gid_sorted
    counts = np.bincount(gid)
    return gid, counts[gid] > 1


def _kill_profile(pts, grid=None):
    """Boolean array killed[k], k = 0..n, for the cut-vertex predicate."""
    n = pts.shape[0] - 1
    grid = SegmentGrid(pts) if grid is None else grid
    gid, dup = _coincident_groups(pts)
    flags = np.zeros(n, dtype=np.bool_)

    def run(flags):
        reach, specials, unc, incid = _seg.pair_pass(pts, grid.valid, dup, flags, grid.x0, grid.y0,
                                                     grid.cell, grid.nx, grid.ny, grid.start, grid.items)
        specials = [tuple(r) for r in specials.tolist()]
        incid = [tuple(r[:2]) for r in incid.tolist()]
        for i, j, _, _ in unc.tolist():
            rj, sp, inc = _pair_outcome(pts, i, j, dup, flags)
            if rj is not None and rj > reach[i]:
                reach[i] = rj
            if sp is not None:
                specials.append(sp)
            if inc is not None:
                incid.append(inc)
        return reach, specials, incid

    reach, specials, incid = run(flags)
    if incid:
        flags[[s for _, s in incid]] = True
        reach, specials, incid = run(flags)

    killed = np.zeros(n + 1, dtype=bool)
    if n >= 1:
        pm = np.maximum.accumulate(reach)
        k = np.arange(1, n + 1)
        killed[1:] = pm[k - 1] >= k
    if specials:
        # incidences are keyed by point, not vertex index: repeated vertices
        # share a coincidence group
        onseg: dict[int, set] = {}
        for v, s in incid:
            onseg.setdefault(s, set()).add(int(gid[v]))
        members: dict[int, list] = {}
        for v in np.flatnonzero(dup):
            members.setdefault(int(gid[v]), []).append(int(v))
        for v, _ in incid:
            members.setdefault(int(gid[v]), [int(v)])
        cover = np.zeros(n + 2, dtype=np.int64)
        exempt = np.zeros(n + 2, dtype=np.int64)
        for i, j, kind, v in specials:
            if kind == _seg.POINT:
                group = members.get(int(gid[v]), [v])
                ex = [k for k in group if i < k <= j]
            else:
                common = onseg.get(i, set()) & onseg.get(j, set())
                ex = [k for g in common for k in members[g] if i < k <= j]
            cover[i + 1] += 1
            cover[j + 1] -= 1
            for k in ex:
                exempt[k] += 1
        killed |= (np.cumsum(cover)[: n + 1] - exempt[: n + 1]) > 0
    return killed


def _mask_to_cutset(killed, n):
    if n < 2:
        return CutSet(np.empty(0, dtype=np.int64), n)
    idx = np.flatnonzero(~killed[1:n]) + 1
    return CutSet(idx, n)


def find_cuttimes_continued(p: Path, y_stop: float, stream, kappa: float = 6.0,
                            max_steps: int = 10**7) -> tuple[CutSet, bool]:
    """Cut vertices of ``p`` that survive the future of the excursion.

    The excursion is continued from the last point of ``p`` until its height
    reaches ``y_stop``; any later segment touching segment i of ``p`` kills
    every vertex after i.  Far from ``p`` the continuation takes exact steps
    of variance (d / kappa)^2, d being the distance to the bounding box of
    ``p``.  Returns the cut set and whether ``y_stop`` was reached within
    ``max_steps`` (if not, the set may contain vertices killed later).
    """
    pts = _points(p)
    n = pts.shape[0] - 1
    if n < 2:
        return CutSet(np.empty(0, dtype=np.int64), n), True
    dt = p.dt if isinstance(p, Path) else 1.0
    grid = SegmentGrid(pts)
    killed = _kill_profile(pts, grid)
    rng, _ = _as_stream(stream)
    hit, _, reached = _seg.continue_until_height(
        pts[-1, 0], pts[-1, 1], n, dt, kappa, y_stop, max_steps, kernel_seed(rng),
        *grid.kernel_args, grid.x0, grid.x1, grid.y0, grid.y1)
    if hit >= 0:
        killed[hit + 1:] = True
    return _mask_to_cutset(killed, n), bool(reached)


def find_cuttimes(p) -> CutSet:
    """Cut vertices of a path (grid-accelerated).

    Zero-length segments are ignored: they never create intersections on
    their own.  Endpoints 0 and n are never cut vertices; paths with fewer
    than two steps have none.
    """
    pts = _points(p)
    n = pts.shape[0] - 1
    if n < 2:
        return CutSet(np.empty(0, dtype=np.int64), n)
    return _mask_to_cutset(_kill_profile(pts), n)


# naive oracle -----------------------------------------------------------------

def _signs(a, b, c):
    """Orientation of c against a -> b, row-wise, exact."""
    l = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
    r = (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    det = l - r
    out = np.sign(det).astype(np.int64)
    same = np.all(c == a, axis=1) | np.all(c == b, axis=1)
    exact_zero = (((b[:, 0] - a[:, 0]) == 0) | ((c[:, 1] - a[:, 1]) == 0)) & \
                 (((b[:, 1] - a[:, 1]) == 0) | ((c[:, 0] - a[:, 0]) == 0))
    unsure = np.abs(det) <= _seg.CCW_ERR * (np.abs(l) + np.abs(r))
    unsure &= ~(same | ((det == 0) & exact_zero))
    out[same] = 0
    for t in np.flatnonzero(unsure):
        out[t] = _orient_exact(a[t], b[t], c[t])
    return out


def _on_segment_exact(q, a, b) -> bool:
    if _orient_exact(a, b, q) != 0:
        return False
    return min(a[0], b[0]) <= q[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= q[1] <= max(a[1], b[1])


def naive_cuttimes(p, limit: int = 5000) -> CutSet:
    """O(n^2) evaluation of the cut-vertex predicate, for testing.

    Every pair of non-degenerate segments is tested; a meeting pair (i, j)
    kills the vertices i < k <= j except those whose point is the whole
    intersection.
    """
    pts = _points(p)
    n = pts.shape[0] - 1
    if n > limit:
        raise ValueError(f"naive_cuttimes limited to n <= {limit}, got {n}")
    if n < 2:
        return CutSet(np.empty(0, dtype=np.int64), n)
    p0, p1 = pts[:-1], pts[1:]
    nz = np.flatnonzero(np.any(p0 != p1, axis=1))
    lo, hi = np.minimum(p0, p1), np.maximum(p0, p1)
    lz, hz = lo[nz], hi[nz]
    box = np.ones((nz.size, nz.size), dtype=bool)
    for ax in (0, 1):
        box &= lz[:, None, ax] <= hz[None, :, ax]
        box &= hz[:, None, ax] >= lz[None, :, ax]
    I, J = np.nonzero(np.triu(box, 1))
    I, J = nz[I], nz[J]
    a, b, c, d = p0[I], p1[I], p0[J], p1[J]
    s1, s2 = _signs(a, b, c), _signs(a, b, d)
    s3, s4 = _signs(c, d, a), _signs(c, d, b)
    collinear = (s1 == 0) & (s2 == 0)
    meet = collinear | ~((s1 * s2 > 0) | (s3 * s4 > 0))
    cover = np.zeros(n + 2, dtype=np.int64)
    exempt = np.zeros(n + 2, dtype=np.int64)

    def kill(i, j, q):
        cover[i + 1] += 1
        cover[j + 1] -= 1
        if q is not None:
            ks = np.arange(i + 1, j + 1)
            exempt[ks[np.all(pts[ks] == q, axis=1)]] += 1

    for t in np.flatnonzero(meet):
        i, j = int(I[t]), int(J[t])
        if collinear[t]:
            ax = 0 if a[t, 0] != b[t, 0] else 1
            lo_ = max(min(a[t, ax], b[t, ax]), min(c[t, ax], d[t, ax]))
            hi_ = min(max(a[t, ax], b[t, ax]), max(c[t, ax], d[t, ax]))
            if lo_ > hi_:
                continue
            q = (c[t] if c[t, ax] == lo_ else d[t]) if lo_ == hi_ else None
        elif s1[t] == 0:
            q = c[t]
        elif s2[t] == 0:
            q = d[t]
        elif s3[t] == 0:
            q = a[t]
        elif s4[t] == 0:
            q = b[t]
        else:
            # proper crossing; only a vertex lying on both segments is exempt
            den = (b[t, 0] - a[t, 0]) * (d[t, 1] - c[t, 1]) - (b[t, 1] - a[t, 1]) * (d[t, 0] - c[t, 0])
            u = ((c[t, 0] - a[t, 0]) * (d[t, 1] - c[t, 1]) - (c[t, 1] - a[t, 1]) * (d[t, 0] - c[t, 0])) / den
            qf = a[t] + u * (b[t] - a[t])
            tol = 1e-9 * (1.0 + np.abs(qf).max())
            ks = np.arange(i + 1, j + 1)
            near = ks[np.all(np.abs(pts[ks] - qf) <= tol, axis=1)]
            cover[i + 1] += 1
            cover[j + 1] -= 1
            for k in near:
                if _on_segment_exact(pts[k], a[t], b[t]) and _on_segment_exact(pts[k], c[t], d[t]):
                    exempt[k] += 1
            continue
        if j == i + 1 and np.array_equal(q, pts[j]):
            continue  # the shared vertex of neighbours is allowed
        kill(i, j, q)
    killed = (np.cumsum(cover)[: n + 1] - exempt[: n + 1]) > 0
    return _mask_to_cutset(killed, n)


def has_cuttime_in(p: Path, t1: float, t2: float, cuts: CutSet | None = None) -> bool:
    """True iff some cut vertex k has k * dt in [t1, t2]."""
    total = p.n * p.dt
    if not (0 <= t1 < t2 <= total * (1 + 1e-12)):
        raise ValueError(f"need 0 <= t1 < t2 <= {total}, got ({t1}, {t2})")
    if cuts is None:
        cuts = find_cuttimes(p)
    t = cuts.indices * p.dt
    return bool(np.any((t >= t1) & (t <= t2)))
