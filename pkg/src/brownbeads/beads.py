"""Beads: the pieces of a path between consecutive cut vertices.

A bead's size is the increase of the prefix half-plane capacity across it.
Prefix capacities at many cut vertices come from shared walker ensembles
(``conformal.prefix_caps``), which also makes the increments' errors small.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .conformal import _diameter, prefix_caps
from .cut import CutSet
from .sim import Path, _as_stream

__all__ = ["BeadRecord", "TailCurve", "FirstCap", "extract_beads", "bead_size_tail",
           "first_cap_beyond", "bead_lifetime_stats", "prefix_bounds"]


@dataclass(frozen=True)
class BeadRecord:
    start_idx: int
    end_idx: int
    duration: float
    delta_a: float
    stderr: float
    diameter: float
    path_seed: int | None = None

    def as_row(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TailCurve:
    """Empirical tail N(y) = #{sizes > y} / total on ascending thresholds."""

    y: np.ndarray
    prob: np.ndarray
    counts: np.ndarray
    total: int
    flagged: bool = False

    def stderr_log(self):
        """Binomial standard error of log N(y)."""
        p = np.clip(self.prob, 1e-300, 1)
        return np.sqrt((1 - p) / (self.total * p))


def prefix_bounds(points, ks):
    """(lower, upper) bounds on cap1 of prefixes p[0..k].

    Lower: h^2 / 4 with h the prefix max height.  Upper: R^2 for the
    half-disk centred mid x-range that contains the prefix bounding box.
    """
    pts = points.points if isinstance(points, Path) else np.asarray(points)
    ks = np.asarray(ks, dtype=np.int64)
    hmax = np.maximum.accumulate(pts[:, 1])[ks]
    xmin = np.minimum.accumulate(pts[:, 0])[ks]
    xmax = np.maximum.accumulate(pts[:, 0])[ks]
    return hmax**2 / 4, ((xmax - xmin) / 2) ** 2 + hmax**2


def extract_beads(p: Path, cuts: CutSet, n_walkers: int = 2000, stream=0,
                  group_ratio: float = 2.0) -> list[BeadRecord]:
    """One record per pair of consecutive cut vertices.

    Cut vertices are grouped so that enclosing radii within a group differ
    by at most ``group_ratio``; each group shares one walker ensemble, and
    consecutive groups overlap in one vertex so every increment is paired.
    """
    ks = np.asarray(cuts.indices, dtype=np.int64)
    if ks.size < 2:
        return []
    rng, seed = _as_stream(stream)
    _, upper = prefix_bounds(p, ks)
    R = np.sqrt(upper)
    out = []
    q = 0
    while q < ks.size - 1:
        e = q + 1
        while e + 1 < ks.size and R[e + 1] <= group_ratio * max(R[q], 1e-300):
            e += 1
        pc = prefix_caps(p, ks[q:e + 1], n_walkers, rng)
        for u in range(e - q):
            a, b = ks[q + u], ks[q + u + 1]
            da, se = pc.increment(u, u + 1)
            out.append(BeadRecord(int(a), int(b), float((b - a) * p.dt), da, se,
                                  _diameter(p.points[a:b + 1]), p.seed if seed is None else seed))
        q = e
    return out


def bead_size_tail(sizes, n_grid: int = 20, min_count: int = 1000,
                   quantiles=(0.10, 0.99)) -> TailCurve:
    """Empirical tail of pooled bead sizes on a log grid within the given
    quantile range.  Fewer than ``min_count`` sizes sets ``flagged``."""
    s = np.asarray([r.delta_a if isinstance(r, BeadRecord) else r for r in sizes], dtype=float)
    s = s[np.isfinite(s) & (s > 0)]
    if s.size == 0:
        raise ValueError("no positive sizes")
    lo, hi = np.quantile(s, quantiles)
    y = np.unique(np.geomspace(lo, hi, n_grid)) if hi > lo else np.array([lo])
    srt = np.sort(s)
    counts = s.size - np.searchsorted(srt, y, side="right")
    return TailCurve(y, counts / s.size, counts, int(s.size), flagged=s.size < min_count)


@dataclass(frozen=True)
class FirstCap:
    value: float | None
    stderr: float | None
    censored: bool
    k: int | None = None


def first_cap_beyond(p: Path, cuts: CutSet, a0: float = 1.0, n_walkers: int = 1000,
                     stream=0, group_ratio: float = 2.0) -> FirstCap:
    """Smallest prefix capacity at a cut vertex that is at least ``a0``.

    Only cut vertices whose capacity bounds straddle ``a0`` are estimated,
    in order, grouped by enclosing radius; the first estimate >= a0 wins.
    If no cut vertex qualifies the result is censored (value None).
    """
    ks = np.asarray(cuts.indices, dtype=np.int64)
    if ks.size == 0:
        return FirstCap(None, None, True)
    lower, upper = prefix_bounds(p, ks)
    cand = np.flatnonzero(upper >= a0)
    sure = np.flatnonzero(lower >= a0)
    if sure.size:
        cand = cand[cand <= sure[0]]
    if cand.size == 0:
        return FirstCap(None, None, True)
    rng, _ = _as_stream(stream)
    R = np.sqrt(upper)
    q = 0
    while q < cand.size:
        e = q
        while e + 1 < cand.size and R[cand[e + 1]] <= group_ratio * R[cand[q]]:
            e += 1
        sel = ks[cand[q:e + 1]]
        pc = prefix_caps(p, sel, n_walkers, rng)
        vals, errs = pc.values, pc.stderr
        good = np.flatnonzero(vals >= a0)
        if good.size:
            g = good[0]
            return FirstCap(float(vals[g]), float(errs[g]), False, int(sel[g]))
        q = e + 1
    if sure.size:
        # the last candidate is certainly >= a0 and only came out below by
        # noise
        return FirstCap(float(a0), float(errs[-1]), False, int(sel[-1]))
    return FirstCap(None, None, True)


def bead_lifetime_stats(records, n_bins: int = 10, qs=(0.5, 0.9, 0.99)) -> dict:
    """Duration quantiles per size decile, plus the ratio
    duration / (size * |log size|) whose spread should stay bounded."""
    recs = list(records)
    if not recs:
        raise ValueError("no records")
    size = np.array([r.delta_a for r in recs])
    dur = np.array([r.duration for r in recs])
    if len(recs) == 1:
        return {"bins": [{"size_lo": size[0], "size_hi": size[0], "n": 1,
                          "duration_q": {str(q): dur[0] for q in qs}}],
                "all_finite": bool(np.isfinite(dur).all()), "ratio_q": {}}
    edges = np.unique(np.quantile(size, np.linspace(0, 1, n_bins + 1)))
    idx = np.clip(np.searchsorted(edges, size, side="right") - 1, 0, len(edges) - 2)
    bins = []
    for b in range(len(edges) - 1):
        d = dur[idx == b]
        if d.size == 0:
            continue
        bins.append({"size_lo": float(edges[b]), "size_hi": float(edges[b + 1]), "n": int(d.size),
                     "duration_q": {str(q): float(np.quantile(d, q)) for q in qs}})
    pos = size > 0
    ratio = dur[pos] / (size[pos] * np.maximum(np.abs(np.log(size[pos])), 1.0))
    return {"bins": bins, "all_finite": bool(np.isfinite(dur).all()),
            "ratio_q": {str(q): float(np.quantile(ratio, q)) for q in qs} if ratio.size else {}}
