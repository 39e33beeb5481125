"""Half-plane capacity and hydrodynamically normalized maps.

Capacities are estimated from the harmonic measure from infinity h_inf of a
hull A: cap0(A) = h_inf(A) and cap1(A) = integral of Im z against h_inf on A.
Two Monte Carlo starts are offered:

``point``
    walkers start at i*y_start and the estimators are y_start times the hit
    fraction / mean absorption height.  Biased by O(1/y_start**2) relative.
``semicircle``
    walkers start on a half-circle of radius R enclosing A, at angle theta
    with density sin(theta)/2.  That is exactly h_inf on the half-disk
    boundary normalized by its mass 4R/pi, so the estimators
    4R/pi * (hit fraction, mean height) carry no y_start bias.

Either way walkers move by walk-on-spheres in H minus A and are absorbed
within ``eps`` of A or of the real axis.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist

from . import _wos
from .sim import Path, _as_stream, kernel_seed

log = logging.getLogger(__name__)

__all__ = [
    "VerticalSlit", "Semidisk", "PolylineHull", "HullUnion",
    "CapEstimate", "PrefixCaps", "estimate_cap0", "estimate_cap1", "estimate_caps",
    "prefix_caps", "HullMap", "hull_map", "compose", "avoid_probability",
    "f_transform", "transformed_clock",
]

BLOCK = 4096
MAX_STEPS = 10_000


# hulls ---------------------------------------------------------------------

@dataclass(frozen=True)
class VerticalSlit:
    x0: float
    h: float

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("slit height must be positive")

    def segments(self):
        return np.array([[self.x0, 0.0, self.x0, self.h]])

    def disks(self):
        return np.empty((0, 2))

    def extent_points(self):
        return np.array([[self.x0, 0.0], [self.x0, self.h]])

    def scaled(self, r):
        return VerticalSlit(self.x0 * r, self.h * r)

    def describe(self):
        return {"type": "slit", "x0": self.x0, "h": self.h}


@dataclass(frozen=True)
class Semidisk:
    x0: float
    r: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("semidisk radius must be positive")

    def segments(self):
        return np.empty((0, 4))

    def disks(self):
        return np.array([[self.x0, self.r]])

    def extent_points(self):
        t = np.linspace(0.0, np.pi, 65)
        return np.column_stack([self.x0 + self.r * np.cos(t), self.r * np.sin(t)])

    def scaled(self, r):
        return Semidisk(self.x0 * r, self.r * r)

    def describe(self):
        return {"type": "semidisk", "x0": self.x0, "r": self.r}


class PolylineHull:
    """Hull generated by a polyline (for instance a path prefix)."""

    def __init__(self, points):
        pts = points.points if isinstance(points, Path) else np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ValueError("polyline needs at least two points")
        if np.any(pts[:, 1] < 0):
            raise ValueError("polyline must lie in the closed upper half-plane")
        self.points = np.ascontiguousarray(pts)

    def segments(self):
        return np.ascontiguousarray(np.hstack([self.points[:-1], self.points[1:]]))

    def disks(self):
        return np.empty((0, 2))

    def extent_points(self):
        return self.points

    def scaled(self, r):
        return PolylineHull(self.points * r)

    def describe(self):
        return {"type": "polyline", "n_points": int(len(self.points))}


class HullUnion:
    def __init__(self, parts: Sequence):
        if not parts:
            raise ValueError("empty union")
        self.parts = list(parts)

    def segments(self):
        return np.vstack([p.segments() for p in self.parts])

    def disks(self):
        return np.vstack([p.disks() for p in self.parts])

    def extent_points(self):
        return np.vstack([p.extent_points() for p in self.parts])

    def scaled(self, r):
        return HullUnion([p.scaled(r) for p in self.parts])

    def describe(self):
        return {"type": "union", "parts": [p.describe() for p in self.parts]}


def _diameter(pts):
    pts = np.unique(pts, axis=0)
    if len(pts) < 2:
        return 0.0
    if len(pts) > 3:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:
            # collinear: the extremes along the principal direction suffice
            d = pts - pts.mean(axis=0)
            u = np.linalg.svd(d, full_matrices=False)[2][0]
            s = d @ u
            pts = pts[[np.argmin(s), np.argmax(s)]]
    return float(pdist(pts).max())


def hull_geometry(A):
    """(diameter, distance to 0, enclosing half-disk centre, radius)."""
    pts = A.extent_points()
    diam = _diameter(pts)
    d0 = float(np.hypot(pts[:, 0], pts[:, 1]).min())
    c = 0.5 * (pts[:, 0].min() + pts[:, 0].max())
    R = float(np.hypot(pts[:, 0] - c, pts[:, 1]).max())
    return diam, d0, c, R


# estimators ----------------------------------------------------------------

@dataclass(frozen=True)
class CapEstimate:
    value: float
    stderr: float
    n_walkers: int
    y_start: float | None
    eps_boundary: float
    kind: str = "cap1"
    estimator: str = "point"
    radius: float | None = None
    n_escaped: int = 0
    seed: int | None = None
    hull: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {"hull": self.hull, "estimator": f"{self.estimator}:{self.kind}",
                "value": self.value, "stderr": self.stderr, "n_walkers": self.n_walkers,
                "y_start": self.y_start, "radius": self.radius, "eps": self.eps_boundary,
                "n_escaped": self.n_escaped, "seed": self.seed}


def _starts(rng, n, method, y_start, c, R):
    if method == "point":
        return np.column_stack([np.zeros(n), np.full(n, y_start)])
    th = np.arccos(1.0 - 2.0 * rng.random(n))
    return np.column_stack([c + R * np.cos(th), R * np.sin(th)])


def _walk(segs, disks, ks, n_walkers, method, y_start, c, R, eps, stream, max_steps):
    """Run blocks of walkers; returns (im, hit, n_escaped)."""
    if n_walkers < 2:
        raise ValueError("need at least two walkers")
    rng, _ = _as_stream(stream)
    segs = np.ascontiguousarray(segs, dtype=np.float64).reshape(-1, 4)
    disks = np.ascontiguousarray(disks, dtype=np.float64).reshape(-1, 2)
    boxes, lo, base = _wos.build_tree(segs)
    ks = np.ascontiguousarray(ks, dtype=np.int64)
    nb = -(-n_walkers // BLOCK)
    ims, hits, esc = [], [], 0
    # each block has its own stream, so results do not depend on how blocks
    # are scheduled
    for b, child in enumerate(rng.spawn(nb)):
        m = min(BLOCK, n_walkers - b * BLOCK)
        st = _starts(child, m, method, y_start, c, R)
        im, hit, escaped, _ = _wos.wos_prefix(st, segs, boxes, lo, base, disks, ks,
                                              eps, max_steps, kernel_seed(child))
        ims.append(im)
        hits.append(hit)
        esc += int(escaped.sum())
    if esc:
        log.warning("%d of %d walkers exceeded %d steps; counted as escaped", esc, n_walkers, max_steps)
    return np.vstack(ims), np.vstack(hits), esc


def _setup(A, y_start, eps, method):
    diam, d0, c, R = hull_geometry(A)
    if eps is None:
        eps = 1e-4 * max(diam, 1e-300)
    if not eps > 0:
        raise ValueError("eps must be positive")
    if method == "point":
        floor = 10.0 * (diam + d0)
        if y_start is None:
            y_start = floor
        if y_start < floor:
            raise ValueError(f"y_start must be >= 10 (diam + dist to 0) = {floor}")
        return eps, float(y_start), c, R, float(y_start)
    if method == "semicircle":
        R = 1.05 * R + 1e-12
        return eps, None, c, R, 4.0 * R / np.pi
    raise ValueError(f"unknown method {method!r}")


def estimate_caps(A, n_walkers: int = 20_000, y_start: float | None = None,
                  eps: float | None = None, stream=0, method: str = "point",
                  max_steps: int = MAX_STEPS) -> tuple[CapEstimate, CapEstimate]:
    """(cap0, cap1) estimates from one walker ensemble."""
    eps, y_start, c, R, scale = _setup(A, y_start, eps, method)
    segs = A.segments()
    seed = stream if isinstance(stream, (int, np.integer)) else None
    im, hit, esc = _walk(segs, A.disks(), [len(segs)], n_walkers, method, y_start, c, R,
                         eps, stream, max_steps)
    common = dict(n_walkers=n_walkers, y_start=y_start, eps_boundary=eps, estimator=method,
                  radius=None if method == "point" else R, n_escaped=esc, seed=seed,
                  hull=A.describe())
    out = []
    for kind, v in (("cap0", hit[:, 0].astype(float)), ("cap1", im[:, 0])):
        v = scale * v
        out.append(CapEstimate(float(v.mean()), float(v.std(ddof=1) / np.sqrt(n_walkers)),
                               kind=kind, **common))
    return out[0], out[1]


def estimate_cap0(A, n_walkers: int = 20_000, y_start=None, eps=None, stream=0,
                  method: str = "point", max_steps: int = MAX_STEPS) -> CapEstimate:
    """h_inf mass of A."""
    return estimate_caps(A, n_walkers, y_start, eps, stream, method, max_steps)[0]


def estimate_cap1(A, n_walkers: int = 20_000, y_start=None, eps=None, stream=0,
                  method: str = "point", max_steps: int = MAX_STEPS) -> CapEstimate:
    """Half-plane capacity of A."""
    return estimate_caps(A, n_walkers, y_start, eps, stream, method, max_steps)[1]


@dataclass(frozen=True)
class PrefixCaps:
    """cap1 of the prefix hulls p[0..k] for k in ``ks``, from shared walkers.

    ``samples`` holds the per-walker contributions (n_walkers, len(ks)); the
    increment between two prefixes has a paired standard error, much smaller
    than the two marginal errors combined.
    """

    ks: np.ndarray
    samples: np.ndarray
    n_escaped: int = 0

    @property
    def values(self):
        return self.samples.mean(axis=0)

    @property
    def stderr(self):
        return self.samples.std(axis=0, ddof=1) / np.sqrt(self.samples.shape[0])

    def increment(self, q0: int, q1: int) -> tuple[float, float]:
        d = self.samples[:, q1] - self.samples[:, q0]
        return float(d.mean()), float(d.std(ddof=1) / np.sqrt(len(d)))


def prefix_caps(points, ks, n_walkers: int = 4000, stream=0, eps: float | None = None,
                max_steps: int = MAX_STEPS) -> PrefixCaps:
    """Capacities of several prefixes of a polyline with one walker ensemble.

    Uses the semicircle start around the largest requested prefix.
    """
    pts = points.points if isinstance(points, Path) else np.asarray(points, dtype=np.float64)
    ks = np.asarray(ks, dtype=np.int64)
    if ks.size == 0:
        return PrefixCaps(ks, np.zeros((n_walkers, 0)))
    if np.any(np.diff(ks) <= 0) or ks[0] < 1 or ks[-1] > len(pts) - 1:
        raise ValueError("ks must be strictly increasing prefix lengths in [1, n]")
    hull = PolylineHull(pts[: ks[-1] + 1])
    if eps is None:
        eps = 1e-4 * max(_diameter(pts[: ks[0] + 1]), 1e-12)
    eps, _, c, R, scale = _setup(hull, None, eps, "semicircle")
    im, _, esc = _walk(hull.segments(), hull.disks(), ks, n_walkers, "semicircle", None, c, R,
                       eps, stream, max_steps)
    return PrefixCaps(ks, scale * im, esc)


# exact maps ----------------------------------------------------------------

class _SlitMap:
    def __init__(self, x0, h):
        self.x0, self.h = float(x0), float(h)

    def check(self, z):
        w = z - self.x0
        if np.any(z.imag < 0):
            raise ValueError("point below the real axis")
        if np.any((w.real == 0) & (w.imag >= 0) & (w.imag <= self.h)):
            raise ValueError("evaluation on the removed slit")

    def _root(self, w):
        # principal root of 1 + h^2/w^2 has its cut on the slit and its mirror
        return np.sqrt(1.0 + (self.h / w) ** 2)

    def f(self, z):
        w = z - self.x0
        return self.x0 + w * self._root(w)

    def df(self, z):
        return 1.0 / self._root(z - self.x0)

    def hcap(self):
        return 0.5 * self.h**2

    def hits_segment(self, a, b):
        """Whether segment a-b (complex) meets the slit."""
        lo, hi = min(a.real, b.real), max(a.real, b.real)
        if not lo <= self.x0 <= hi:
            return False
        if a.real == b.real:
            return min(a.imag, b.imag) <= self.h
        t = (self.x0 - a.real) / (b.real - a.real)
        return a.imag + t * (b.imag - a.imag) <= self.h

    def describe(self):
        return {"type": "slit", "x0": self.x0, "h": self.h}


class _DiskMap:
    def __init__(self, x0, r):
        self.x0, self.r = float(x0), float(r)

    def check(self, z):
        if np.any(z.imag < 0):
            raise ValueError("point below the real axis")
        if np.any(np.abs(z - self.x0) <= self.r):
            raise ValueError("evaluation on the removed semidisk")

    def f(self, z):
        return z + self.r**2 / (z - self.x0)

    def df(self, z):
        return 1.0 - self.r**2 / (z - self.x0) ** 2

    def hcap(self):
        return self.r**2

    def hits_segment(self, a, b):
        d = b - a
        L = abs(d) ** 2
        t = 0.0 if L == 0 else min(max(((self.x0 - a) * np.conj(d)).real / L, 0.0), 1.0)
        return abs(a + t * d - self.x0) <= self.r

    def describe(self):
        return {"type": "semidisk", "x0": self.x0, "r": self.r}


class HullMap:
    """Normalized map of H minus a hull, f(z) - z -> 0 at infinity.

    A composition of slit and semidisk maps applied in list order; each
    primitive lives in the image plane of the ones before it.
    """

    def __init__(self, parts):
        if not parts:
            raise ValueError("empty map")
        self.parts = list(parts)

    def __call__(self, z):
        return self.evaluate(z)[0]

    def evaluate(self, z):
        """(f(z), f'(z)) by the chain rule; rejects points on the hull."""
        z = np.asarray(z, dtype=np.complex128)
        d = np.ones_like(z)
        for m in self.parts:
            m.check(z)
            d = d * m.df(z)
            z = m.f(z)
        return z, d

    def deriv(self, z):
        return self.evaluate(z)[1]

    def hcap(self) -> float:
        return float(sum(m.hcap() for m in self.parts))

    def describe(self):
        return {"type": "map", "parts": [m.describe() for m in self.parts]}


def hull_map(A) -> HullMap:
    if isinstance(A, VerticalSlit):
        return HullMap([_SlitMap(A.x0, A.h)])
    if isinstance(A, Semidisk):
        return HullMap([_DiskMap(A.x0, A.r)])
    raise TypeError(f"no exact map for {type(A).__name__}")


def compose(maps: Sequence[HullMap]) -> HullMap:
    """Apply ``maps[0]`` first; capacities add."""
    if not maps:
        raise ValueError("compose needs at least one map")
    return HullMap([m for M in maps for m in M.parts])


def avoid_probability(A) -> float:
    """f'(0) for the normalized map of A: the chance the excursion avoids A."""
    M = A if isinstance(A, HullMap) else hull_map(A)
    try:
        d = M.deriv(np.complex128(0.0))
    except ValueError as e:
        raise ValueError("hull touches the origin") from e
    return float(d.real)


def _check_avoids(M: HullMap, z):
    # vertex images are validated at every stage; straight-segment tests are
    # exact for the first primitive and a polyline proxy for later ones
    for m in M.parts:
        m.check(z)
        for a, b in zip(z[:-1], z[1:]):
            if m.hits_segment(a, b):
                raise ValueError("path meets the hull")
        z = m.f(z)


def transformed_clock(M: HullMap, p: Path, rule: str = "midpoint") -> np.ndarray:
    """s(t_k) = integral of |f'(path)|^2 up to each grid time."""
    z = p.x + 1j * p.y
    if rule == "midpoint":
        w = np.abs(M.deriv(0.5 * (z[:-1] + z[1:]))) ** 2
    elif rule == "trapezoid":
        g = np.abs(M.deriv(z)) ** 2
        w = 0.5 * (g[:-1] + g[1:])
    else:
        raise ValueError(f"unknown rule {rule!r}")
    return np.concatenate([[0.0], np.cumsum(w * p.dt)])


def f_transform(M: HullMap, p: Path, rule: str = "midpoint", dt: float | None = None) -> Path:
    """Image of ``p`` under M, re-timed by the transformed clock and
    resampled on a uniform grid by linear interpolation."""
    z = p.x + 1j * p.y
    _check_avoids(M, z)
    fz = M(z)
    s = transformed_clock(M, p, rule)
    dt = p.dt if dt is None else dt
    m = int(np.floor(s[-1] / dt * (1 + 1e-12)))
    t = np.arange(m + 1) * dt
    pts = np.column_stack([np.interp(t, s, fz.real), np.interp(t, s, fz.imag)])
    return Path(pts, dt, seed=p.seed, scheme=f"f-transform:{rule}", truncated=p.truncated)
