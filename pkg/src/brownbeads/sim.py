"""Seedable sampling of Brownian motion, BES(3) and half-plane excursions.

The excursion from 0 to infinity in the upper half-plane has a Brownian
motion as its real part and an independent 3-dimensional Bessel process as
its imaginary part.  Both are sampled exactly at grid times: the Bessel
coordinate is the Euclidean norm of a 3-d Gaussian random walk.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

__all__ = [
    "Path",
    "make_stream",
    "kernel_seed",
    "sample_bm",
    "sample_bes3",
    "sample_excursion",
    "sample_excursion_until_height",
    "scale_path",
]

Stream = Union[np.random.Generator, int]


def make_stream(root_seed: int, *task_key: int) -> np.random.Generator:
    """Generator for task ``task_key`` under ``root_seed``.

    A pure function of its arguments: the key is hashed into the seed
    sequence, so streams for different tasks are independent and parallel
    runs do not depend on execution order.
    """
    if not 0 <= int(root_seed) < 2**64:
        raise ValueError("root_seed must be a 64-bit unsigned integer")
    ss = np.random.SeedSequence(int(root_seed), spawn_key=tuple(int(k) for k in task_key))
    return np.random.Generator(np.random.PCG64(ss))


def kernel_seed(stream: np.random.Generator) -> int:
    """32-bit seed for the compiled kernels, drawn from ``stream``."""
    return int(stream.integers(0, 2**32 - 1))


def _as_stream(stream: Stream) -> tuple[np.random.Generator, Optional[int]]:
    if isinstance(stream, np.random.Generator):
        return stream, None
    return make_stream(int(stream)), int(stream)


def _check(n, dt):
    if n < 0:
        raise ValueError("n must be non-negative")
    if not dt > 0:
        raise ValueError("dt must be positive")


@dataclass(frozen=True, eq=False)
class Path:
    """Planar path on a uniform time grid.

    ``points`` has shape (n + 1, 2) and is read-only.  ``seed`` is the root
    seed when the path came from an integer seed, ``truncated`` marks a
    sampler that hit its step cap before its stopping rule.
    """

    points: np.ndarray
    dt: float
    seed: Optional[int] = None
    scheme: str = "exact-grid"
    truncated: bool = False
    # scale_path composes factors here so that rescaling is associative
    _base: Optional[np.ndarray] = field(default=None, repr=False)
    _base_dt: Optional[float] = field(default=None, repr=False)
    _scale: float = field(default=1.0, repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
            raise ValueError("points must have shape (n + 1, 2)")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "dt", float(self.dt))
        if self._base is None:
            object.__setattr__(self, "_base", pts)
            object.__setattr__(self, "_base_dt", self.dt)

    @property
    def n(self) -> int:
        return self.points.shape[0] - 1

    @property
    def x(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.points[:, 1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.dt

    @property
    def meta(self) -> dict:
        return {"seed": self.seed, "scheme": self.scheme, "n": self.n, "truncated": self.truncated}

    def __len__(self):
        return self.points.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Path):
            return NotImplemented
        return (self.dt == other.dt and self.seed == other.seed
                and np.array_equal(self.points, other.points))

    __hash__ = None


def sample_bm(n: int, dt: float, stream: Stream) -> np.ndarray:
    """Brownian motion at times 0, dt, ..., n dt."""
    _check(n, dt)
    rng, _ = _as_stream(stream)
    out = np.zeros(n + 1)
    out[1:] = np.cumsum(rng.normal(0.0, np.sqrt(dt), n))
    return out


def sample_bes3(n: int, dt: float, stream: Stream) -> np.ndarray:
    """BES(3) from 0 at grid times, as the norm of a 3-d Brownian motion."""
    _check(n, dt)
    rng, _ = _as_stream(stream)
    out = np.zeros(n + 1)
    w = np.cumsum(rng.normal(0.0, np.sqrt(dt), (n, 3)), axis=0)
    out[1:] = np.sqrt(np.einsum("ij,ij->i", w, w))
    return out


def sample_excursion(n: int, dt: float, stream: Stream) -> Path:
    """Half-plane excursion from 0 with ``n`` steps of size ``dt``."""
    _check(n, dt)
    rng, seed = _as_stream(stream)
    sx, sy = rng.spawn(2)
    pts = np.column_stack([sample_bm(n, dt, sx), sample_bes3(n, dt, sy)])
    return Path(pts, dt, seed=seed)


def sample_excursion_until_height(y_max: float, dt: float, stream: Stream,
                                  n_cap: int = 10**7) -> Path:
    """Excursion stopped at the first grid time with height >= ``y_max``.

    If ``n_cap`` steps pass first, the returned path has ``truncated=True``
    and statistics computed from it must be treated as censored.
    """
    if not y_max > 0:
        raise ValueError("y_max must be positive")
    _check(n_cap, dt)
    rng, seed = _as_stream(stream)
    sx, sy = rng.spawn(2)
    s = np.sqrt(dt)
    xs, ys = [np.zeros(1)], [np.zeros(1)]
    x_last = 0.0
    w_last = np.zeros(3)
    done = 0
    chunk = 4096
    stop = -1
    while done < n_cap:
        m = min(chunk, n_cap - done)
        x = x_last + np.cumsum(sx.normal(0.0, s, m))
        w = w_last + np.cumsum(sy.normal(0.0, s, (m, 3)), axis=0)
        y = np.sqrt(np.einsum("ij,ij->i", w, w))
        hit = np.flatnonzero(y >= y_max)
        if hit.size:
            stop = hit[0]
            xs.append(x[: stop + 1])
            ys.append(y[: stop + 1])
            break
        xs.append(x)
        ys.append(y)
        x_last, w_last = x[-1], w[-1]
        done += m
        chunk = min(2 * chunk, 1 << 20)
    pts = np.column_stack([np.concatenate(xs), np.concatenate(ys)])
    return Path(pts, dt, seed=seed, truncated=stop < 0)


def scale_path(p: Path, r: float) -> Path:
    """Brownian scaling: space by ``r``, time by ``r**2``."""
    if not r > 0:
        raise ValueError("scale factor must be positive")
    k = p._scale * r
    return Path(p._base * k, p._base_dt * k**2, seed=p.seed, scheme=p.scheme,
                truncated=p.truncated, _base=p._base, _base_dt=p._base_dt, _scale=k)
