"""Persistence: binary paths, CSV tables, SVG rendering and run manifests."""
from __future__ import annotations

import contextlib
import csv
import hashlib
import json
import os
import shutil
import struct
import tempfile
from dataclasses import dataclass, field, asdict
from xml.sax.saxutils import quoteattr

import numpy as np

from .sim import Path

__all__ = ["PathFormatError", "write_path", "read_path", "path_bytes", "write_cuts_csv",
           "write_beads_csv", "write_csv", "render_svg", "RunManifest", "config_hash",
           "file_digest", "atomic_outputs"]

MAGIC = b"BBPATH01"
_HEADER = struct.Struct("<QdQ")


class PathFormatError(ValueError):
    pass


def path_bytes(p: Path) -> bytes:
    """Serialized path: magic, u64 n, f64 dt, u64 seed (0 if unknown), then
    (n + 1) little-endian f64 pairs (x, y)."""
    seed = 0 if p.seed is None else int(p.seed)
    return MAGIC + _HEADER.pack(p.n, p.dt, seed) + p.points.astype("<f8").tobytes()


def write_path(p: Path, file) -> None:
    with open(file, "wb") as f:
        f.write(path_bytes(p))


def read_path(file) -> Path:
    with open(file, "rb") as f:
        data = f.read()
    head = len(MAGIC) + _HEADER.size
    if len(data) < head or data[: len(MAGIC)] != MAGIC:
        raise PathFormatError(f"{file}: not a BBPATH01 file")
    n, dt, seed = _HEADER.unpack_from(data, len(MAGIC))
    body = data[head:]
    if len(body) != 16 * (n + 1):
        raise PathFormatError(f"{file}: expected {n + 1} points, found {len(body) / 16:g}")
    pts = np.frombuffer(body, dtype="<f8").reshape(n + 1, 2).astype(np.float64)
    try:
        return Path(pts, dt, seed=seed or None)
    except ValueError as e:
        raise PathFormatError(f"{file}: {e}") from e


def write_csv(file, header, rows) -> None:
    with open(file, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_cuts_csv(p: Path, cuts, file) -> None:
    ks = np.asarray(cuts.indices)
    rows = [[int(k), repr(float(k * p.dt)), repr(float(p.x[k])), repr(float(p.y[k]))] for k in ks]
    write_csv(file, ["k", "t", "x", "y"], rows)


def write_beads_csv(records, file) -> None:
    cols = ["path_seed", "start_idx", "end_idx", "duration", "delta_a", "stderr", "diameter"]
    rows = [[getattr(r, c) for c in cols] for r in records]
    write_csv(file, cols, rows)


def render_svg(p: Path, cuts=None, width: int = 800, height: int | None = None,
               dot_radius: float = 3.0) -> str:
    """SVG of the path over [min x, max x] x [0, max y] with 5% margins.

    The real axis is drawn as a baseline and cut vertices as dots above the
    path layer.
    """
    x, y = p.x, p.y
    x0, x1 = float(x.min()), float(x.max())
    y1 = float(y.max())
    wx = max(x1 - x0, 1e-12)
    wy = max(y1, 1e-12)
    if height is None:
        height = int(np.clip(width * wy / wx, 200, 2 * width))
    mx, my = 0.05 * width, 0.05 * height
    sx = (width - 2 * mx) / wx
    sy = (height - 2 * my) / wy
    px = mx + (x - x0) * sx
    py = height - my - y * sy
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
    base = height - my
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<line x1="0" y1="{base:.2f}" x2="{width}" y2="{base:.2f}" stroke="#888" stroke-width="1"/>',
        f'<polyline points={quoteattr(pts)} fill="none" stroke="#1f4e9a" stroke-width="0.8"/>',
    ]
    if cuts is not None and len(cuts):
        out.append('<g fill="#d62728">')
        for k in cuts.indices:
            out.append(f'<circle cx="{px[k]:.2f}" cy="{py[k]:.2f}" r="{dot_radius}"/>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def file_digest(file) -> str:
    h = hashlib.sha256()
    with open(file, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


@dataclass
class RunManifest:
    command: str
    config_sha256: str
    version: str
    seed: int | None
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    wall_clock_seconds: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)


@contextlib.contextmanager
def atomic_outputs(out_dir):
    """Yield a scratch directory; its files land in ``out_dir`` only if the
    block finishes without error."""
    out_dir = os.path.abspath(out_dir)
    parent = os.path.dirname(out_dir)
    os.makedirs(parent, exist_ok=True)
    tmp = tempfile.mkdtemp(prefix=".bbeads-", dir=parent)
    try:
        yield tmp
        os.makedirs(out_dir, exist_ok=True)
        for name in sorted(os.listdir(tmp)):
            os.replace(os.path.join(tmp, name), os.path.join(out_dir, name))
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
