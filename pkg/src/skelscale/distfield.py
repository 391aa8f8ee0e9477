"""Exact squared Euclidean distance transform and inscribed disks.

Distances are measured between pixel centres and kept squared, so every
quantity here is an integer. The canvas is surrounded by background.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import isqrt

import numpy as np

from .errors import DomainError
from .pixelgrid import BinaryImage, encode_pgm

__all__ = [
    "SquaredDistanceField",
    "compute_edt",
    "disk_covers",
    "disk_offsets",
    "render_distance",
]


@dataclass(frozen=True, eq=False)
class SquaredDistanceField:
    """Per-pixel squared distance to the nearest background pixel centre."""

    d2: np.ndarray

    def __post_init__(self):
        arr = np.array(self.d2, dtype=np.int64, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "d2", arr)

    @property
    def width(self) -> int:
        return self.d2.shape[1]

    @property
    def height(self) -> int:
        return self.d2.shape[0]

    def __getitem__(self, p) -> int:
        return int(self.d2[p[1], p[0]])

    def __eq__(self, other):
        if not isinstance(other, SquaredDistanceField):
            return NotImplemented
        return bool(np.array_equal(self.d2, other.d2))


def _column_pass(obj: np.ndarray) -> np.ndarray:
    """Vertical distance to the nearest background pixel in the same column."""
    h, w = obj.shape
    g = np.empty((h, w), dtype=np.int64)
    run = np.zeros(w, dtype=np.int64)  # virtual background row above the canvas
    for y in range(h):
        run = np.where(obj[y], run + 1, 0)
        g[y] = run
    run = np.zeros(w, dtype=np.int64)  # and below it
    for y in range(h - 1, -1, -1):
        run = np.where(obj[y], np.minimum(g[y], run + 1), 0)
        g[y] = run
    return g


def _row_pass(g_row: list[int]) -> list[int]:
    """Lower envelope of parabolas ``(x-i)^2 + g(i)^2`` along one row.

    ``g_row`` already includes the virtual background columns at both ends.
    """
    m = len(g_row)
    gg = [v * v for v in g_row]
    s = [0] * m
    t = [0] * m
    q = 0
    for u in range(1, m):
        gu = gg[u]
        while q >= 0:
            tq, sq = t[q], s[q]
            if (tq - sq) * (tq - sq) + gg[sq] > (tq - u) * (tq - u) + gu:
                q -= 1
            else:
                break
        if q < 0:
            q = 0
            s[0] = u
        else:
            sq = s[q]
            sep = (u * u - sq * sq + gu - gg[sq]) // (2 * (u - sq))
            start = sep + 1
            if start < m:
                q += 1
                s[q] = u
                t[q] = start
    out = [0] * m
    for u in range(m - 1, -1, -1):
        sq = s[q]
        out[u] = (u - sq) * (u - sq) + gg[sq]
        if u == t[q]:
            q -= 1
    return out


def compute_edt(img: BinaryImage) -> SquaredDistanceField:
    """Exact squared EDT (Meijster-style separable two-pass scan)."""
    obj = img.array
    h, w = obj.shape
    g = _column_pass(obj)
    d2 = np.zeros((h, w), dtype=np.int64)
    rows = np.nonzero(obj.any(axis=1))[0]
    for y in rows:
        row = [0] + g[y].tolist() + [0]
        d2[y] = _row_pass(row)[1:-1]
    return SquaredDistanceField(d2)


@lru_cache(maxsize=None)
def disk_offsets(d2: int) -> tuple[np.ndarray, np.ndarray]:
    """Offsets ``(dx, dy)`` of the strict discrete disk ``dx^2+dy^2 < d2``."""
    if d2 <= 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty
    r = isqrt(d2 - 1)
    dy, dx = np.mgrid[-r:r + 1, -r:r + 1]
    inside = dx * dx + dy * dy < d2
    dx = dx[inside].astype(np.int64)
    dy = dy[inside].astype(np.int64)
    dx.setflags(write=False)
    dy.setflags(write=False)
    return dx, dy


def disk_covers(df: SquaredDistanceField, center, q) -> bool:
    """Whether the inscribed disk at ``center`` contains pixel ``q``.

    The disk is strict (squared distance below the centre's value), which
    keeps it inside the object: the nearest background centre sits at
    exactly the centre's squared distance.
    """
    r2 = df[center]
    if r2 < 1:
        raise DomainError(f"disk centre {tuple(center)} is a background pixel")
    dx = q[0] - center[0]
    dy = q[1] - center[1]
    return dx * dx + dy * dy < r2


def render_distance(df: SquaredDistanceField) -> bytes:
    """PGM where brightness grows with the distance to the boundary."""
    d = np.sqrt(df.d2.astype(np.float64))
    peak = d.max()
    if peak == 0:
        gray = np.zeros(df.d2.shape, dtype=np.uint8)
    else:
        gray = np.floor(255.0 * d / peak + 0.5).astype(np.uint8)
    return encode_pgm(gray)
