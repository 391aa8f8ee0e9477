"""Reconstruction from skeleton disks and per-pixel coverage counting.

A skeleton point ``p`` with squared radius ``d2`` reconstructs the strict
disk ``|z - p|^2 < d2``. The coverage map counts, for every pixel, how many
disks of the current point set cover it; a pixel with count 1 is owned by
exactly one point and is lost when that point goes.
"""
from __future__ import annotations

import colorsys
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .distfield import disk_offsets
from .errors import DomainError
from .medialaxis import Skeleton
from .pixelgrid import BinaryImage, Point, encode_ppm

__all__ = [
    "CoverageMap",
    "reconstruct",
    "build_coverage",
    "unique_impact",
    "set_impact",
    "remove_point",
    "add_point",
    "render_overlap",
    "disk_indices",
]


def disk_indices(p, d2: int, width: int, height: int) -> np.ndarray:
    """Flat row-major indices of the strict disk at ``p``, clipped to the canvas."""
    dx, dy = disk_offsets(int(d2))
    xs = dx + int(p[0])
    ys = dy + int(p[1])
    inside = (xs >= 0) & (xs < width) & (ys >= 0) & (ys < height)
    if not inside.all():
        xs, ys = xs[inside], ys[inside]
    return ys * width + xs


def _coverage_counts(skel: Skeleton) -> np.ndarray:
    w, h = skel.width, skel.height
    counts = np.zeros(w * h, dtype=np.int64)
    by_radius: dict[int, list] = {}
    for p, r in skel.radii.items():
        by_radius.setdefault(r, []).append(p)
    for r, pts in by_radius.items():
        dx, dy = disk_offsets(r)
        px = np.array([p[0] for p in pts], dtype=np.int64)
        py = np.array([p[1] for p in pts], dtype=np.int64)
        xs = (px[:, None] + dx[None, :]).ravel()
        ys = (py[:, None] + dy[None, :]).ravel()
        inside = (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
        counts += np.bincount(ys[inside] * w + xs[inside], minlength=w * h)
    return counts


def reconstruct(skel: Skeleton) -> BinaryImage:
    """Union of the strict disks of all skeleton points."""
    counts = _coverage_counts(skel)
    return BinaryImage((counts > 0).reshape(skel.height, skel.width))


@dataclass(eq=False)
class CoverageMap:
    """Mutable disk-coverage counts of a point set on a fixed canvas.

    ``active`` maps each counted point to its squared radius.
    """

    width: int
    height: int
    count: np.ndarray
    total_covered: int
    active: dict = field(default_factory=dict)

    @classmethod
    def empty(cls, width: int, height: int) -> "CoverageMap":
        return cls(width, height, np.zeros(width * height, dtype=np.int32), 0, {})

    @property
    def grid(self) -> np.ndarray:
        return self.count.reshape(self.height, self.width)

    def covered(self) -> BinaryImage:
        return BinaryImage((self.count > 0).reshape(self.height, self.width))

    def check(self) -> None:
        """Recount from scratch and compare with the incremental state."""
        fresh = build_coverage(Skeleton(self.width, self.height, self.active))
        if not np.array_equal(fresh.count, self.count):
            raise AssertionError("coverage counts drifted from their point set")
        if fresh.total_covered != self.total_covered:
            raise AssertionError(
                f"total_covered is {self.total_covered}, recount gives {fresh.total_covered}"
            )

    def _indices(self, p, d2) -> np.ndarray:
        return disk_indices(p, d2, self.width, self.height)


def build_coverage(skel: Skeleton) -> CoverageMap:
    counts = _coverage_counts(skel)
    if counts.size and counts.max() > np.iinfo(np.int32).max:
        raise DomainError("coverage count exceeds the 32-bit range")
    return CoverageMap(
        skel.width,
        skel.height,
        counts.astype(np.int32),
        int(np.count_nonzero(counts)),
        dict(skel.radii),
    )


def _require_active(cov: CoverageMap, p) -> Point:
    p = Point(int(p[0]), int(p[1]))
    if p not in cov.active:
        raise DomainError(f"{tuple(p)} is not a point of the coverage map")
    return p


def unique_impact(cov: CoverageMap, skel: Skeleton, p) -> int:
    """Pixels covered by ``p``'s disk and by no other disk."""
    if p not in skel:
        raise DomainError(f"{tuple(p)} is not a skeleton point")
    p = _require_active(cov, p)
    idx = cov._indices(p, cov.active[p])
    return int(np.count_nonzero(cov.count[idx] == 1))


def set_impact(cov: CoverageMap, points: Iterable) -> int:
    """Pixels covered only by disks of ``points`` among the counted set.

    A pixel is lost exactly when its count equals the number of disks of
    ``points`` that cover it. Nothing is mutated.
    """
    pts = [_require_active(cov, p) for p in points]
    if not pts:
        return 0
    if len(set(pts)) != len(pts):
        raise DomainError("impact set contains a point twice")
    idx = np.concatenate([cov._indices(p, cov.active[p]) for p in pts])
    uniq, mult = np.unique(idx, return_counts=True)
    return int(np.count_nonzero(cov.count[uniq] == mult))


def remove_point(cov: CoverageMap, skel: Skeleton, p) -> tuple[CoverageMap, set]:
    """Stop counting ``p``; returns the map and the pixels it leaves uncovered."""
    if p not in skel:
        raise DomainError(f"{tuple(p)} is not a skeleton point")
    p = _require_active(cov, p)
    d2 = cov.active.pop(p)
    idx = cov._indices(p, d2)
    cov.count[idx] -= 1
    lost = idx[cov.count[idx] == 0]
    cov.total_covered -= int(lost.size)
    w = cov.width
    return cov, {Point(int(i % w), int(i // w)) for i in lost}


def add_point(cov: CoverageMap, p, d2: int) -> CoverageMap:
    """Start counting ``p`` with squared radius ``d2``; inverse of :func:`remove_point`."""
    p = Point(int(p[0]), int(p[1]))
    if p in cov.active:
        raise DomainError(f"{tuple(p)} is already counted")
    if int(d2) < 1:
        raise DomainError(f"squared radius must be positive, got {d2}")
    idx = cov._indices(p, d2)
    cov.total_covered += int(np.count_nonzero(cov.count[idx] == 0))
    cov.count[idx] += 1
    cov.active[p] = int(d2)
    return cov


def _hue_rgb(hue_degrees: float) -> tuple[int, int, int]:
    r, g, b = colorsys.hsv_to_rgb(hue_degrees / 360.0, 1.0, 1.0)
    return round(r * 255), round(g * 255), round(b * 255)


def render_overlap(cov: CoverageMap) -> bytes:
    """False-colour PPM of coverage counts.

    Uncovered pixels are white; counts ``1..max`` run linearly in hue from
    blue (240 degrees) to red (0 degrees).
    """
    counts = cov.grid
    top = int(counts.max()) if counts.size else 0
    palette = np.full((top + 1, 3), 255, dtype=np.uint8)
    for c in range(1, top + 1):
        hue = 240.0 if top == 1 else 240.0 * (top - c) / (top - 1)
        palette[c] = _hue_rgb(hue)
    return encode_ppm(palette[counts])
