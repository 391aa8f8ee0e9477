"""Slow, obviously-correct reference implementations used by the tests.

Nothing here imports package internals beyond plain data types.
"""
from __future__ import annotations

import itertools
from collections import deque

import numpy as np


def brute_edt(arr: np.ndarray) -> np.ndarray:
    """Squared distance to the nearest background centre. Outside the canvas
    everything is background, and the closest such pixel lies straight
    across the nearest side."""
    h, w = arr.shape
    ys, xs = np.mgrid[0:h, 0:w]
    side = np.minimum.reduce([(xs + 1) ** 2, (w - xs) ** 2, (ys + 1) ** 2, (h - ys) ** 2])
    out = np.where(arr, side, 0).astype(np.int64)
    by, bx = np.nonzero(~arr)
    oy, ox = np.nonzero(arr)
    if by.size and oy.size:
        d = (oy[:, None] - by[None, :]) ** 2 + (ox[:, None] - bx[None, :]) ** 2
        out[oy, ox] = np.minimum(out[oy, ox], d.min(axis=1))
    return out


def disk_set(p, d2):
    x, y = p
    r = int(np.ceil(np.sqrt(d2))) + 1
    return {(x + dx, y + dy) for dx in range(-r, r + 1) for dy in range(-r, r + 1) if dx * dx + dy * dy < d2}


def brute_maximal(d2: np.ndarray, criterion: str = "discrete") -> set:
    h, w = d2.shape
    obj = [(x, y) for y in range(h) for x in range(w) if d2[y, x] > 0]
    disks = {p: disk_set(p, d2[p[1], p[0]]) for p in obj}
    out = set()
    for p in obj:
        contained = False
        for q in obj:
            if q == p:
                continue
            if criterion == "discrete":
                contained = disks[p] <= disks[q]
            else:
                # dist + rp <= rq, exactly on squares
                a, b = int(d2[p[1], p[0]]), int(d2[q[1], q[0]])
                dd = (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2
                contained = _sqrt_sum_leq(dd, a, b)
            if contained:
                break
        if not contained:
            out.add(p)
    return out


def _sqrt_sum_leq(a: int, b: int, c: int) -> bool:
    """sqrt(a) + sqrt(b) <= sqrt(c) for non-negative integers."""
    # both sides non-negative: square -> a + b + 2 sqrt(ab) <= c
    rest = c - a - b
    if rest < 0:
        return False
    return 4 * a * b <= rest * rest


def reconstruct_set(radii: dict) -> set:
    out = set()
    for p, d2 in radii.items():
        out |= disk_set(p, d2)
    return out


def components(points, conn: int = 8) -> list[set]:
    pts = set(points)
    if conn == 8:
        steps = [(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1) if dx or dy]
    else:
        steps = [(1, 0), (-1, 0), (0, 1), (0, -1)]
    seen, comps = set(), []
    for s in sorted(pts):
        if s in seen:
            continue
        comp, queue = {s}, deque([s])
        seen.add(s)
        while queue:
            x, y = queue.popleft()
            for dx, dy in steps:
                q = (x + dx, y + dy)
                if q in pts and q not in seen:
                    seen.add(q)
                    comp.add(q)
                    queue.append(q)
        comps.append(comp)
    return comps


def topology_oracle(points, width: int, height: int) -> tuple[int, int]:
    """(8-components of the object, 4-components of background not reaching
    the canvas border)."""
    pts = set(points)
    comps = len(components(pts, 8))
    bg = {(x, y) for x in range(width) for y in range(height)} - pts
    holes = 0
    for comp in components(bg, 4):
        if not any(x in (0, width - 1) or y in (0, height - 1) for x, y in comp):
            holes += 1
    return comps, holes


def simple_by_window(mask: int) -> bool:
    """Simple-point test by global topology of a 5x5 window: deleting the
    centre must keep the numbers of 8-components and 4-holes."""
    offs = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)]
    nbrs = {(2 + dx, 2 + dy) for k, (dx, dy) in enumerate(offs) if mask >> k & 1}
    before = nbrs | {(2, 2)}
    return topology_oracle(before, 5, 5) == topology_oracle(nbrs, 5, 5)


def all_pairs_diameter2(points) -> int:
    pts = list(points)
    return max(((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 for a, b in itertools.combinations(pts, 2)), default=0)


def impact_oracle(radii: dict, subset) -> int:
    """|reconstruct(all)| - |reconstruct(all minus subset)|."""
    sub = set(subset)
    full = reconstruct_set(radii)
    rest = reconstruct_set({p: r for p, r in radii.items() if p not in sub})
    return len(full - rest)
