"""Discrete skeletons by homotopic maximal-disk thinning.

Object pixels use 8-connectivity and background pixels 4-connectivity.
Neighbourhood configurations are encoded as 8-bit masks, one bit per
neighbour in the order NW, N, NE, W, E, SW, S, SE; all local predicates are
precomputed lookup tables over the 256 configurations.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import isqrt
from types import MappingProxyType
from typing import Iterable, Mapping, Optional

import numpy as np

from .distfield import SquaredDistanceField, compute_edt, disk_offsets
from .errors import DomainError, ParseError
from .pixelgrid import BinaryImage, CanonicalFrame, Point, row_major

__all__ = [
    "NEIGHBOR_OFFSETS",
    "PointClass",
    "Skeleton",
    "Arc",
    "neighbor_mask",
    "classify_point",
    "classify_all",
    "count_significant",
    "is_removal_homotopic",
    "detect_maximal_disk",
    "maximal_disk_mask",
    "skeletonize",
    "decompose_arcs",
    "dump_skeleton",
    "parse_skeleton",
]

# (dx, dy) for mask bits 0..7
NEIGHBOR_OFFSETS = ((-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1))


def _components(cells: list, adjacent) -> list[list]:
    seen: set = set()
    comps = []
    for c in cells:
        if c in seen:
            continue
        comp, stack = [], [c]
        seen.add(c)
        while stack:
            a = stack.pop()
            comp.append(a)
            for b in cells:
                if b not in seen and adjacent(a, b):
                    seen.add(b)
                    stack.append(b)
        comps.append(comp)
    return comps


def _adj8(a, b) -> bool:
    return a != b and abs(a[0] - b[0]) <= 1 and abs(a[1] - b[1]) <= 1


def _adj4(a, b) -> bool:
    return abs(a[0] - b[0]) + abs(a[1] - b[1]) == 1


_SIDES = (
    frozenset({(-1, -1), (0, -1), (1, -1)}),  # above
    frozenset({(-1, 1), (0, 1), (1, 1)}),  # below
    frozenset({(-1, -1), (-1, 0), (-1, 1)}),  # left
    frozenset({(1, -1), (1, 0), (1, 1)}),  # right
)


def _build_tables():
    simple = bytearray(256)
    endpoint = bytearray(256)
    branching = bytearray(256)
    in_block = bytearray(256)
    for m in range(256):
        on = [o for k, o in enumerate(NEIGHBOR_OFFSETS) if m >> k & 1]
        off = [o for k, o in enumerate(NEIGHBOR_OFFSETS) if not m >> k & 1]
        t8 = len(_components(on, _adj8))
        t4 = sum(
            1
            for comp in _components(off, _adj4)
            if any(abs(dx) + abs(dy) == 1 for dx, dy in comp)
        )
        simple[m] = t8 == 1 and t4 == 1
        n = len(on)
        if n <= 1:
            endpoint[m] = 1
        elif n == 2:
            endpoint[m] = _adj8(on[0], on[1])
        elif n == 3:
            endpoint[m] = any(set(on) <= side for side in _SIDES)
        if n >= 3 and not any(_adj4(a, b) for i, a in enumerate(on) for b in on[i + 1:]):
            branching[m] = 1
        s = set(on)
        in_block[m] = any(
            {(sx, 0), (0, sy), (sx, sy)} <= s for sx in (-1, 1) for sy in (-1, 1)
        )
    return bytes(simple), bytes(endpoint), bytes(branching), bytes(in_block)


SIMPLE_LUT, ENDPOINT_LUT, BRANCHING_LUT, BLOCK_LUT = _build_tables()
_DELETABLE_LUT = bytes(s and not e for s, e in zip(SIMPLE_LUT, ENDPOINT_LUT))


class PointClass(enum.Enum):
    ENDPOINT = "endpoint"
    BRANCHING = "branching"
    SIMPLE = "simple"


def _class_of_mask(m: int) -> PointClass:
    if ENDPOINT_LUT[m]:
        return PointClass.ENDPOINT
    if BRANCHING_LUT[m]:
        return PointClass.BRANCHING
    return PointClass.SIMPLE


@dataclass(frozen=True, eq=False)
class Skeleton:
    """Skeleton points of a ``width`` x ``height`` canvas with their squared radii."""

    width: int
    height: int
    radii: Mapping[Point, int]

    def __post_init__(self):
        radii = {Point(int(p[0]), int(p[1])): int(r) for p, r in self.radii.items()}
        for p, r in radii.items():
            if r < 1:
                raise DomainError(f"skeleton point {tuple(p)} has non-positive squared radius {r}")
        object.__setattr__(self, "radii", MappingProxyType(radii))

    @classmethod
    def from_field(cls, df: SquaredDistanceField, points: Iterable) -> "Skeleton":
        return cls(df.width, df.height, {p: df[p] for p in points})

    @cached_property
    def points(self) -> frozenset:
        return frozenset(self.radii)

    @cached_property
    def frame(self) -> CanonicalFrame:
        """Canonical tie-breaking frame of this radius-labelled point set."""
        pts = list(self.radii)
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        return CanonicalFrame.from_points(xs, ys, [self.radii[p] for p in pts])

    def sorted_points(self) -> list:
        return sorted(self.radii, key=row_major)

    def subset(self, points: Iterable) -> "Skeleton":
        return Skeleton(self.width, self.height, {p: self.radii[p] for p in points})

    def __len__(self):
        return len(self.radii)

    def __contains__(self, p):
        return p in self.radii

    def __iter__(self):
        return iter(self.sorted_points())

    def __eq__(self, other):
        if not isinstance(other, Skeleton):
            return NotImplemented
        return (self.width, self.height) == (other.width, other.height) and dict(self.radii) == dict(other.radii)

    def __hash__(self):
        return hash((self.width, self.height, frozenset(self.radii.items())))

    def __repr__(self):
        return f"Skeleton({self.width}x{self.height}, {len(self.radii)} points)"


@dataclass(frozen=True)
class Arc:
    """Ordered skeleton branch: consecutive points are 8-neighbours, the
    first and last are end or branching points."""

    points: tuple

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def point_set(self) -> frozenset:
        return frozenset(self.points)


# ---------------------------------------------------------------------------
# Local predicates
# ---------------------------------------------------------------------------


def neighbor_mask(points, p) -> int:
    x, y = p
    m = 0
    for k, (dx, dy) in enumerate(NEIGHBOR_OFFSETS):
        if (x + dx, y + dy) in points:
            m |= 1 << k
    return m


def _masks(points: Iterable) -> tuple[list, np.ndarray]:
    """Neighbour masks for every point of a set, vectorised."""
    pts = list(points)
    if not pts:
        return pts, np.zeros(0, dtype=np.uint8)
    xs = np.fromiter((p[0] for p in pts), dtype=np.int64, count=len(pts))
    ys = np.fromiter((p[1] for p in pts), dtype=np.int64, count=len(pts))
    x0, y0 = xs.min() - 1, ys.min() - 1
    grid = np.zeros((ys.max() - y0 + 2, xs.max() - x0 + 2), dtype=np.uint8)
    gx, gy = xs - x0, ys - y0
    grid[gy, gx] = 1
    masks = np.zeros(len(pts), dtype=np.uint8)
    for k, (dx, dy) in enumerate(NEIGHBOR_OFFSETS):
        masks |= grid[gy + dy, gx + dx] << k
    return pts, masks


def classify_point(skel, p) -> PointClass:
    points = skel.points if isinstance(skel, Skeleton) else skel
    if p not in points:
        raise DomainError(f"{tuple(p)} is not a skeleton point")
    return _class_of_mask(neighbor_mask(points, p))


def classify_all(points: Iterable) -> dict:
    if isinstance(points, Skeleton):
        points = points.points
    pts, masks = _masks(points)
    return {p: _class_of_mask(int(m)) for p, m in zip(pts, masks)}


_SIGNIFICANT = np.frombuffer(bytes(e or b for e, b in zip(ENDPOINT_LUT, BRANCHING_LUT)), dtype=np.uint8)


def count_significant(points: Iterable) -> int:
    """Number of end plus branching points."""
    if isinstance(points, Skeleton):
        points = points.points
    _, masks = _masks(points)
    return int(_SIGNIFICANT[masks].sum())


def is_removal_homotopic(points, p) -> bool:
    """Whether deleting ``p`` keeps the local topology (8/4 simple point)."""
    if isinstance(points, Skeleton):
        points = points.points
    if p not in points:
        raise DomainError(f"{tuple(p)} is not in the point set")
    return bool(SIMPLE_LUT[neighbor_mask(points, p)])


# ---------------------------------------------------------------------------
# Maximal disks
# ---------------------------------------------------------------------------


CRITERIA = ("discrete", "metric")


def _metric_contains(d2p, d2q, dist2):
    """Exact test of ``dist + sqrt(d2p) <= sqrt(d2q)`` on squared integers."""
    delta = d2q - d2p - dist2
    return (delta >= 0) & (delta * delta >= 4 * d2p * dist2)


@lru_cache(maxsize=None)
def _disk_rim(d2: int) -> tuple[np.ndarray, np.ndarray]:
    """Leftmost and rightmost offset of every row of the strict disk.

    The farthest disk pixel from any external point is one of these.
    """
    r = isqrt(d2 - 1)
    dy = np.arange(-r, r + 1, dtype=np.int64)
    half = np.array([isqrt(d2 - 1 - int(v) * int(v)) for v in dy], dtype=np.int64)
    return np.concatenate([half, -half]), np.concatenate([dy, dy])


def _reach(d2p: int, vx, vy) -> np.ndarray:
    """Largest squared distance from ``q`` to a pixel of the disk at
    ``p = q + (vx, vy)``; the disk fits inside ``q``'s iff this is below ``d2q``."""
    rx, ry = _disk_rim(d2p)
    vx = np.asarray(vx, dtype=np.int64)
    vy = np.asarray(vy, dtype=np.int64)
    return ((rx[:, None] + vx[None, :]) ** 2 + (ry[:, None] + vy[None, :]) ** 2).max(axis=0)


def _check_criterion(criterion: str):
    if criterion not in CRITERIA:
        raise DomainError(f"unknown maximality criterion {criterion!r}, expected one of {CRITERIA}")


def detect_maximal_disk(df: SquaredDistanceField, p, criterion: str = "discrete") -> bool:
    """Whether the inscribed disk at ``p`` lies in no other inscribed disk.

    ``discrete`` compares the disks as pixel sets. ``metric`` compares the
    closed Euclidean disks of radius ``sqrt(d2)``: containment iff
    ``dist(p, q) + r(p) <= r(q)``, evaluated exactly on squared values.
    This is a plain scan of the Chebyshev window ``ceil(sqrt(max d2))``.
    """
    _check_criterion(criterion)
    x, y = p
    d2 = df.d2
    p2 = int(d2[y, x])
    if p2 < 1:
        raise DomainError(f"{tuple(p)} is a background pixel")
    dmax = int(d2.max())
    rad = isqrt(dmax)
    if rad * rad < dmax:
        rad += 1
    if criterion == "discrete":
        ox, oy = disk_offsets(p2)
        px, py = ox + x, oy + y
    h, w = d2.shape
    for qy in range(max(0, y - rad), min(h, y + rad + 1)):
        for qx in range(max(0, x - rad), min(w, x + rad + 1)):
            if (qx, qy) == (x, y):
                continue
            q2 = int(d2[qy, qx])
            if criterion == "metric":
                dist2 = (qx - x) ** 2 + (qy - y) ** 2
                delta = q2 - p2 - dist2
                if delta >= 0 and delta * delta >= 4 * p2 * dist2:
                    return False
            elif q2 > 0 and int(((px - qx) ** 2 + (py - qy) ** 2).max()) < q2:
                return False
    return True


def maximal_disk_mask(df: SquaredDistanceField, criterion: str = "discrete") -> np.ndarray:
    """Boolean mask of maximal-disk centres; agrees with
    :func:`detect_maximal_disk` on every object pixel."""
    _check_criterion(criterion)
    d2 = df.d2
    h, w = d2.shape
    obj = d2 > 0
    if not obj.any():
        return obj
    cand = obj.copy()

    # cheap rejection by nearby containers first
    pad = 2
    near = [(dx, dy) for dy in range(-pad, pad + 1) for dx in range(-pad, pad + 1) if dx or dy]
    padded = np.zeros((h + 2 * pad, w + 2 * pad), dtype=np.int64)
    padded[pad:pad + h, pad:pad + w] = d2
    if criterion == "discrete":
        values, inverse = np.unique(d2[obj], return_inverse=True)
        vx = np.array([-dx for dx, _ in near])
        vy = np.array([-dy for _, dy in near])
        table = np.stack([_reach(int(u), vx, vy) for u in values])
        reach = np.zeros((h, w, len(near)), dtype=np.int64)
        reach[obj] = table[inverse.reshape(-1)]
    for j, (dx, dy) in enumerate(near):
        q2 = padded[pad + dy:pad + dy + h, pad + dx:pad + dx + w]
        if criterion == "metric":
            cand &= ~_metric_contains(d2, q2, dx * dx + dy * dy)
        else:
            cand &= ~(reach[:, :, j] < q2)

    # Any container satisfies (|v|_inf + isqrt(d2p - 1))^2 < d2q <= max d2.
    dmax = int(d2.max())
    rmax = isqrt(dmax) + 1
    gy, gx = np.mgrid[-rmax:rmax + 1, -rmax:rmax + 1]
    gx = gx.astype(np.int64)
    gy = gy.astype(np.int64)
    for y, x in zip(*np.nonzero(cand)):
        p2 = int(d2[y, x])
        rho = rmax - isqrt(p2 - 1)
        if rho <= pad:
            continue
        y0, y1 = max(0, y - rho), min(h, y + rho + 1)
        x0, x1 = max(0, x - rho), min(w, x + rho + 1)
        win = d2[y0:y1, x0:x1]
        sy = slice(rmax + y0 - y, rmax + y1 - y)
        sx = slice(rmax + x0 - x, rmax + x1 - x)
        ox, oy = gx[sy, sx], gy[sy, sx]
        if criterion == "metric":
            hit = _metric_contains(p2, win, ox * ox + oy * oy)
        else:
            sel = win > p2
            hit = np.zeros_like(sel)
            if sel.any():
                # q = p + o, so p = q - o
                hit[sel] = _reach(p2, -ox[sel], -oy[sel]) < win[sel]
        hit[y - y0, x - x0] = False
        if hit.any():
            cand[y, x] = False
    return cand


# ---------------------------------------------------------------------------
# Thinning
# ---------------------------------------------------------------------------


def skeletonize(
    img: BinaryImage,
    df: Optional[SquaredDistanceField] = None,
    frame: Optional[CanonicalFrame] = None,
    criterion: str = "discrete",
) -> Skeleton:
    """Homotopic maximal-disk thinning.

    Pixels are visited by increasing squared distance, ties in canonical
    row-major order (``frame``, by default derived from the object). A pixel
    is deleted when it is not a maximal-disk centre, is a simple point and
    is not an endpoint of the current set; passes repeat until nothing
    changes. A final sweep then breaks any remaining 2x2 blocks by deleting
    simple non-endpoint pixels, maximal centres included.
    """
    _check_criterion(criterion)
    if df is None:
        df = compute_edt(img)
    if (df.width, df.height) != (img.width, img.height):
        raise DomainError(
            f"distance field {df.width}x{df.height} does not match image {img.width}x{img.height}"
        )
    obj = img.array
    h, w = obj.shape
    ys, xs = np.nonzero(obj)
    if xs.size == 0:
        return Skeleton(w, h, {})
    if frame is None:
        frame = CanonicalFrame.from_points(xs, ys)
    d2v = df.d2[ys, xs]
    order = np.lexsort((frame.key(xs, ys), d2v))
    stride = w + 2
    flat_np = ((ys + 1) * stride + xs + 1)[order]
    maximal = maximal_disk_mask(df, criterion)[ys, xs][order]

    cur = np.zeros((h + 2) * stride, dtype=np.uint8)
    cur[flat_np] = 1
    cur = bytearray(cur.tobytes())
    flat = flat_np.tolist()
    deltas = [dy * stride + dx for dx, dy in NEIGHBOR_OFFSETS]
    a, b, c, d, e, f, g, hh = deltas
    deletable = _DELETABLE_LUT

    cand = [i for i, keep in zip(flat, maximal.tolist()) if not keep]
    dirty = bytearray(len(cur))
    for i in cand:
        dirty[i] = 1
    while cand:
        removed = False
        for i in cand:
            if not dirty[i] or not cur[i]:
                continue
            dirty[i] = 0
            m = (cur[i + a] | cur[i + b] << 1 | cur[i + c] << 2 | cur[i + d] << 3
                 | cur[i + e] << 4 | cur[i + f] << 5 | cur[i + g] << 6 | cur[i + hh] << 7)
            if deletable[m]:
                cur[i] = 0
                removed = True
                for dd in deltas:
                    dirty[i + dd] = 1
        if not removed:
            break
        cand = [i for i in cand if cur[i]]

    block = BLOCK_LUT
    while True:
        removed = False
        for i in flat:
            if not cur[i]:
                continue
            m = (cur[i + a] | cur[i + b] << 1 | cur[i + c] << 2 | cur[i + d] << 3
                 | cur[i + e] << 4 | cur[i + f] << 5 | cur[i + g] << 6 | cur[i + hh] << 7)
            if block[m] and deletable[m]:
                cur[i] = 0
                removed = True
        if not removed:
            break

    _repair_blocks(cur, obj, maximal_grid(maximal, flat, len(cur)), stride, frame)

    kept = np.frombuffer(bytes(cur), dtype=np.uint8).reshape(h + 2, stride)[1:-1, 1:-1]
    sy, sx = np.nonzero(kept)
    radii = {Point(int(x), int(y)): int(df.d2[y, x]) for x, y in zip(sx, sy)}
    return Skeleton(w, h, radii)


def maximal_grid(maximal: np.ndarray, flat: list, size: int) -> bytearray:
    out = bytearray(size)
    for i, keep in zip(flat, maximal.tolist()):
        if keep:
            out[i] = 1
    return out


def _repair_blocks(cur: bytearray, obj: np.ndarray, maximal: bytearray, stride: int, frame: CanonicalFrame):
    """Break 2x2 blocks that no single deletion can break.

    Such a block is the core of two crossing diagonal ridges. It is
    rerouted by adding an object pixel ``q`` beside a block pixel ``p`` and
    then deleting ``p``; each half is a simple-point change, so topology is
    kept. Non-maximal ``p`` are tried first, ties in canonical order; a swap
    is rejected if ``q`` would sit in a new block. Every accepted swap
    removes a block and creates none, so this terminates.
    """
    h = obj.shape[0]
    inside = bytearray(np.pad(obj, 1).astype(np.uint8).tobytes())
    deltas = [dy * stride + dx for dx, dy in NEIGHBOR_OFFSETS]
    corners = (0, 1, stride, stride + 1)

    def mask(i):
        m = 0
        for k, dd in enumerate(deltas):
            m |= cur[i + dd] << k
        return m

    def key(i):
        return frame.point_key((i % stride - 1, i // stride - 1))

    def in_block(i):
        return any(all(cur[i - c + e] for e in corners) for c in corners)

    def blocks():
        found = set()
        arr = np.frombuffer(bytes(cur), dtype=np.uint8).reshape(h + 2, stride)
        tl = arr[:-1, :-1] & arr[:-1, 1:] & arr[1:, :-1] & arr[1:, 1:]
        for y, x in zip(*np.nonzero(tl)):
            i = int(y) * stride + int(x)
            found.add(tuple(sorted((i + c for c in corners), key=key)))
        return sorted(found, key=lambda b: key(b[0]))

    stuck: set = set()
    while True:
        todo = [b for b in blocks() if b not in stuck]
        if not todo:
            return
        block = todo[0]
        done = False
        for p in sorted(block, key=lambda i: (maximal[i], key(i))):
            for q in sorted((p + dd for dd in deltas), key=key):
                if cur[q] or not inside[q] or not SIMPLE_LUT[mask(q)]:
                    continue
                cur[q] = 1
                if _DELETABLE_LUT[mask(p)]:
                    cur[p] = 0
                    if not in_block(q):
                        done = True
                        break
                    cur[p] = 1
                cur[q] = 0
            if done:
                break
        if not done:
            stuck.add(block)


# ---------------------------------------------------------------------------
# Arcs
# ---------------------------------------------------------------------------


def _neighbors(p, points):
    x, y = p
    return [(x + dx, y + dy) for dx, dy in NEIGHBOR_OFFSETS if (x + dx, y + dy) in points]


def decompose_arcs(skel, frame: Optional[CanonicalFrame] = None) -> list[Arc]:
    """Split a skeleton into branches between end and branching points.

    Every simple point lands in exactly one arc. Components made only of
    simple points (closed loops) produce no arc. Adjacent end/branching
    points form two-point arcs and an isolated endpoint is an arc by itself.
    """
    if isinstance(skel, Skeleton):
        if frame is None:
            frame = skel.frame
        points = skel.points
    else:
        points = frozenset(skel)
    if frame is None:
        frame = CanonicalFrame.from_points([p[0] for p in points], [p[1] for p in points])
    if not points:
        return []
    key = frame.point_key
    classes = classify_all(points)
    terminals = {p for p, c in classes.items() if c is not PointClass.SIMPLE}
    simple = points - terminals

    arcs: list[Arc] = []
    seen: set = set()
    for start in sorted(simple, key=key):
        if start in seen:
            continue
        comp, queue = {start}, deque([start])
        seen.add(start)
        while queue:
            q = queue.popleft()
            for n in _neighbors(q, simple):
                if n not in seen:
                    seen.add(n)
                    comp.add(n)
                    queue.append(n)
        ends = sorted({n for q in comp for n in _neighbors(q, terminals)}, key=key)
        if not ends:
            continue
        arcs.append(Arc(tuple(_walk(ends, comp, key))))

    for t in sorted(terminals, key=key):
        nbrs = _neighbors(t, points)
        if not nbrs:
            arcs.append(Arc((t,)))
        for n in nbrs:
            if n in terminals and key(t) < key(n):
                arcs.append(Arc((t, n)))
    arcs.sort(key=lambda arc: (key(arc.points[0]), len(arc), [key(q) for q in arc.points]))
    return arcs


def _walk(ends: list, comp: set, key) -> list:
    start = ends[0]
    path = [start]
    left = set(comp)
    cur = start
    while True:
        nxt = [n for n in _neighbors(cur, left)]
        if not nxt:
            break
        # prefer the neighbour with fewest onward options: follows the chain
        cur = min(nxt, key=lambda n: (len(_neighbors(n, left)), key(n)))
        left.discard(cur)
        path.append(cur)
    if left:
        path.extend(sorted(left, key=key))
    path.extend(ends[1:])
    return path


# ---------------------------------------------------------------------------
# SKEL2 text format
# ---------------------------------------------------------------------------


def dump_skeleton(skel: Skeleton) -> str:
    lines = ["SKEL2", f"{skel.width} {skel.height}", str(len(skel))]
    lines += [f"{p.x} {p.y} {skel.radii[p]}" for p in skel.sorted_points()]
    return "\n".join(lines) + "\n"


def parse_skeleton(text: str) -> Skeleton:
    data = text.encode() if isinstance(text, str) else bytes(text)
    lines = data.decode("ascii").split("\n")
    offsets = []
    pos = 0
    for line in lines:
        offsets.append(pos)
        pos += len(line) + 1
    if not lines or lines[0].strip() != "SKEL2":
        raise ParseError("missing SKEL2 magic", 0)
    try:
        width, height = (int(v) for v in lines[1].split())
        count = int(lines[2])
    except (IndexError, ValueError):
        raise ParseError("malformed SKEL2 header", offsets[min(1, len(offsets) - 1)]) from None
    if width <= 0 or height <= 0 or count < 0:
        raise ParseError("SKEL2 dimensions must be positive", offsets[1])
    radii = {}
    for k in range(count):
        idx = 3 + k
        try:
            x, y, r = (int(v) for v in lines[idx].split())
        except (IndexError, ValueError):
            raise ParseError(f"malformed SKEL2 point line {k + 1}", offsets[min(idx, len(offsets) - 1)]) from None
        if not (0 <= x < width and 0 <= y < height) or r < 1:
            raise ParseError(f"SKEL2 point {(x, y, r)} out of range", offsets[idx])
        radii[Point(x, y)] = r
    return Skeleton(width, height, radii)
