"""Sparsification and densification scale-spaces over skeletons.

A path is an ordered partition ``P_1..P_m`` of a ground set. Sparsifying
removes the steps one by one from the full skeleton; densifying adds them
to the empty set. The extended variant partitions the whole object, so
its states are over-complete skeletons.

Ties are always broken by the canonical frame of the input (see
:class:`~skelscale.pixelgrid.CanonicalFrame`), which keeps every strategy
except the random one equivariant under grid symmetries.
"""
from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from math import isqrt
from typing import Iterator, Optional

import numpy as np
from scipy import ndimage

from .distfield import SquaredDistanceField, compute_edt
from .errors import DomainError, ParseError, SkelscaleError
from .medialaxis import (
    NEIGHBOR_OFFSETS,
    PointClass,
    Skeleton,
    _SIGNIFICANT,
    classify_all,
    decompose_arcs,
    neighbor_mask,
    skeletonize,
)
from .pixelgrid import BinaryImage, CanonicalFrame, Point, row_major
from .reconstruct import CoverageMap, build_coverage, disk_indices, set_impact

__all__ = [
    "SPARSIFY",
    "DENSIFY",
    "ScaleSpacePath",
    "PathReport",
    "ScaleState",
    "SplitMix64",
    "validate_path",
    "evolve",
    "advance",
    "iter_states",
    "object_skeleton",
    "random_path",
    "branch_pruning_path",
    "compression_path",
    "densify_compression_order",
    "stiffness_path",
    "dump_path",
    "parse_path",
]

SPARSIFY = "sparsify"
DENSIFY = "densify"
_DIRECTIONS = (SPARSIFY, DENSIFY)

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ScaleSpacePath:
    """Ordered steps ``P_1..P_m`` meant to partition ``ground``."""

    steps: tuple
    ground: frozenset
    direction: str = SPARSIFY

    def __post_init__(self):
        if self.direction not in _DIRECTIONS:
            raise DomainError(f"direction must be one of {_DIRECTIONS}, got {self.direction!r}")
        steps = tuple(frozenset(Point(int(x), int(y)) for x, y in s) for s in self.steps)
        ground = frozenset(Point(int(x), int(y)) for x, y in self.ground)
        object.__setattr__(self, "steps", steps)
        object.__setattr__(self, "ground", ground)

    @property
    def m(self) -> int:
        return len(self.steps)

    def __len__(self):
        return len(self.steps)


@dataclass(frozen=True)
class PathReport:
    """Outcome of :func:`validate_path`; ``step`` is 1-based, ``None`` when
    the problem is not tied to one step."""

    ok: bool
    step: Optional[int] = None
    reason: str = ""

    def __bool__(self):
        return self.ok


def validate_path(path: ScaleSpacePath) -> PathReport:
    seen: set = set()
    for k, step in enumerate(path.steps, start=1):
        if not step:
            return PathReport(False, k, "empty step")
        stray = step - path.ground
        if stray:
            p = min(stray, key=row_major)
            return PathReport(False, k, f"point {tuple(p)} is not in the ground set")
        if not seen.isdisjoint(step):
            p = min(seen & step, key=row_major)
            return PathReport(False, k, f"point {tuple(p)} already appeared in an earlier step")
        seen |= step
    if seen != path.ground:
        missing = path.ground - seen
        p = min(missing, key=row_major)
        return PathReport(False, None, f"steps miss {len(missing)} ground point(s), e.g. {tuple(p)}")
    if path.m > len(path.ground):
        return PathReport(False, None, "more steps than ground points")
    return PathReport(True)


@dataclass(frozen=True, eq=False)
class ScaleState:
    """Level ``level`` of a scale-space: the point set and its reconstruction."""

    level: int
    sigma: Skeleton

    @cached_property
    def image(self) -> BinaryImage:
        from .reconstruct import reconstruct

        return reconstruct(self.sigma)

    @property
    def points(self) -> frozenset:
        return self.sigma.points


def _check_ground(path: ScaleSpacePath, skel0: Skeleton):
    if path.ground != skel0.points:
        raise DomainError("path ground set differs from the skeleton's points")


def _check_level(path: ScaleSpacePath, level: int):
    if not 0 <= level <= path.m:
        raise DomainError(f"level {level} outside [0, {path.m}]")


def evolve(path: ScaleSpacePath, skel0: Skeleton, level: int) -> ScaleState:
    """State at ``level``. ``skel0`` supplies the ground points and radii."""
    _check_ground(path, skel0)
    _check_level(path, level)
    touched = frozenset().union(*path.steps[:level])
    if path.direction == SPARSIFY:
        pts = skel0.points - touched
    else:
        pts = touched
    return ScaleState(level, skel0.subset(pts))


def advance(state: ScaleState, path: ScaleSpacePath, skel0: Skeleton, k: int) -> ScaleState:
    """Apply ``k`` further steps to ``state``."""
    _check_ground(path, skel0)
    target = state.level + k
    if k < 0:
        raise DomainError("cannot advance by a negative number of steps")
    _check_level(path, target)
    pts = set(state.points)
    for step in path.steps[state.level:target]:
        if path.direction == SPARSIFY:
            pts -= step
        else:
            pts |= step
    return ScaleState(target, skel0.subset(pts))


def iter_states(path: ScaleSpacePath, skel0: Skeleton) -> Iterator[tuple[int, frozenset, CoverageMap]]:
    """Walk all levels with an incrementally maintained coverage map.

    Yields ``(level, points, coverage)``; the coverage map is live and is
    mutated after the consumer resumes the generator.
    """
    _check_ground(path, skel0)
    w, h = skel0.width, skel0.height
    if path.direction == SPARSIFY:
        cov = build_coverage(skel0)
        pts = set(skel0.points)
    else:
        cov = CoverageMap.empty(w, h)
        pts = set()
    yield 0, frozenset(pts), cov
    for level, step in enumerate(path.steps, start=1):
        for p in step:
            d2 = skel0.radii[p]
            idx = disk_indices(p, d2, w, h)
            if path.direction == SPARSIFY:
                del cov.active[p]
                cov.count[idx] -= 1
                cov.total_covered -= int(np.count_nonzero(cov.count[idx] == 0))
                pts.discard(p)
            else:
                cov.total_covered += int(np.count_nonzero(cov.count[idx] == 0))
                cov.count[idx] += 1
                cov.active[p] = d2
                pts.add(p)
        yield level, frozenset(pts), cov


def object_skeleton(img: BinaryImage, df: Optional[SquaredDistanceField] = None) -> Skeleton:
    """Every object pixel with its squared radius: the ground of extended paths."""
    if df is None:
        df = compute_edt(img)
    ys, xs = np.nonzero(img.array)
    return Skeleton(img.width, img.height, {Point(int(x), int(y)): int(df.d2[y, x]) for x, y in zip(xs, ys)})


def _require_points(skel: Skeleton):
    if len(skel) == 0:
        raise DomainError("skeleton is empty")


# ---------------------------------------------------------------------------
# Random baseline
# ---------------------------------------------------------------------------


class SplitMix64:
    """64-bit splitmix generator; identical seeds give identical streams."""

    def __init__(self, seed: int):
        self.s = int(seed) & _MASK64

    def next(self) -> int:
        self.s = (self.s + 0x9E3779B97F4A7C15) & _MASK64
        z = self.s
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        """Uniform integer in ``[0, n)`` by rejection sampling."""
        if n < 1:
            raise DomainError("bound must be positive")
        limit = (1 << 64) - (1 << 64) % n
        while True:
            v = self.next()
            if v < limit:
                return v % n


def random_path(skel: Skeleton, seed: int) -> ScaleSpacePath:
    """Remove one uniformly chosen remaining point per step."""
    _require_points(skel)
    rng = SplitMix64(seed)
    remaining = skel.sorted_points()
    steps = []
    while remaining:
        steps.append(frozenset([remaining.pop(rng.below(len(remaining)))]))
    return ScaleSpacePath(tuple(steps), skel.points, SPARSIFY)


# ---------------------------------------------------------------------------
# Branch pruning
# ---------------------------------------------------------------------------


def _nbrs(p, points) -> list:
    x, y = p
    return [(x + dx, y + dy) for dx, dy in NEIGHBOR_OFFSETS if (x + dx, y + dy) in points]


def _significant(points, p) -> int:
    return int(_SIGNIFICANT[neighbor_mask(points, p)])


def _component(points, start) -> set:
    comp, queue = {start}, deque([start])
    while queue:
        for n in _nbrs(queue.popleft(), points):
            if n not in comp:
                comp.add(n)
                queue.append(n)
    return comp


def _keeps_structure(current: set, step: frozenset, complexity: int) -> bool:
    """Removing ``step`` neither raises complexity nor splits a component
    into several surviving pieces."""
    remaining = current - step
    touched = {n for p in step for n in _nbrs(p, remaining)}
    delta = -sum(_significant(current, p) for p in step)
    delta += sum(_significant(remaining, n) - _significant(current, n) for n in touched)
    if delta > 0:
        return False
    if len(touched) <= 1:
        return True
    # every piece left behind must still hang together
    groups = 0
    left = set(touched)
    owners: set = set()
    while left:
        start = left.pop()
        comp = _component(remaining, start)
        left -= comp
        groups += 1
        owners.add(min(_component(current, start), key=row_major))
    return groups <= len(owners)


def branch_pruning_path(skel: Skeleton) -> ScaleSpacePath:
    """Remove whole branches, smallest reconstruction impact first.

    Candidates are arcs holding an endpoint, or the whole remaining set when
    there are none. Ties go to the shorter arc, then to the arc whose points,
    sorted canonically, come first lexicographically. Branching points of the chosen arc stay.
    A candidate whose removal would split a component or raise the number
    of end and branching points is skipped; when every candidate is skipped
    the whole component of the best one is removed instead.
    """
    _require_points(skel)
    frame = skel.frame
    key = frame.point_key
    cov = build_coverage(skel)
    current = set(skel.points)
    steps = []
    cache: dict = {}
    while current:
        classes = classify_all(current)
        ends = {p for p, c in classes.items() if c is PointClass.ENDPOINT}
        branching = {p for p, c in classes.items() if c is PointClass.BRANCHING}
        complexity = len(ends) + len(branching)
        cands = [a.points for a in decompose_arcs(current, frame) if not ends.isdisjoint(a.points)]
        if not cands:
            cands = [tuple(sorted(current, key=key))]
        scored = []
        for arc in cands:
            hit = cache.get(arc)
            if hit is None:
                hit = cache[arc] = (set_impact(cov, arc), _disk_box(arc, skel))
            scored.append((hit[0], len(arc), sorted(key(p) for p in arc), arc))
        scored.sort(key=lambda t: t[:3])
        chosen = None
        for _, _, _, arc in scored:
            step = frozenset(p for p in arc if p not in branching)
            if step and _keeps_structure(current, step, complexity):
                chosen = step
                break
        if chosen is None:
            best = scored[0][3]
            chosen = frozenset(_component(current, min(best, key=key)))
        steps.append(chosen)
        changed = np.zeros(cov.count.shape, dtype=bool)
        for p in chosen:
            idx = disk_indices(p, cov.active.pop(p), cov.width, cov.height)
            cov.count[idx] -= 1
            changed[idx] = True
        cov.total_covered = int(np.count_nonzero(cov.count))
        current -= chosen
        # an arc's impact depends only on counts under its own disks
        changed = changed.reshape(cov.height, cov.width)
        cache = {
            arc: hit
            for arc, hit in cache.items()
            if current.issuperset(arc) and not changed[hit[1]].any()
        }
    return ScaleSpacePath(tuple(steps), skel.points, SPARSIFY)


def _disk_box(arc, skel: Skeleton) -> tuple:
    """Slices of the bounding box of all disks of ``arc``, clipped to the canvas."""
    x0 = y0 = None
    for p in arc:
        rad = isqrt(skel.radii[p] - 1)
        lo_x, lo_y, hi_x, hi_y = p[0] - rad, p[1] - rad, p[0] + rad + 1, p[1] + rad + 1
        if x0 is None:
            x0, y0, x1, y1 = lo_x, lo_y, hi_x, hi_y
        else:
            x0, y0, x1, y1 = min(x0, lo_x), min(y0, lo_y), max(x1, hi_x), max(y1, hi_y)
    return slice(max(y0, 0), max(y1, 0)), slice(max(x0, 0), max(x1, 0))


# ---------------------------------------------------------------------------
# Compression
# ---------------------------------------------------------------------------


def _disk_table(skel: Skeleton, order: list) -> list:
    return [disk_indices(p, skel.radii[p], skel.width, skel.height) for p in order]


def compression_path(skel: Skeleton, r: int = 1) -> ScaleSpacePath:
    """Remove the ``r`` points of smallest unique impact per step.

    Impacts are frozen at the start of each step. The sole owner of a pixel
    covered once is recovered from a running sum of covering point ids, so
    each removal refreshes only the points that just became sole owners.
    """
    if int(r) != r or r < 1:
        raise DomainError(f"points per step must be an integer >= 1, got {r!r}")
    r = int(r)
    _require_points(skel)
    key = skel.frame.point_key
    order = sorted(skel.points, key=key)  # id order is the tie-break order
    disks = _disk_table(skel, order)
    n = len(order)
    size = skel.width * skel.height
    all_idx = np.concatenate(disks)
    ids = np.repeat(np.arange(n, dtype=np.int64), [d.size for d in disks])
    count = np.bincount(all_idx, minlength=size).astype(np.int64)
    owner_sum = np.zeros(size, dtype=np.int64)
    np.add.at(owner_sum, all_idx, ids)
    impact = np.bincount(owner_sum[count == 1], minlength=n).astype(np.int64)
    alive = np.ones(n, dtype=bool)
    heap = [(int(impact[i]), i) for i in range(n)]
    heapq.heapify(heap)

    steps = []
    left = n
    while left:
        s = min(r, left)
        chosen = []
        while len(chosen) < s:
            v, i = heapq.heappop(heap)
            if alive[i] and v == impact[i]:
                alive[i] = False
                chosen.append(i)
        for i in chosen:
            idx = disks[i]
            count[idx] -= 1
            owner_sum[idx] -= i
            owners = owner_sum[idx[count[idx] == 1]]
            owners = owners[alive[owners]]
            if owners.size:
                np.add.at(impact, owners, 1)
                for j in np.unique(owners).tolist():
                    heapq.heappush(heap, (int(impact[j]), j))
        left -= s
        steps.append(frozenset(order[i] for i in chosen))
    return ScaleSpacePath(tuple(steps), skel.points, SPARSIFY)


def densify_compression_order(skel: Skeleton) -> ScaleSpacePath:
    """Add, one per step, the point whose disk covers the most new pixels.

    Lazy greedy: gains can only shrink as coverage grows, so a popped entry
    whose refreshed gain is unchanged is the true maximum.
    """
    _require_points(skel)
    key = skel.frame.point_key
    order = sorted(skel.points, key=key)
    disks = _disk_table(skel, order)
    covered = np.zeros(skel.width * skel.height, dtype=bool)
    heap = [(-int(d.size), i) for i, d in enumerate(disks)]
    heapq.heapify(heap)
    steps = []
    while heap:
        neg, i = heapq.heappop(heap)
        gain = int(np.count_nonzero(~covered[disks[i]]))
        if gain != -neg:
            heapq.heappush(heap, (-gain, i))
            continue
        covered[disks[i]] = True
        steps.append(frozenset([order[i]]))
    return ScaleSpacePath(tuple(steps), skel.points, DENSIFY)


# ---------------------------------------------------------------------------
# Stiffness enhancement
# ---------------------------------------------------------------------------

_RING = np.ones((3, 3), dtype=bool)


def _mask_points(mask: np.ndarray) -> frozenset:
    ys, xs = np.nonzero(mask)
    return frozenset(Point(int(x), int(y)) for x, y in zip(xs, ys))


def _skeleton_mask(obj: np.ndarray, frame: CanonicalFrame) -> np.ndarray:
    out = np.zeros_like(obj)
    if obj.any():
        for p in skeletonize(BinaryImage(obj), frame=frame).points:
            out[p.y, p.x] = True
    return out


def stiffness_path(img: BinaryImage, max_iterations: Optional[int] = None) -> ScaleSpacePath:
    """Extended densification that thickens the skeleton until it fills the object.

    Starts from the skeleton of the object. Each iteration dilates the
    current set by one pixel (within the object), removes the result from
    the auxiliary shape, and adds the skeleton of what is left of it.
    """
    obj = img.array
    total = int(obj.sum())
    if total == 0:
        raise DomainError("object is empty")
    ys, xs = np.nonzero(obj)
    frame = CanonicalFrame.from_points(xs, ys)
    gamma = _skeleton_mask(obj, frame)
    aux = obj & ~gamma
    steps = [_mask_points(gamma)]
    cap = total if max_iterations is None else int(max_iterations)
    size = int(gamma.sum())
    it = 0
    while size < total:
        it += 1
        if it > cap:
            raise SkelscaleError(f"stiffness path made no progress within {cap} iterations")
        grown = ndimage.binary_dilation(gamma, structure=_RING) & obj
        aux &= ~grown
        nxt = grown | _skeleton_mask(aux, frame)
        added = nxt & ~gamma
        if not added.any():
            raise SkelscaleError("stiffness iteration added no pixels")
        steps.append(_mask_points(added))
        gamma = nxt
        size = int(gamma.sum())
    return ScaleSpacePath(tuple(steps), _mask_points(obj), DENSIFY)


# ---------------------------------------------------------------------------
# PATH1 text format
# ---------------------------------------------------------------------------


def dump_path(path: ScaleSpacePath) -> str:
    lines = ["PATH1", f"{path.direction} {path.m}"]
    for k, step in enumerate(path.steps, start=1):
        coords = " ".join(f"{p.x} {p.y}" for p in sorted(step, key=row_major))
        lines.append(f"{k} : {coords}")
    return "\n".join(lines) + "\n"


def parse_path(text, ground: Optional[frozenset] = None) -> ScaleSpacePath:
    """Read a PATH1 document. ``ground`` defaults to the union of the steps."""
    data = text.encode() if isinstance(text, str) else bytes(text)
    lines = data.decode("ascii", errors="replace").split("\n")
    offsets = []
    pos = 0
    for line in lines:
        offsets.append(pos)
        pos += len(line.encode("ascii", errors="replace")) + 1
    if lines[0].strip() != "PATH1":
        raise ParseError("missing PATH1 magic", 0)
    head = lines[1].split() if len(lines) > 1 else []
    if len(head) != 2 or head[0] not in _DIRECTIONS or not head[1].isdigit():
        raise ParseError("malformed PATH1 header", offsets[min(1, len(offsets) - 1)])
    direction, m = head[0], int(head[1])
    steps = []
    for k in range(1, m + 1):
        if k + 1 >= len(lines):
            raise ParseError(f"PATH1 ends before step {k}", pos)
        line = lines[k + 1]
        label, sep, body = line.partition(":")
        try:
            idx = int(label)
            vals = [int(v) for v in body.split()]
        except ValueError:
            raise ParseError(f"malformed PATH1 step line {k}", offsets[k + 1]) from None
        if not sep or idx != k or len(vals) % 2:
            raise ParseError(f"malformed PATH1 step line {k}", offsets[k + 1])
        steps.append(frozenset(Point(vals[j], vals[j + 1]) for j in range(0, len(vals), 2)))
    if ground is None:
        ground = frozenset().union(*steps)
    return ScaleSpacePath(tuple(steps), ground, direction)
