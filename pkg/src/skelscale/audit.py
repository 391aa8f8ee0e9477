"""Invariant checks over one shape and one scale-space strategy."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .distfield import compute_edt
from .errors import DomainError
from .medialaxis import Skeleton, count_significant, skeletonize
from .metrics import diameter_squared, topology
from .pixelgrid import BinaryImage
from .reconstruct import build_coverage, reconstruct, remove_point, set_impact
from .scalespace import (
    SPARSIFY,
    ScaleSpacePath,
    advance,
    branch_pruning_path,
    compression_path,
    densify_compression_order,
    evolve,
    iter_states,
    object_skeleton,
    random_path,
    stiffness_path,
    validate_path,
)

__all__ = ["STRATEGIES", "Check", "PathRun", "build_path", "run_audit", "has_block"]

STRATEGIES = ("random", "prune", "compress", "densify-compress", "stiffen")


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""
    skipped: bool = False


@dataclass(frozen=True)
class PathRun:
    """A path together with the skeleton that supplies its points and radii,
    and the area errors are measured against."""

    strategy: str
    path: ScaleSpacePath
    ground: Skeleton
    reference_area: int


def build_path(img: BinaryImage, strategy: str, seed: int = 0, r: int = 1, skel: Optional[Skeleton] = None) -> PathRun:
    if strategy not in STRATEGIES:
        raise DomainError(f"unknown strategy {strategy!r}")
    if img.area == 0:
        raise DomainError("object is empty")
    if strategy == "stiffen":
        ground = object_skeleton(img)
        return PathRun(strategy, stiffness_path(img), ground, img.area)
    if skel is None:
        skel = skeletonize(img)
    if strategy == "random":
        path = random_path(skel, seed)
    elif strategy == "prune":
        path = branch_pruning_path(skel)
    elif strategy == "compress":
        path = compression_path(skel, r)
    else:
        path = densify_compression_order(skel)
    return PathRun(strategy, path, skel, reconstruct(skel).area)


def has_block(points) -> bool:
    pts = set(points)
    return any((x + 1, y) in pts and (x, y + 1) in pts and (x + 1, y + 1) in pts for x, y in pts)


def _guard(name: str, fn: Callable[[], Optional[str]]) -> Check:
    try:
        problem = fn()
    except Exception as exc:  # an invariant that crashes has failed
        return Check(name, False, f"{type(exc).__name__}: {exc}")
    if problem is None:
        return Check(name, True)
    if problem.startswith("skip:"):
        return Check(name, True, problem[5:].strip(), skipped=True)
    return Check(name, False, problem)


def run_audit(
    img: BinaryImage,
    strategy: str,
    seed: int = 0,
    r: int = 1,
    path: Optional[ScaleSpacePath] = None,
    exhaustive_limit: int = 400,
) -> list[Check]:
    """Evaluate every invariant that applies to ``strategy`` on ``img``.

    ``path`` overrides the generated path (e.g. one read from a file).
    Exhaustive oracles are skipped above ``exhaustive_limit`` skeleton points.
    """
    checks: list[Check] = []
    obj = img.array
    df = compute_edt(img)
    skel = skeletonize(img, df)

    def disks_inside():
        rec = reconstruct(object_skeleton(img, df))
        return None if rec == img else "some inscribed disk leaves the object"

    def skeleton_subset():
        return None if all(obj[p.y, p.x] for p in skel.points) else "skeleton point on background"

    def skeleton_thin():
        return "2x2 block in skeleton" if has_block(skel.points) else None

    def skeleton_topology():
        a = topology(BinaryImage.from_points(img.width, img.height, skel.points))
        b = topology(img)
        return None if a == b else f"skeleton topology {a} differs from object {b}"

    def coverage_subset():
        rec = reconstruct(skel).array
        return None if not (rec & ~obj).any() else "reconstruction leaves the object"

    checks += [
        _guard("disks_inside_object", disks_inside),
        _guard("skeleton_subset", skeleton_subset),
        _guard("skeleton_thin", skeleton_thin),
        _guard("skeleton_topology", skeleton_topology),
        _guard("reconstruction_subset", coverage_subset),
    ]

    if path is None:
        run = build_path(img, strategy, seed, r, skel)
    else:
        ground = object_skeleton(img, df) if strategy == "stiffen" else skel
        ref = img.area if strategy == "stiffen" else reconstruct(skel).area
        run = PathRun(strategy, path, ground, ref)
    p, ground = run.path, run.ground

    report = validate_path(p)
    checks.append(Check("path_partition", report.ok, "" if report.ok else f"step {report.step}: {report.reason}"))
    if not report.ok:
        return checks

    def causality():
        for level in sorted({0, p.m // 2, p.m}):
            k = level // 2
            direct = evolve(p, ground, level)
            stepped = advance(evolve(p, ground, k), p, ground, level - k)
            if direct.points != stepped.points:
                return f"evolve to level {level} depends on the route"
        return None

    checks.append(_guard("causality", causality))

    # walk every level once
    records = []
    for level, pts, cov in iter_states(p, ground):
        records.append((level, pts, cov.total_covered, cov.grid > 0))
    direction = p.direction

    def nesting():
        for (l0, a, *_), (l1, b, *_) in zip(records, records[1:]):
            ok = b < a if direction == SPARSIFY else a < b
            if not ok:
                return f"level {l1} is not strictly nested in level {l0}"
        return None

    def area_monotone():
        for (l0, _, a, _), (l1, _, b, _) in zip(records, records[1:]):
            if (b > a) if direction == SPARSIFY else (b < a):
                return f"area moves the wrong way from level {l0} to {l1}"
        return None

    def diameter_monotone():
        if direction != SPARSIFY:
            return "skip: only defined for sparsification"
        prev = None
        for level, _, _, mask in records:
            d = diameter_squared(BinaryImage(mask)) or 0
            if prev is not None and d > prev:
                return f"diameter grows at level {level}"
            prev = d
        return None

    def steady_state():
        last = records[-1]
        if direction == SPARSIFY:
            return None if not last[1] and last[2] == 0 else "final state is not empty"
        if last[1] != ground.points:
            return "final state is not the full ground set"
        if not np.array_equal(last[3], reconstruct(ground).array):
            return "final reconstruction differs from the ground reconstruction"
        return None

    def within_object():
        for level, _, _, mask in records:
            if (mask & ~obj).any():
                return f"reconstruction at level {level} leaves the object"
        return None

    checks += [
        _guard("nesting", nesting),
        _guard("area_monotone", area_monotone),
        _guard("diameter_monotone", diameter_monotone),
        _guard("steady_state", steady_state),
        _guard("reconstruction_within_object", within_object),
    ]

    if strategy == "prune":
        def complexity_lyapunov():
            prev = None
            for level, pts, _, _ in records:
                c = count_significant(pts)
                if prev is not None and c > prev:
                    return f"complexity rises at level {level}"
                prev = c
            return None

        def no_split():
            for (l0, a, *_), (l1, b, *_) in zip(records, records[1:]):
                after = _labels(b)
                comps: dict = {}
                for q, rep in _labels(a).items():
                    comps.setdefault(rep, []).append(q)
                for comp in comps.values():
                    pieces = {after[q] for q in comp if q in after}
                    if len(pieces) > 1:
                        return f"step {l1} splits a component into {len(pieces)} pieces"
            return None

        checks += [_guard("complexity_lyapunov", complexity_lyapunov), _guard("no_component_split", no_split)]

    if strategy == "compress":
        def minimal_impact():
            if r != 1:
                return "skip: exhaustive optimality applies to one point per step"
            if len(skel) > exhaustive_limit:
                return f"skip: skeleton has more than {exhaustive_limit} points"
            cov = build_coverage(skel)
            for level, step in enumerate(p.steps, start=1):
                impacts = {q: set_impact(cov, [q]) for q in cov.active}
                (q,) = step
                if impacts[q] != min(impacts.values()):
                    return f"step {level} removes impact {impacts[q]} while {min(impacts.values())} is available"
                remove_point(cov, skel, q)
            return None

        def minimality_lyapunov():
            prev = None
            for level, pts, area, _ in records:
                if area == 0:
                    break
                m = Fraction(len(pts), area)
                if prev is not None and m > prev:
                    return f"minimality rises at level {level}"
                prev = m
            return None

        checks += [_guard("minimal_impact", minimal_impact), _guard("minimality_lyapunov", minimality_lyapunov)]

    if strategy == "stiffen":
        def stiff_growth():
            if p.m > img.area:
                return "more iterations than object pixels"
            for level, pts, _, _ in records[1:]:
                if not all(obj[q.y, q.x] for q in pts):
                    return f"level {level} leaves the object"
            if records[-1][1] != img.points():
                return "final set is not the object"
            return None

        checks.append(_guard("stiffness_growth", stiff_growth))

    return checks


def _labels(points) -> dict:
    """Map each point to a representative of its 8-connected component."""
    label: dict = {}
    for start in sorted(points):
        if start in label:
            continue
        label[start] = start
        stack = [start]
        while stack:
            x, y = stack.pop()
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    q = (x + dx, y + dy)
                    if q in points and q not in label:
                        label[q] = start
                        stack.append(q)
    return label
