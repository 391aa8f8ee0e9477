"""Command-line interface.

Exit codes: 0 success, 1 unreadable or malformed input/output, 2 empty
object, 3 invalid strategy or parameter combination, 4 audit found a
violated invariant.
"""
from __future__ import annotations

import argparse
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from .audit import STRATEGIES, PathRun, build_path, run_audit
from .distfield import compute_edt, render_distance
from .errors import DomainError, ParseError
from .medialaxis import count_significant, dump_skeleton, skeletonize
from .metrics import NA, format_fraction, topology
from .pixelgrid import BinaryImage, load_pbm, render_overlay, save_pbm
from .reconstruct import reconstruct
from .scalespace import SplitMix64, dump_path, iter_states, object_skeleton, parse_path, validate_path

__all__ = ["main", "level_for_percent", "derive_seed", "fnv1a64", "write_atomic"]

EXIT_OK = 0
EXIT_IO = 1
EXIT_EMPTY = 2
EXIT_USAGE = 3
EXIT_AUDIT = 4

METRICS_HEADER = "level,pct,points,area,error,minimality,complexity,components,holes"
EVAL_HEADER = "strategy,pct,mean_error,mean_complexity,mean_minimality,n_shapes"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def write_atomic(path, data) -> None:
    """Write via a temporary sibling and rename, so readers never see a partial file."""
    path = Path(path)
    if isinstance(data, str):
        data = data.encode("ascii")
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h = ((h ^ b) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def derive_seed(base_seed: int, name: str) -> int:
    """Per-file seed: one splitmix64 output from ``base_seed XOR FNV-1a(name)``."""
    return SplitMix64(int(base_seed) ^ fnv1a64(name.encode("utf-8"))).next()


def level_for_percent(pct, m: int) -> int:
    """Nearest level to ``pct`` percent of ``m`` steps, halves rounded up."""
    pct = Fraction(pct)
    level = (pct * m / 100 + Fraction(1, 2)).__floor__()
    return max(0, min(m, int(level)))


def _parse_percent(text: str) -> Fraction:
    try:
        value = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise _UsageError(f"not a percentage: {text!r}") from None
    if not 0 <= value <= 100:
        raise _UsageError(f"percentage {text!r} outside [0, 100]")
    return value


def _format_pct(p: Fraction) -> str:
    return str(p.numerator) if p.denominator == 1 else format_fraction(p)


def _read_image(path) -> BinaryImage:
    with open(path, "rb") as fh:
        return load_pbm(fh.read())


def _check_strategy_args(strategy: str, seed: Optional[int], r: Optional[int]) -> None:
    if strategy not in STRATEGIES:
        raise _UsageError(f"unknown strategy {strategy!r}; choose from {', '.join(STRATEGIES)}")
    if seed is not None and strategy != "random":
        raise _UsageError("--seed applies only to the random strategy")
    if r is not None and strategy != "compress":
        raise _UsageError("--r applies only to the compress strategy")
    if r is not None and r < 1:
        raise _UsageError("--r must be at least 1")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_skeletonize(args) -> int:
    img = _read_image(args.input)
    if img.area == 0:
        print("error: object is empty", file=sys.stderr)
        return EXIT_EMPTY
    df = compute_edt(img)
    skel = skeletonize(img, df)
    write_atomic(args.output, dump_skeleton(skel))
    if args.overlay:
        write_atomic(args.overlay, render_overlay(img, skel))
    if args.distance:
        write_atomic(args.distance, render_distance(df))
    return EXIT_OK


def _run_from_file(img: BinaryImage, path_file) -> PathRun:
    with open(path_file, "rb") as fh:
        path = parse_path(fh.read())
    skel = skeletonize(img)
    if path.ground == skel.points:
        run = PathRun("file", path, skel, reconstruct(skel).area)
    elif path.ground == img.points():
        run = PathRun("file", path, object_skeleton(img), img.area)
    else:
        raise DomainError("path file covers neither this shape's skeleton nor its object")
    report = validate_path(path)
    if not report.ok:
        raise DomainError(f"path file is not a partition (step {report.step}: {report.reason})")
    return run


def cmd_evolve(args) -> int:
    if (args.path_file is None) == (args.strategy is None):
        raise _UsageError("give exactly one of --strategy and --path-file")
    if args.path_file is None:
        _check_strategy_args(args.strategy, args.seed, args.r)
    elif args.seed is not None or args.r is not None:
        raise _UsageError("--seed and --r do not apply to a path file")
    stops = [_parse_percent(t) for t in args.stops.split(",") if t.strip()]
    if not stops:
        raise _UsageError("--stops is empty")
    img = _read_image(args.input)
    if img.area == 0:
        print("error: object is empty", file=sys.stderr)
        return EXIT_EMPTY
    if args.path_file is None:
        run = build_path(img, args.strategy, args.seed or 0, args.r or 1)
    else:
        run = _run_from_file(img, args.path_file)
    path = run.path
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.save_path:
        write_atomic(args.save_path, dump_path(path))

    wanted: dict[int, list] = {}
    for p in stops:
        wanted.setdefault(level_for_percent(p, path.m), []).append(p)
    rows = {}
    ref = run.reference_area
    for level, pts, cov in iter_states(path, run.ground):
        if level not in wanted:
            continue
        image = cov.covered()
        sigma = run.ground.subset(pts)
        stem = f"level_{level:05d}"
        write_atomic(outdir / f"{stem}.pbm", save_pbm(image))
        write_atomic(outdir / f"{stem}.skel", dump_skeleton(sigma))
        comps, holes = topology(image)
        area = image.area
        mini = NA if area == 0 else format_fraction(Fraction(len(pts), area))
        for p in wanted[level]:
            rows[p] = (
                f"{level},{_format_pct(p)},{len(pts)},{area},{ref - area},{mini},"
                f"{count_significant(pts)},{comps},{holes}"
            )
    lines = [METRICS_HEADER] + [rows[p] for p in stops]
    write_atomic(outdir / "metrics.csv", "\n".join(lines) + "\n")
    return EXIT_OK


def _parse_levels(text: str, m: int) -> list[int]:
    if text == "all":
        return list(range(1, m + 1))
    levels = []
    for tok in text.split(","):
        try:
            level = int(tok)
        except ValueError:
            raise _UsageError(f"not a level: {tok!r}") from None
        if not 0 <= level <= m:
            raise _UsageError(f"level {level} outside [0, {m}]")
        levels.append(level)
    return levels


def cmd_stiffen(args) -> int:
    img = _read_image(args.input)
    if img.area == 0:
        print("error: object is empty", file=sys.stderr)
        return EXIT_EMPTY
    run = build_path(img, "stiffen")
    levels = set(_parse_levels(args.levels, run.path.m))
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for level, pts, _ in iter_states(run.path, run.ground):
        if level in levels:
            mask = BinaryImage.from_points(img.width, img.height, pts)
            write_atomic(outdir / f"gamma_{level:04d}.pbm", save_pbm(mask))
    return EXIT_OK


def _eval_shape(task):
    """Curves of one shape for every strategy: lists of (error, complexity,
    minimality) at each requested percentage."""
    name, data, strategies, pcts, base_seed, r = task
    img = load_pbm(data)
    if img.area == 0:
        return name, None
    skel = skeletonize(img)
    out = {}
    for strategy in strategies:
        seed = derive_seed(base_seed, name) if strategy == "random" else 0
        run = build_path(img, strategy, seed, r if strategy == "compress" else 1, skel)
        levels = {level_for_percent(p, run.path.m) for p in pcts}
        values = {}
        for level, pts, cov in iter_states(run.path, run.ground):
            if level in levels:
                area = cov.total_covered
                values[level] = (
                    run.reference_area - area,
                    count_significant(pts),
                    NA if area == 0 else Fraction(len(pts), area),
                )
        out[strategy] = [values[level_for_percent(p, run.path.m)] for p in pcts]
    return name, out


def _workers() -> int:
    env = os.environ.get("SKELSCALE_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            cap = max(1, int(env))
        except ValueError:
            raise _UsageError(f"SKELSCALE_THREADS must be an integer, got {env!r}") from None
    return cap


def cmd_eval(args) -> int:
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    if not strategies:
        raise _UsageError("--strategies is empty")
    for s in strategies:
        _check_strategy_args(s, None, None)
    if args.r is not None and args.r < 1:
        raise _UsageError("--r must be at least 1")
    n = args.samples_per_curve
    if n < 2:
        raise _UsageError("--samples-per-curve must be at least 2")
    pcts = [Fraction(100 * i, n - 1) for i in range(n)]

    folder = Path(args.dataset)
    tasks = []
    for f in sorted(folder.glob("*.pbm")) if folder.is_dir() else []:
        try:
            data = f.read_bytes()
            load_pbm(data)
        except (OSError, ParseError) as exc:
            print(f"warning: skipping {f.name}: {exc}", file=sys.stderr)
            continue
        tasks.append((f.name, data, strategies, pcts, args.seed, args.r or 1))
    if not tasks:
        print(f"error: no readable PBM shapes in {folder}", file=sys.stderr)
        return EXIT_IO

    workers = min(_workers(), len(tasks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_eval_shape, tasks))
    else:
        results = [_eval_shape(t) for t in tasks]
    results = sorted((r for r in results if r[1] is not None), key=lambda t: t[0])
    if not results:
        print("error: every shape is empty", file=sys.stderr)
        return EXIT_IO

    lines = [EVAL_HEADER]
    count = len(results)
    for strategy in strategies:
        for i, p in enumerate(pcts):
            samples = [res[strategy][i] for _, res in results]
            err = Fraction(sum(s[0] for s in samples), count)
            cpx = Fraction(sum(s[1] for s in samples), count)
            minis = [s[2] for s in samples if s[2] != NA]
            mini = format_fraction(sum(minis, Fraction(0)) / len(minis)) if minis else NA
            lines.append(
                f"{strategy},{_format_pct(p)},{format_fraction(err)},{format_fraction(cpx)},{mini},{count}"
            )
    write_atomic(args.output, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_audit(args) -> int:
    _check_strategy_args(args.strategy, args.seed, args.r)
    img = _read_image(args.input)
    if img.area == 0:
        print("error: object is empty", file=sys.stderr)
        return EXIT_EMPTY
    path = None
    if args.path_file is not None:
        with open(args.path_file, "rb") as fh:
            path = parse_path(fh.read())
    checks = run_audit(img, args.strategy, args.seed or 0, args.r or 1, path)
    width = max(len(c.name) for c in checks)
    failed = None
    for c in checks:
        status = "skip" if c.skipped else ("pass" if c.passed else "FAIL")
        line = f"{c.name:<{width}}  {status}"
        if c.detail:
            line += f"  {c.detail}"
        print(line)
        if not c.passed and failed is None:
            failed = c
    if failed is not None:
        print(f"first violated invariant: {failed.name}", file=sys.stderr)
        return EXIT_AUDIT
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="skelscale", description="Skeleton sparsification scale-spaces for binary shapes.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("skeletonize", help="compute the skeleton of a PBM shape")
    p.add_argument("input")
    p.add_argument("output", help="SKEL2 file to write")
    p.add_argument("--overlay", help="PPM with the skeleton drawn over the shape")
    p.add_argument("--distance", help="PGM rendering of the distance map")
    p.set_defaults(func=cmd_skeletonize)

    p = sub.add_parser("evolve", help="export states of a scale-space at percentage stops")
    p.add_argument("input")
    p.add_argument("outdir")
    p.add_argument("--strategy")
    p.add_argument("--seed", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--stops", default="0,25,50,75,100")
    p.add_argument("--path-file", help="read the path from a PATH1 file instead of computing it")
    p.add_argument("--save-path", help="write the path as PATH1")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("stiffen", help="export the stiffness-enhancement masks")
    p.add_argument("input")
    p.add_argument("outdir")
    p.add_argument("--levels", default="all", help="'all' or a comma-separated list of levels")
    p.set_defaults(func=cmd_stiffen)

    p = sub.add_parser("eval", help="average error/complexity curves over a folder of PBM shapes")
    p.add_argument("dataset")
    p.add_argument("output", help="CSV file to write")
    p.add_argument("--strategies", default="random,prune,compress")
    p.add_argument("--samples-per-curve", type=int, default=101)
    p.add_argument("--seed", type=int, default=0, help="base seed for the random strategy")
    p.add_argument("--r", type=int, help="points per step for compress")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("audit", help="check every invariant on one shape")
    p.add_argument("input")
    p.add_argument("--strategy", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--path-file")
    p.set_defaults(func=cmd_audit)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
