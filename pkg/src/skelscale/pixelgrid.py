"""Binary images on the pixel grid, netpbm I/O and grid symmetries.

Coordinates are 0-based ``(x, y)`` with ``x`` the column and ``y`` the row.
Images are row-major; pixels outside the canvas count as background.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence, Union

import numpy as np

from .errors import DomainError, ParseError

__all__ = [
    "Point",
    "BinaryImage",
    "GridTransform",
    "CanonicalFrame",
    "compose",
    "apply_transform",
    "map_point",
    "map_points",
    "transformed_shape",
    "load_pbm",
    "save_pbm",
    "encode_pgm",
    "encode_ppm",
    "render_overlay",
    "row_major",
]


class Point(NamedTuple):
    x: int
    y: int


def row_major(p) -> tuple[int, int]:
    """Sort key placing points in row-major order."""
    return (p[1], p[0])


@dataclass(frozen=True, eq=False)
class BinaryImage:
    """Immutable binary image; ``array`` has shape ``(height, width)``."""

    array: np.ndarray

    def __post_init__(self):
        arr = np.array(self.array, dtype=bool, copy=True)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DomainError(f"image must be a non-empty 2-D grid, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "array", arr)

    @classmethod
    def empty(cls, width: int, height: int) -> "BinaryImage":
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def from_points(cls, width: int, height: int, points: Iterable) -> "BinaryImage":
        arr = np.zeros((height, width), dtype=bool)
        for x, y in points:
            if not (0 <= x < width and 0 <= y < height):
                raise DomainError(f"point {(x, y)} outside {width}x{height} canvas")
            arr[y, x] = True
        return cls(arr)

    @property
    def width(self) -> int:
        return self.array.shape[1]

    @property
    def height(self) -> int:
        return self.array.shape[0]

    @property
    def bits(self) -> np.ndarray:
        """Flat row-major view of length ``width*height``."""
        return self.array.reshape(-1)

    @property
    def area(self) -> int:
        return int(self.array.sum())

    def points(self) -> frozenset:
        ys, xs = np.nonzero(self.array)
        return frozenset(Point(int(x), int(y)) for x, y in zip(xs, ys))

    def __contains__(self, p) -> bool:
        x, y = p
        return 0 <= x < self.width and 0 <= y < self.height and bool(self.array[y, x])

    def __eq__(self, other):
        if not isinstance(other, BinaryImage):
            return NotImplemented
        return self.array.shape == other.array.shape and bool(np.array_equal(self.array, other.array))

    def __hash__(self):
        return hash((self.array.shape, self.array.tobytes()))

    def __repr__(self):
        return f"BinaryImage({self.width}x{self.height}, area={self.area})"


# ---------------------------------------------------------------------------
# Grid transforms
# ---------------------------------------------------------------------------

_KINDS = ("translate", "rotate90", "mirror-horizontal", "mirror-vertical")


@dataclass(frozen=True)
class GridTransform:
    """One on-grid symmetry.

    ``rotate90`` turns counter-clockwise: ``(x, y) -> (y, width-1-x)``.
    ``mirror-horizontal`` flips columns, ``mirror-vertical`` flips rows.
    """

    kind: str
    k: int = 0
    dx: int = 0
    dy: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown transform kind {self.kind!r}")
        if self.kind == "rotate90":
            object.__setattr__(self, "k", self.k % 4)

    @classmethod
    def translate(cls, dx: int, dy: int) -> "GridTransform":
        return cls("translate", dx=dx, dy=dy)

    @classmethod
    def rotate90(cls, k: int = 1) -> "GridTransform":
        return cls("rotate90", k=k)

    @classmethod
    def mirror_horizontal(cls) -> "GridTransform":
        return cls("mirror-horizontal")

    @classmethod
    def mirror_vertical(cls) -> "GridTransform":
        return cls("mirror-vertical")


TransformLike = Union[GridTransform, Sequence[GridTransform]]


def compose(*transforms: TransformLike) -> tuple:
    """Chain transforms left to right; the result is accepted wherever a
    single transform is."""
    out: list = []
    for t in transforms:
        out.extend(_as_chain(t))
    return tuple(out)


def _as_chain(t: TransformLike) -> tuple:
    if isinstance(t, GridTransform):
        return (t,)
    return tuple(t)


def _shape_after(t: GridTransform, width: int, height: int) -> tuple[int, int]:
    if t.kind == "rotate90" and t.k % 2 == 1:
        return height, width
    return width, height


def transformed_shape(t: TransformLike, width: int, height: int) -> tuple[int, int]:
    for step in _as_chain(t):
        width, height = _shape_after(step, width, height)
    return width, height


def _map_arrays(t: GridTransform, xs, ys, width, height):
    if t.kind == "translate":
        return xs + t.dx, ys + t.dy
    if t.kind == "mirror-horizontal":
        return width - 1 - xs, ys
    if t.kind == "mirror-vertical":
        return xs, height - 1 - ys
    for _ in range(t.k):
        xs, ys = ys, width - 1 - xs
        width, height = height, width
    return xs, ys


def map_points(t: TransformLike, xs, ys, width: int, height: int):
    """Map coordinate arrays through ``t`` on a ``width`` x ``height`` canvas."""
    xs = np.asarray(xs, dtype=np.int64)
    ys = np.asarray(ys, dtype=np.int64)
    for step in _as_chain(t):
        xs, ys = _map_arrays(step, xs, ys, width, height)
        width, height = _shape_after(step, width, height)
    return xs, ys


def map_point(t: TransformLike, p, width: int, height: int) -> Point:
    xs, ys = map_points(t, [p[0]], [p[1]], width, height)
    return Point(int(xs[0]), int(ys[0]))


def _apply_one(arr: np.ndarray, t: GridTransform) -> np.ndarray:
    if t.kind == "rotate90":
        return np.rot90(arr, t.k)
    if t.kind == "mirror-horizontal":
        return arr[:, ::-1]
    if t.kind == "mirror-vertical":
        return arr[::-1, :]
    h, w = arr.shape
    ys, xs = np.nonzero(arr)
    xs = xs + t.dx
    ys = ys + t.dy
    if xs.size and (xs.min() < 0 or ys.min() < 0 or xs.max() >= w or ys.max() >= h):
        raise DomainError(f"translation by ({t.dx}, {t.dy}) pushes the object off the canvas")
    out = np.zeros_like(arr)
    out[ys, xs] = arr[ys - t.dy, xs - t.dx]
    return out


def apply_transform(img: BinaryImage, t: TransformLike) -> BinaryImage:
    arr = img.array
    for step in _as_chain(t):
        arr = _apply_one(arr, step)
    return BinaryImage(arr)


# Dihedral group acting on (x, y) as integer matrices; rotations follow the
# counter-clockwise convention above (the canvas offset is dropped).
_ROT = np.array([[0, 1], [-1, 0]], dtype=np.int64)
_MIR = np.array([[-1, 0], [0, 1]], dtype=np.int64)
DIHEDRAL = tuple(
    np.linalg.matrix_power(_ROT, k) @ m
    for m in (np.eye(2, dtype=np.int64), _MIR)
    for k in range(4)
)

_KEY_OFFSET = 1 << 20
_KEY_SPAN = 1 << 21


class CanonicalFrame:
    """Orientation-independent row-major order for tie-breaking.

    Among the eight grid symmetries, the frame picks the one mapping the
    reference point set (optionally labelled, e.g. with radii) to the
    lexicographically smallest normalised configuration. Keys produced by
    :meth:`key` then order any points row-major *in that frame*, so
    algorithms that break ties by key commute with translations, quarter
    turns and mirrors up to symmetries of the reference set itself.
    """

    def __init__(self, matrix: np.ndarray, offset: tuple[int, int]):
        self.matrix = matrix
        self.offset = offset
        self._coeffs = tuple(int(v) for v in np.asarray(matrix).ravel()) + tuple(int(v) for v in offset)

    @classmethod
    def identity(cls) -> "CanonicalFrame":
        return cls(DIHEDRAL[0], (0, 0))

    @classmethod
    def from_points(cls, xs, ys, labels=None) -> "CanonicalFrame":
        xs = np.asarray(xs, dtype=np.int64)
        ys = np.asarray(ys, dtype=np.int64)
        if xs.size == 0:
            return cls.identity()
        labels = np.zeros_like(xs) if labels is None else np.asarray(labels, dtype=np.int64)
        best = None
        for mat in DIHEDRAL:
            cx = mat[0, 0] * xs + mat[0, 1] * ys
            cy = mat[1, 0] * xs + mat[1, 1] * ys
            ox, oy = int(cx.min()), int(cy.min())
            cx = cx - ox
            cy = cy - oy
            order = np.lexsort((labels, cx, cy))
            head = np.array([cy.max(), cx.max()], dtype=">i8").tobytes()
            body = np.stack([cy[order], cx[order], labels[order]], axis=1).astype(">i8").tobytes()
            key = head + body
            if best is None or key < best[0]:
                best = (key, mat, (ox, oy))
        return cls(best[1], best[2])

    def key(self, xs, ys) -> np.ndarray:
        xs = np.asarray(xs, dtype=np.int64)
        ys = np.asarray(ys, dtype=np.int64)
        m = self.matrix
        cx = m[0, 0] * xs + m[0, 1] * ys - self.offset[0]
        cy = m[1, 0] * xs + m[1, 1] * ys - self.offset[1]
        return (cy + _KEY_OFFSET) * _KEY_SPAN + (cx + _KEY_OFFSET)

    def point_key(self, p) -> int:
        a, b, c, d, ox, oy = self._coeffs
        x, y = p
        return (c * x + d * y - oy + _KEY_OFFSET) * _KEY_SPAN + (a * x + b * y - ox + _KEY_OFFSET)


# ---------------------------------------------------------------------------
# Netpbm
# ---------------------------------------------------------------------------

_WHITESPACE = frozenset(b" \t\n\r\x0b\x0c")
_HASH = ord("#")


class _HeaderReader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def skip_space(self):
        data, n = self.data, len(self.data)
        while self.pos < n:
            c = data[self.pos]
            if c in _WHITESPACE:
                self.pos += 1
            elif c == _HASH:
                while self.pos < n and data[self.pos] not in (10, 13):
                    self.pos += 1
            else:
                break

    def token(self, what: str) -> tuple[bytes, int]:
        self.skip_space()
        start = self.pos
        data, n = self.data, len(self.data)
        while self.pos < n and data[self.pos] not in _WHITESPACE and data[self.pos] != _HASH:
            self.pos += 1
        if self.pos == start:
            raise ParseError(f"missing {what}", start)
        return data[start:self.pos], start

    def dimension(self, what: str) -> int:
        tok, offset = self.token(what)
        if not tok.isdigit():
            raise ParseError(f"invalid {what} {tok!r}", offset)
        value = int(tok)
        if value <= 0:
            raise ParseError(f"{what} must be positive, got {value}", offset)
        return value


def load_pbm(data: bytes) -> BinaryImage:
    """Parse a P1 (ASCII) or P4 (binary) PBM stream; value 1 is object."""
    data = bytes(data)
    reader = _HeaderReader(data)
    if len(data) < 2:
        raise ParseError("stream too short for a PBM magic number", 0)
    magic = data[:2]
    if magic not in (b"P1", b"P4"):
        raise ParseError(f"unsupported magic {magic!r}, expected P1 or P4", 0)
    reader.pos = 2
    width = reader.dimension("width")
    height = reader.dimension("height")
    if magic == b"P4":
        if reader.pos >= len(data) or data[reader.pos] not in _WHITESPACE:
            raise ParseError("expected single whitespace after header", reader.pos)
        start = reader.pos + 1
        stride = (width + 7) // 8
        need = stride * height
        payload = data[start:start + need]
        if len(payload) < need:
            raise ParseError(f"truncated payload: need {need} bytes, have {len(payload)}", start + len(payload))
        packed = np.frombuffer(payload, dtype=np.uint8).reshape(height, stride)
        arr = np.unpackbits(packed, axis=1)[:, :width].astype(bool)
        return BinaryImage(arr)

    total = width * height
    values = np.zeros(total, dtype=bool)
    filled = 0
    pos, n = reader.pos, len(data)
    while filled < total:
        if pos >= n:
            raise ParseError(f"truncated raster: {filled} of {total} pixels", pos)
        c = data[pos]
        if c == 49:  # '1'
            values[filled] = True
            filled += 1
        elif c == 48:  # '0'
            filled += 1
        elif c in _WHITESPACE:
            pass
        elif c == _HASH:
            while pos < n and data[pos] not in (10, 13):
                pos += 1
            continue
        else:
            raise ParseError(f"invalid raster byte {bytes([c])!r}", pos)
        pos += 1
    return BinaryImage(values.reshape(height, width))


def save_pbm(img: BinaryImage) -> bytes:
    """Serialise as binary P4."""
    header = f"P4\n{img.width} {img.height}\n".encode("ascii")
    return header + np.packbits(img.array, axis=1).tobytes()


def encode_pgm(gray: np.ndarray) -> bytes:
    gray = np.asarray(gray, dtype=np.uint8)
    h, w = gray.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + gray.tobytes()


def encode_ppm(rgb: np.ndarray) -> bytes:
    rgb = np.asarray(rgb, dtype=np.uint8)
    h, w, _ = rgb.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes()


ENDPOINT_RGB = (255, 0, 0)
BRANCHING_RGB = (0, 0, 255)
SIMPLE_RGB = (0, 160, 0)


def render_overlay(img: BinaryImage, skel) -> bytes:
    """PPM with white background, black object and classified skeleton points."""
    from .medialaxis import PointClass, classify_all

    for x, y in skel.points:
        if not (0 <= x < img.width and 0 <= y < img.height):
            raise DomainError(f"skeleton point {(x, y)} outside {img.width}x{img.height} image")
    rgb = np.full((img.height, img.width, 3), 255, dtype=np.uint8)
    rgb[img.array] = 0
    palette = {
        PointClass.ENDPOINT: ENDPOINT_RGB,
        PointClass.BRANCHING: BRANCHING_RGB,
        PointClass.SIMPLE: SIMPLE_RGB,
    }
    for p, cls in classify_all(skel.points).items():
        rgb[p[1], p[0]] = palette[cls]
    return encode_ppm(rgb)
