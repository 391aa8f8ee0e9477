"""Quality measures of scale-space states and shape topology/geometry."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Union

import numpy as np
from scipy import ndimage

from .errors import SkelscaleError
from .medialaxis import count_significant
from .pixelgrid import BinaryImage

__all__ = [
    "NA",
    "ScaleMetrics",
    "reconstruction_error",
    "minimality",
    "complexity",
    "diameter",
    "diameter_squared",
    "topology",
    "measure",
    "format_fraction",
]

NA = "NA"

_EIGHT = np.ones((3, 3), dtype=bool)
_FOUR = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class ScaleMetrics:
    level: int
    error: int
    minimality: Union[Fraction, str]
    complexity: int
    area: int
    diameter: Optional[float]
    components: int
    holes: int


def _area(state_or_area) -> int:
    if isinstance(state_or_area, (int, np.integer)):
        return int(state_or_area)
    if isinstance(state_or_area, BinaryImage):
        return state_or_area.area
    return state_or_area.image.area


def reconstruction_error(o0_area: int, state) -> int:
    """Object pixels lost relative to the reference area ``o0_area``.

    ``state`` is a scale state, a reconstructed image or an area.
    """
    err = int(o0_area) - _area(state)
    if err < 0:
        raise SkelscaleError(
            f"reconstruction has {-err} more pixels than the reference; it is not from a sub-skeleton"
        )
    return err


def minimality(state=None, *, points: Optional[int] = None, area: Optional[int] = None):
    """Skeleton points per reconstructed pixel as an exact fraction, or ``NA``."""
    if state is not None:
        points = len(state.points)
        area = state.image.area
    if not area:
        return NA
    return Fraction(int(points), int(area))


def complexity(points: Iterable) -> int:
    """Number of end points plus branching points."""
    return count_significant(points)


def _as_array(obj) -> np.ndarray:
    if isinstance(obj, BinaryImage):
        return obj.array
    pts = list(obj)
    if not pts:
        return np.zeros((1, 1), dtype=bool)
    xs = np.array([p[0] for p in pts], dtype=np.int64)
    ys = np.array([p[1] for p in pts], dtype=np.int64)
    x0, y0 = min(xs.min(), 0), min(ys.min(), 0)
    arr = np.zeros((ys.max() - y0 + 1, xs.max() - x0 + 1), dtype=bool)
    arr[ys - y0, xs - x0] = True
    return arr


def diameter_squared(obj) -> Optional[int]:
    """Exact squared diameter of the pixel-centre set, ``None`` when empty.

    Only 4-boundary pixels are compared: the farthest pair of a finite
    point set lies on its convex hull, whose vertices are boundary pixels.
    """
    arr = _as_array(obj)
    if not arr.any():
        return None
    inner = ndimage.binary_erosion(arr, structure=_FOUR, border_value=0)
    ys, xs = np.nonzero(arr & ~inner)
    best = 0
    chunk = 2048
    for k in range(0, xs.size, chunk):
        dx = xs[k:k + chunk, None] - xs[None, :]
        dy = ys[k:k + chunk, None] - ys[None, :]
        best = max(best, int((dx * dx + dy * dy).max()))
    return best


def diameter(obj) -> Optional[float]:
    d2 = diameter_squared(obj)
    return None if d2 is None else math.sqrt(d2)


def topology(obj) -> tuple[int, int]:
    """``(components, holes)``: 8-connected object pieces and 4-connected
    background pieces that do not reach the canvas border."""
    arr = _as_array(obj)
    if not arr.any():
        return 0, 0
    _, components = ndimage.label(arr, structure=_EIGHT)
    padded = np.pad(~arr, 1, constant_values=True)
    _, background = ndimage.label(padded, structure=_FOUR)
    return int(components), int(background) - 1


def measure(level: int, o0_area: int, points: Iterable, image: BinaryImage, with_diameter: bool = True) -> ScaleMetrics:
    pts = list(points)
    comps, holes = topology(image)
    return ScaleMetrics(
        level=level,
        error=reconstruction_error(o0_area, image),
        minimality=minimality(points=len(pts), area=image.area),
        complexity=complexity(pts),
        area=image.area,
        diameter=diameter(image) if with_diameter else None,
        components=comps,
        holes=holes,
    )


def format_fraction(value) -> str:
    """Six-decimal rendering of a fraction, ``NA`` passed through."""
    if value == NA or value is None:
        return NA
    q = Fraction(value)
    scaled = q * 10 ** 6
    n = scaled.numerator // scaled.denominator
    if (scaled - n) * 2 >= 1:
        n += 1
    return f"{n // 10 ** 6}.{n % 10 ** 6:06d}"
