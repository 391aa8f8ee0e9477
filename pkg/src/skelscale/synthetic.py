"""Deterministic synthetic binary shapes for tests and demos."""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from .pixelgrid import BinaryImage

__all__ = ["line", "filled_square", "ring", "y_shape", "blob", "blob_suite"]


def line(length: int = 5, vertical: bool = False) -> BinaryImage:
    arr = np.ones((1, length), dtype=bool)
    return BinaryImage(arr.T if vertical else arr)


def filled_square(size: int = 5, margin: int = 0) -> BinaryImage:
    arr = np.zeros((size + 2 * margin, size + 2 * margin), dtype=bool)
    arr[margin:margin + size, margin:margin + size] = True
    return BinaryImage(arr)


def ring(outer: int = 9, thickness: int = 2, margin: int = 1) -> BinaryImage:
    """Square annulus with one hole."""
    n = outer + 2 * margin
    arr = np.zeros((n, n), dtype=bool)
    arr[margin:margin + outer, margin:margin + outer] = True
    arr[margin + thickness:margin + outer - thickness, margin + thickness:margin + outer - thickness] = False
    return BinaryImage(arr)


def y_shape(long_arm: int = 8, short_arm: int = 3, margin: int = 1) -> BinaryImage:
    """One-pixel Y: a long vertical stem and two short diagonal arms."""
    h = long_arm + short_arm + 1 + 2 * margin
    w = 2 * short_arm + 1 + 2 * margin
    arr = np.zeros((h, w), dtype=bool)
    cx, cy = margin + short_arm, margin + short_arm
    for k in range(1, short_arm + 1):
        arr[cy - k, cx - k] = True
        arr[cy - k, cx + k] = True
    arr[cy:cy + long_arm + 1, cx] = True
    return BinaryImage(arr)


def blob(size: int, seed: int, smooth: float = 3.0, fill: float = 0.45, margin: int = 2) -> BinaryImage:
    """Smoothed random field thresholded to its largest component."""
    rng = np.random.default_rng(seed)
    field = ndimage.gaussian_filter(rng.random((size, size)), smooth, mode="constant")
    thresh = np.quantile(field, 1.0 - fill)
    arr = field > thresh
    arr[:margin] = arr[-margin:] = False
    arr[:, :margin] = arr[:, -margin:] = False
    labels, n = ndimage.label(arr, structure=np.ones((3, 3)))
    if n > 1:
        sizes = np.bincount(labels.ravel())[1:]
        arr = labels == (1 + int(np.argmax(sizes)))
    if not arr.any():
        arr[size // 2, size // 2] = True
    return BinaryImage(arr)


def blob_suite(count: int, size: int = 40, seed: int = 0) -> list[BinaryImage]:
    """Smooth single-component blobs of varying roundness."""
    return [
        blob(size, seed * 1000 + k, smooth=size / 10.0 * (1.0 + 0.25 * (k % 3)), fill=0.3 + 0.05 * (k % 4))
        for k in range(count)
    ]
