import math
from fractions import Fraction

import numpy as np
import pytest
from conftest import random_image
from oracles import all_pairs_diameter2, topology_oracle

from skelscale import synthetic
from skelscale.errors import SkelscaleError
from skelscale.medialaxis import Skeleton, skeletonize
from skelscale.metrics import (
    NA,
    complexity,
    diameter,
    diameter_squared,
    format_fraction,
    measure,
    minimality,
    reconstruction_error,
    topology,
)
from skelscale.pixelgrid import BinaryImage
from skelscale.scalespace import compression_path, evolve


def test_error_examples():
    skel = skeletonize(synthetic.filled_square(5, 1))
    path = compression_path(skel)
    o0 = evolve(path, skel, 0).image.area
    assert reconstruction_error(o0, evolve(path, skel, 0)) == 0
    assert reconstruction_error(9, 5) == 4
    assert reconstruction_error(o0, evolve(path, skel, path.m)) == o0
    with pytest.raises(SkelscaleError):
        reconstruction_error(3, 5)


def test_minimality_examples():
    assert minimality(points=3, area=9) == Fraction(1, 3)
    one = Skeleton(3, 3, {(1, 1): 1})
    skel = skeletonize(BinaryImage.from_points(3, 3, [(1, 1)]))
    assert skel == one
    path = compression_path(one)
    assert minimality(evolve(path, one, 0)) == 1
    assert minimality(evolve(path, one, 1)) == NA


def test_complexity_examples():
    assert complexity(synthetic.line(5).points()) == 2
    assert complexity(synthetic.y_shape().points()) == 4
    assert complexity(set()) == 0


def test_diameter_examples():
    assert diameter(BinaryImage.from_points(1, 1, [(0, 0)])) == 0
    assert diameter({(0, 0), (3, 4)}) == 5
    assert diameter(BinaryImage(np.ones((3, 3), bool))) == pytest.approx(2 * math.sqrt(2))
    assert diameter_squared(BinaryImage(np.ones((3, 3), bool))) == 8
    assert diameter(set()) is None


def test_diameter_matches_all_pairs(rng):
    for _ in range(40):
        img = random_image(rng, 22)
        if img.area > 500:
            continue
        want = all_pairs_diameter2(img.points()) if img.area else None
        assert diameter_squared(img) == want


def test_topology_examples():
    assert topology({(0, 0), (2, 0)}) == (2, 0)
    ring = {(x, y) for x in range(3) for y in range(3)} - {(1, 1)}
    assert topology(ring) == (1, 1)
    assert topology(set()) == (0, 0)
    assert topology(BinaryImage.empty(4, 4)) == (0, 0)


def test_topology_matches_flood_fill(rng):
    for _ in range(80):
        img = random_image(rng, 18)
        assert topology(img) == topology_oracle(img.points(), img.width, img.height)


def test_measure_row():
    img = synthetic.ring(9, 2)
    skel = skeletonize(img)
    state = evolve(compression_path(skel), skel, 0)
    row = measure(0, state.image.area, state.points, state.image)
    assert (row.error, row.components, row.holes) == (0, 1, 1)
    assert row.minimality == Fraction(len(skel), state.image.area)


@pytest.mark.parametrize(
    "value, text",
    [(Fraction(1, 3), "0.333333"), (Fraction(2, 3), "0.666667"), (Fraction(1, 2_000_000), "0.000001"), (7, "7.000000"), (NA, "NA")],
)
def test_format_fraction(value, text):
    assert format_fraction(value) == text
