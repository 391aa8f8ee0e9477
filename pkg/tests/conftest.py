import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from skelscale import synthetic  # noqa: E402
from skelscale.pixelgrid import BinaryImage  # noqa: E402


def random_image(rng, max_side=16, density=None):
    w = int(rng.integers(1, max_side + 1))
    h = int(rng.integers(1, max_side + 1))
    p = rng.uniform(0.2, 0.9) if density is None else density
    return BinaryImage(rng.random((h, w)) < p)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def fixtures():
    return {
        "line": synthetic.line(7),
        "square": synthetic.filled_square(5, margin=1),
        "ring": synthetic.ring(11, 3),
        "y": synthetic.y_shape(),
    }


# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
