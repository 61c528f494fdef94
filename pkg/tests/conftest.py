import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from bmicodec import BlockGrid, MaskSpec, calibration_chart, center_crop, encode, generate


@pytest.fixture(scope="session")
def chart64():
    """The 64x64 center crop of the synthetic chart used by regressions."""
    return center_crop(calibration_chart(256), 64)


@pytest.fixture(scope="session")
def fixture_mask():
    return generate(MaskSpec(64, 64, density=0.5, seed=42))


@pytest.fixture(scope="session")
def fixture_measurement(chart64, fixture_mask):
    return encode(chart64, fixture_mask, BlockGrid(2, 2))


def random_image_array(rng, h, w):
    return rng.random((h, w)).astype(np.float32)
