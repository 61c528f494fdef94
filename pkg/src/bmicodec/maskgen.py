"""Deterministic photomask generation and coverage analysis.

The pinned generator is SplitMix64 used in counter mode: the word for pixel
index i (row-major) is mix(seed + (i+1) * 0x9E3779B97F4A7C15), and the bit is
1 when the top 53 bits, scaled to [0,1), fall below the target density. Same
spec therefore gives a bit-identical mask on every platform. The generator is
recorded as PRNG id 1 in mask file headers (see docs/FORMATS.md); id 0 marks
external/hardware bitmaps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .blocks import split_blocks
from .errors import InvariantViolation, ZeroArea
from .types import BlockGrid, Mask

SPLITMIX64_PRNG_ID = 1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)
_U53_SCALE = float(2.0**-53)


@dataclass(frozen=True)
class MaskSpec:
    """Everything needed to regenerate a mask: shape, density, seed."""

    height: int
    width: int
    density: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.density < 1.0:
            raise InvariantViolation("density", f"{self.density} not in (0, 1)")


def _splitmix64(seed: int, count: int) -> np.ndarray:
    idx = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + idx * _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _MIX_1
        z = (z ^ (z >> np.uint64(27))) * _MIX_2
        z = z ^ (z >> np.uint64(31))
    return z


def generate(spec: MaskSpec) -> Mask:
    """Draw each bit independently Bernoulli(density) from the pinned PRNG.

    The threshold is the density rounded to float32 first, matching the f32
    header field, so a mask regenerated from a file header is bit-identical.
    """
    if spec.height == 0 or spec.width == 0:
        raise ZeroArea(f"mask shape {spec.height}x{spec.width} has zero area")
    words = _splitmix64(spec.seed, spec.height * spec.width)
    uniform = (words >> np.uint64(11)).astype(np.float64) * _U53_SCALE
    density = float(np.float32(spec.density))
    bits = (uniform < density).astype(np.uint8).reshape(spec.height, spec.width)
    return Mask(bits, seed=spec.seed, density=density, prng_id=SPLITMIX64_PRNG_ID)


def coverage_per_position(mask: Mask, grid: BlockGrid) -> np.ndarray:
    """How many blocks observe each within-block position.

    Entry j counts the blocks whose mask bit at position j is 1; this is the
    diagonal of the operator's Gram matrix, with values in [0, N].
    """
    cube = split_blocks(mask.bits, grid)
    return cube.sum(axis=0, dtype=np.int64)
