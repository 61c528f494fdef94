"""Shared domain types: images, masks, block grids, measurements, solver state.

All container types are immutable after construction (backing arrays are
marked read-only) and safe to share across workers. ``ReconState`` is the one
mutable type; it belongs to a single solver instance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, IndivisibleGrid, InvariantViolation, ShapeMismatch


def _frozen_array(data, dtype) -> np.ndarray:
    a = np.array(data, dtype=dtype, order="C", copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Image:
    """Single-channel image, row-major float32 intensities.

    Normalized inputs live in [0, 1]; the range is enforced when files are
    loaded, not here, so solver iterates may transiently exceed it.
    """

    data: np.ndarray

    def __post_init__(self):
        a = _frozen_array(self.data, np.float32)
        if a.ndim != 2:
            raise DimensionMismatch("2-d array", f"{a.ndim}-d array", "image")
        object.__setattr__(self, "data", a)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class Mask:
    """Binary photomask aligned to the image it modulates.

    Bit value 1 is translucent, 0 is opaque. ``seed``/``density``/``prng_id``
    record provenance when the mask came from the pinned generator; they are
    None for external (hardware-calibrated) masks.
    """

    bits: np.ndarray
    seed: int | None = None
    density: float | None = None
    prng_id: int = 0

    def __post_init__(self):
        a = _frozen_array(self.bits, np.uint8)
        if a.ndim != 2:
            raise DimensionMismatch("2-d array", f"{a.ndim}-d array", "mask")
        if a.size and a.max() > 1:
            raise ValueError("mask bits must be 0 or 1")
        object.__setattr__(self, "bits", a)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]


@dataclass(frozen=True)
class BlockGrid:
    """Partition of an image into rows x cols equal blocks.

    The block count N = rows * cols is the compression ratio; it need not be
    a perfect square.
    """

    rows: int
    cols: int

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"grid must be at least 1x1, got {self.rows}x{self.cols}")

    @property
    def n(self) -> int:
        return self.rows * self.cols

    def divides(self, height: int, width: int) -> bool:
        return height % self.rows == 0 and width % self.cols == 0

    def __str__(self) -> str:
        return f"{self.rows}x{self.cols}"


@dataclass(frozen=True)
class Measurement:
    """One summed block plus the metadata needed to decode it.

    Mask provenance is either (seed, density) for generated masks or an
    embedded Mask for hardware masks; exactly one of the two is present.
    The embedded/seeded mask always has the original (pre-padding) shape.
    """

    data: np.ndarray
    grid: BlockGrid
    original_height: int
    original_width: int
    mask_seed: int | None = None
    mask_density: float | None = None
    mask: Mask | None = None

    def __post_init__(self):
        a = _frozen_array(self.data, np.float32)
        if a.ndim != 2:
            raise DimensionMismatch("2-d array", f"{a.ndim}-d array", "measurement")
        object.__setattr__(self, "data", a)
        seeded = self.mask_seed is not None and self.mask_density is not None
        if seeded == (self.mask is not None):
            raise ValueError("exactly one mask provenance required: seed+density or embedded mask")
        ph, pw = self.padded_height, self.padded_width
        if ph < self.original_height or pw < self.original_width:
            raise DimensionMismatch(
                (self.original_height, self.original_width), (ph, pw), "padded extent"
            )
        if self.mask is not None and (
            self.mask.height != self.original_height or self.mask.width != self.original_width
        ):
            raise DimensionMismatch(
                (self.original_height, self.original_width),
                (self.mask.height, self.mask.width),
                "embedded mask",
            )

    @property
    def block_height(self) -> int:
        return self.data.shape[0]

    @property
    def block_width(self) -> int:
        return self.data.shape[1]

    @property
    def padded_height(self) -> int:
        return self.block_height * self.grid.rows

    @property
    def padded_width(self) -> int:
        return self.block_width * self.grid.cols

    @property
    def is_padded(self) -> bool:
        return (
            self.padded_height != self.original_height
            or self.padded_width != self.original_width
        )

    def validate(self) -> None:
        """Full invariant check: finite values within [0, N]."""
        n = self.grid.n
        if not np.isfinite(self.data).all():
            raise InvariantViolation("data", "non-finite value in payload")
        lo = float(self.data.min()) if self.data.size else 0.0
        hi = float(self.data.max()) if self.data.size else 0.0
        if lo < 0.0 or hi > n:
            raise InvariantViolation("data", f"values [{lo}, {hi}] outside [0, {n}]")


@dataclass
class ReconState:
    """Mutable per-solve state: current estimate, auxiliary cube, bookkeeping."""

    x: np.ndarray
    v: np.ndarray
    stage: int = 0
    eta: float = 0.0
    residual_norm: float = float("inf")

    def __post_init__(self):
        if self.x.shape != self.v.shape:
            raise ShapeMismatch(self.x.shape, self.v.shape)
        if self.eta < 0:
            raise ValueError(f"eta must be nonnegative, got {self.eta}")


def validate_pair(image: Image, mask: Mask, grid: BlockGrid) -> None:
    """Check that image and mask share a shape the grid divides.

    Pure function of the shapes; raises DimensionMismatch or IndivisibleGrid.
    """
    if (image.height, image.width) != (mask.height, mask.width):
        raise DimensionMismatch(
            (image.height, image.width), (mask.height, mask.width), "image/mask"
        )
    if not grid.divides(image.height, image.width):
        raise IndivisibleGrid(image.height, image.width, grid.rows, grid.cols)
