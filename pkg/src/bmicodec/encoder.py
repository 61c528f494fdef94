"""Forward encoding: modulate by the mask, partition into blocks, sum.

The public ``encode`` streams block by block in row-major grid order,
accumulating into a single block-sized buffer, so no modulated full-size
intermediate is allocated. Accumulation is float32; a float64 path exists
behind ``accumulate64`` for high block counts.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .blocks import pad_to_grid, split_blocks
from .errors import DimensionMismatch, IndivisibleGrid
from .maskgen import MaskSpec, generate
from .types import BlockGrid, Image, Mask, Measurement, validate_pair


def modulate(image: Image, mask: Mask) -> Image:
    """Elementwise optical modulation: masked pixels go dark."""
    if (image.height, image.width) != (mask.height, mask.width):
        raise DimensionMismatch(
            (image.height, image.width), (mask.height, mask.width), "image/mask"
        )
    return Image(mask.bits * image.data)


def encode(
    image: Image,
    mask: Mask,
    grid: BlockGrid,
    pad: bool = False,
    accumulate64: bool = False,
    embed_mask: bool = False,
) -> Measurement:
    """Compress one image into a single summed block.

    With ``pad`` the bottom/right edges are zero-filled to the next multiple
    of the grid and the original shape is recorded for cropping at decode
    time. Provenance defaults to seed+density when the mask carries them;
    ``embed_mask`` (or an external mask) stores the full bitmap instead.
    """
    validate_shapes = image.height % grid.rows or image.width % grid.cols
    if (image.height, image.width) != (mask.height, mask.width):
        raise DimensionMismatch(
            (image.height, image.width), (mask.height, mask.width), "image/mask"
        )
    if validate_shapes and not pad:
        raise IndivisibleGrid(image.height, image.width, grid.rows, grid.cols)

    pixels = pad_to_grid(image.data, grid)
    bits = pad_to_grid(mask.bits, grid)
    h, w = pixels.shape
    bh, bw = h // grid.rows, w // grid.cols

    acc_dtype = np.float64 if accumulate64 else np.float32
    acc = np.zeros((bh, bw), dtype=acc_dtype)
    for r in range(grid.rows):
        for c in range(grid.cols):
            acc += bits[r * bh : (r + 1) * bh, c * bw : (c + 1) * bw] * pixels[
                r * bh : (r + 1) * bh, c * bw : (c + 1) * bw
            ]

    if embed_mask or mask.seed is None or mask.density is None:
        provenance = {"mask": mask}
    else:
        provenance = {"mask_seed": mask.seed, "mask_density": mask.density}
    return Measurement(
        data=acc.astype(np.float32),
        grid=grid,
        original_height=image.height,
        original_width=image.width,
        **provenance,
    )


def _encode_dense(image: Image, mask: Mask, grid: BlockGrid, pad: bool = False) -> np.ndarray:
    """Naive reference path: materialize the modulated image, then sum blocks.

    Uses the same sequential row-major accumulation order as ``encode`` so
    the two agree bit for bit; kept for cross-checking only.
    """
    if not pad:
        validate_pair(image, mask, grid)
    modulated = pad_to_grid(mask.bits * image.data, grid)
    cube = split_blocks(modulated, grid)
    acc = np.zeros(cube.shape[1:], dtype=np.float32)
    for i in range(cube.shape[0]):
        acc += cube[i]
    return acc


@dataclass(frozen=True)
class BenchRow:
    resolution: str
    pixels: int
    mean_ms: float
    stddev_ms: float


def bench_encode(
    resolutions: list[tuple[int, int]],
    grid: BlockGrid,
    repeats: int,
    seed: int = 0,
) -> list[BenchRow]:
    """Time ``encode`` on freshly generated random inputs, one row per shape.

    Single-threaded, one mask per resolution, fresh image per repeat; inputs
    are generated outside the timed region. Stddev is the population value,
    so repeats=1 reports 0.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    rows = []
    for idx, (h, w) in enumerate(resolutions):
        mask = generate(MaskSpec(h, w, density=0.5, seed=seed + idx))
        rng = np.random.default_rng(seed + idx)
        times_ms = np.empty(repeats, dtype=np.float64)
        for rep in range(repeats):
            image = Image(rng.random((h, w), dtype=np.float32))
            t0 = time.perf_counter()
            encode(image, mask, grid)
            times_ms[rep] = (time.perf_counter() - t0) * 1e3
        rows.append(
            BenchRow(
                resolution=f"{h}x{w}",
                pixels=h * w,
                mean_ms=float(times_ms.mean()),
                stddev_ms=float(times_ms.std()),
            )
        )
    return rows


def write_bench_csv(rows: list[BenchRow], path) -> None:
    with open(path, "w") as fh:
        fh.write("resolution,pixels,mean_ms,stddev_ms\n")
        for r in rows:
            fh.write(f"{r.resolution},{r.pixels},{r.mean_ms:.6f},{r.stddev_ms:.6f}\n")
