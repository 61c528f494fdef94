"""Block-grid geometry on raw arrays: split, merge, pad.

Block order is row-major over the grid, matching row-major pixel storage:
block index i = r * cols + c. Every module that touches the N x bh x bw cube
relies on this one convention.
"""

from __future__ import annotations

import numpy as np

from .errors import IndivisibleGrid
from .types import BlockGrid


def padded_shape(height: int, width: int, grid: BlockGrid) -> tuple[int, int]:
    """Smallest shape >= (height, width) the grid divides."""
    ph = -(-height // grid.rows) * grid.rows
    pw = -(-width // grid.cols) * grid.cols
    return ph, pw


def pad_to_grid(a: np.ndarray, grid: BlockGrid) -> np.ndarray:
    """Zero-pad bottom/right edges until the grid divides the array."""
    h, w = a.shape
    ph, pw = padded_shape(h, w, grid)
    if (ph, pw) == (h, w):
        return a
    return np.pad(a, ((0, ph - h), (0, pw - w)))


def split_blocks(a: np.ndarray, grid: BlockGrid) -> np.ndarray:
    """Cut a 2-d array into the N x bh x bw cube (row-major block order)."""
    h, w = a.shape
    if not grid.divides(h, w):
        raise IndivisibleGrid(h, w, grid.rows, grid.cols)
    bh, bw = h // grid.rows, w // grid.cols
    return (
        a.reshape(grid.rows, bh, grid.cols, bw)
        .transpose(0, 2, 1, 3)
        .reshape(grid.n, bh, bw)
    )


def merge_blocks(cube: np.ndarray, grid: BlockGrid) -> np.ndarray:
    """Inverse of split_blocks: reassemble the cube into the full image."""
    n, bh, bw = cube.shape
    if n != grid.n:
        raise IndivisibleGrid(n, 0, grid.rows, grid.cols)
    return (
        cube.reshape(grid.rows, grid.cols, bh, bw)
        .transpose(0, 2, 1, 3)
        .reshape(grid.rows * bh, grid.cols * bw)
    )
