"""The structured sensing operator and its projection step.

The operator is the horizontal stack of N binary diagonal blocks cut from the
photomask, so its Gram matrix is diagonal with the per-position coverage
counts on the diagonal. Everything here stays on the N x bh x bw cube; the
huge flat matrix is never materialized, which is what makes the projection
O(N * bh * bw).
"""

from __future__ import annotations

import numpy as np

from .blocks import split_blocks
from .errors import ShapeMismatch, SingularProjection
from .types import BlockGrid, Mask


class SensingOperator:
    """Mask-defined linear map from the block cube to one summed block."""

    def __init__(self, mask_blocks: np.ndarray, grid: BlockGrid):
        blocks = np.asarray(mask_blocks, dtype=np.float32)
        if blocks.ndim != 3 or blocks.shape[0] != grid.n:
            raise ShapeMismatch((grid.n, "bh", "bw"), blocks.shape)
        if blocks.size and not np.isin(blocks, (0.0, 1.0)).all():
            raise ValueError("mask blocks must contain only 0 and 1")
        self.mask_blocks = blocks
        self.grid = grid
        self.gram_diag = blocks.sum(axis=0, dtype=np.float64)
        self._zero_coverage = self.gram_diag == 0.0

    @classmethod
    def from_mask(cls, mask: Mask, grid: BlockGrid) -> "SensingOperator":
        return cls(split_blocks(mask.bits, grid), grid)

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def block_shape(self) -> tuple[int, int]:
        return self.mask_blocks.shape[1:]

    def _check_cube(self, x: np.ndarray) -> None:
        if x.shape != self.mask_blocks.shape:
            raise ShapeMismatch(self.mask_blocks.shape, x.shape)

    def _check_block(self, y: np.ndarray) -> None:
        if y.shape != self.block_shape:
            raise ShapeMismatch(self.block_shape, y.shape)

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Apply the operator: sum of masked blocks.

        Sequential accumulation in block order, preserving the input dtype,
        so it reproduces the encoder's arithmetic exactly.
        """
        self._check_cube(x)
        out = np.zeros(self.block_shape, dtype=np.result_type(np.float32, x.dtype))
        for i in range(self.n):
            out += self.mask_blocks[i] * x[i]
        return out

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        """Transpose map: replicate the block through every mask."""
        self._check_block(y)
        return self.mask_blocks * y[np.newaxis]

    def projection_step(
        self, x: np.ndarray, y: np.ndarray, eta: float, tolerant: bool = False
    ) -> np.ndarray:
        """Regularized data-consistency update of the auxiliary cube.

        Because the Gram matrix is diagonal, the inverse reduces to an
        elementwise divide: v_i = x_i + M_i * (y - forward(x)) / (gram + eta).
        Computed in float64. With eta == 0 a zero-coverage position makes the
        divide singular; ``tolerant`` substitutes max(eta, 1e-6) there
        instead of raising.
        """
        self._check_cube(x)
        self._check_block(y)
        if eta < 0:
            raise ValueError(f"eta must be nonnegative, got {eta}")
        denom = self.gram_diag + eta
        if self._zero_coverage.any():
            if tolerant:
                denom = np.where(self._zero_coverage, max(eta, 1e-6), denom)
            elif eta == 0:
                raise SingularProjection(
                    f"{int(self._zero_coverage.sum())} never-observed positions with eta=0"
                )
        residual = y.astype(np.float64) - self.forward(x.astype(np.float64))
        return x + self.mask_blocks * (residual / denom)[np.newaxis]

    def init_estimate(self, y: np.ndarray) -> np.ndarray:
        """Coverage-normalized adjoint: the standard starting cube."""
        self._check_block(y)
        scaled = y / np.maximum(self.gram_diag, 1.0)
        return self.mask_blocks * scaled[np.newaxis]
