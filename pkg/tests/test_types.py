"""Domain types: construction, invariants, validate_pair."""

import numpy as np
import pytest

from bmicodec import BlockGrid, Image, Mask, Measurement, ReconState, encode, generate, validate_pair
from bmicodec.errors import DimensionMismatch, IndivisibleGrid, InvariantViolation, ShapeMismatch
from bmicodec.maskgen import MaskSpec


def _image(h, w, fill=0.5):
    return Image(np.full((h, w), fill, dtype=np.float32))


def _ones_mask(h, w):
    return Mask(np.ones((h, w), dtype=np.uint8))


class TestValidatePair:
    def test_matching_divisible(self):
        validate_pair(_image(512, 512), _ones_mask(512, 512), BlockGrid(4, 4))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            validate_pair(_image(512, 512), _ones_mask(256, 256), BlockGrid(2, 2))

    def test_indivisible_grid(self):
        with pytest.raises(IndivisibleGrid):
            validate_pair(_image(10, 10), _ones_mask(10, 10), BlockGrid(3, 3))

    def test_pure_in_pixel_values(self):
        """Outcome depends only on shapes, not contents."""
        grid = BlockGrid(2, 2)
        rng = np.random.default_rng(3)
        for _ in range(5):
            img = Image(rng.random((8, 8), dtype=np.float32))
            mask = Mask((rng.random((8, 8)) < 0.5).astype(np.uint8))
            validate_pair(img, mask, grid)  # never raises for these shapes


class TestImage:
    def test_shape_properties(self):
        img = _image(4, 6)
        assert (img.height, img.width) == (4, 6)

    def test_immutable(self):
        img = _image(4, 4)
        with pytest.raises(ValueError):
            img.data[0, 0] = 1.0

    def test_rejects_non_2d(self):
        with pytest.raises(DimensionMismatch):
            Image(np.zeros(5, dtype=np.float32))


class TestMask:
    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            Mask(np.full((2, 2), 2, dtype=np.uint8))

    def test_immutable(self):
        m = _ones_mask(2, 2)
        with pytest.raises(ValueError):
            m.bits[0, 0] = 0


class TestBlockGrid:
    def test_n_is_compression_ratio(self):
        assert BlockGrid(2, 5).n == 10  # non-square ratios supported

    def test_rejects_zero(self):
        with pytest.raises(ValueError):
            BlockGrid(0, 4)

    def test_divides(self):
        assert BlockGrid(4, 4).divides(512, 512)
        assert not BlockGrid(3, 3).divides(10, 10)


class TestMeasurement:
    def test_encoder_outputs_satisfy_invariants(self):
        """Construction check over random seeds: every encode is valid."""
        rng = np.random.default_rng(11)
        grid = BlockGrid(2, 3)
        for seed in range(8):
            mask = generate(MaskSpec(12, 12, density=0.4, seed=seed))
            img = Image(rng.random((12, 12), dtype=np.float32))
            m = encode(img, mask, grid)
            m.validate()
            assert m.data.shape == (6, 4)
            assert m.block_height * grid.rows == m.padded_height
            assert not m.is_padded

    def test_provenance_exclusive(self):
        data = np.zeros((2, 2), dtype=np.float32)
        with pytest.raises(ValueError):
            Measurement(data, BlockGrid(1, 1), 2, 2)  # neither provenance
        with pytest.raises(ValueError):
            Measurement(
                data, BlockGrid(1, 1), 2, 2,
                mask_seed=1, mask_density=0.5, mask=_ones_mask(2, 2),
            )

    def test_padded_bookkeeping(self):
        img = _image(10, 10)
        mask = _ones_mask(10, 10)
        m = encode(img, mask, BlockGrid(3, 3), pad=True)
        assert m.is_padded
        assert (m.padded_height, m.padded_width) == (12, 12)
        assert (m.original_height, m.original_width) == (10, 10)

    def test_range_violation_detected(self):
        m = Measurement(
            np.full((2, 2), 9.0, dtype=np.float32), BlockGrid(2, 2), 4, 4,
            mask_seed=0, mask_density=0.5,
        )
        with pytest.raises(InvariantViolation):
            m.validate()


class TestReconState:
    def test_shape_agreement(self):
        x = np.zeros((2, 3, 3))
        with pytest.raises(ShapeMismatch):
            ReconState(x=x, v=np.zeros((2, 3, 4)))

    def test_eta_nonnegative(self):
        x = np.zeros((2, 3, 3))
        with pytest.raises(ValueError):
            ReconState(x=x, v=x.copy(), eta=-0.1)
