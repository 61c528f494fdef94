"""GAP/ADMM loops, the TV denoiser, traces, and oracle equivalences."""

import numpy as np
import pytest

from bmicodec import (
    BlockGrid,
    IdentityDenoiser,
    Image,
    Mask,
    SensingOperator,
    SolverConfig,
    admm_solve,
    gap_solve,
    psnr,
    tv_denoise,
)
from bmicodec.blocks import split_blocks
from bmicodec.errors import NonFiniteState
from bmicodec.maskgen import MaskSpec, generate
from bmicodec.solvers import total_variation

from oracles.dense_ref import build_dense_phi, chambolle_tv_reference

# locked by a one-off run of oracles.dense_ref.chambolle_tv_reference
IMPULSE_PEAK_AFTER_TV = 0.6603541133551141


def _identity_cfg(**kw):
    defaults = dict(tv_weight=0.0, stop_tol=0.0, clamp_final=False)
    defaults.update(kw)
    return SolverConfig(**defaults)


class TestGapSolve:
    def test_cr1_exact_recovery_in_one_iteration(self):
        rng = np.random.default_rng(30)
        img = Image(rng.random((8, 8), dtype=np.float32))
        mask = Mask(np.ones((8, 8), dtype=np.uint8))
        grid = BlockGrid(1, 1)
        op = SensingOperator.from_mask(mask, grid)
        cfg = SolverConfig(tv_weight=0.0)  # identity denoiser, default stop_tol
        rec, trace = gap_solve(img.data.astype(np.float64), op, cfg)
        assert psnr(img, rec) == 100.0
        assert len(trace.iters) == 1

    def test_unobserved_block_keeps_init(self):
        blocks = np.array([1.0, 0.0], dtype=np.float32).reshape(2, 1, 1)
        op = SensingOperator(blocks, BlockGrid(1, 2))
        y = np.array([[0.3]])  # from x = [0.3, 0.7]: the 0.7 never reaches the sensor
        rec, _ = gap_solve(y, op, _identity_cfg(max_iters=5, tolerant=True))
        assert np.allclose(rec.data, [[0.3, 0.0]])  # second coord stays at init

    def test_least_norm_after_one_plain_iteration(self):
        """Identity denoiser, x0 = 0, eta = 0, 1 iter == pseudo-inverse solution."""
        rng = np.random.default_rng(31)
        for seed, (rows, cols) in [(0, (2, 2)), (1, (1, 4)), (2, (2, 1))]:
            mask = generate(MaskSpec(4, 4, density=0.7, seed=seed))
            grid = BlockGrid(rows, cols)
            op = SensingOperator.from_mask(mask, grid)
            y = rng.random(op.block_shape)
            x0 = np.zeros((grid.n, *op.block_shape))
            rec, _ = gap_solve(
                y, op, _identity_cfg(max_iters=1, tolerant=True),
                denoiser=IdentityDenoiser(), x0=x0,
            )
            phi = build_dense_phi(np.array(mask.bits), rows, cols)
            least_norm = np.linalg.pinv(phi) @ y.ravel()
            bh, bw = op.block_shape
            cube = least_norm.reshape(grid.n, bh, bw)
            expected = split_blocks(rec.data.astype(np.float64), grid)
            assert np.allclose(expected, cube, atol=1e-6)

    def test_interleaved_consistency_plain_mode(self):
        """Plain alternation: after every projection, forward(v) == y to 1e-5."""
        rng = np.random.default_rng(32)
        mask = generate(MaskSpec(16, 16, density=0.8, seed=7))
        grid = BlockGrid(2, 2)
        bits = np.array(mask.bits)
        cov = bits.reshape(2, 8, 2, 8).transpose(0, 2, 1, 3).sum(axis=(0, 1))
        bits[:8, :8][cov == 0] = 1  # force full coverage through block 0
        op = SensingOperator.from_mask(Mask(bits), grid)
        assert (op.gram_diag > 0).all()
        y = op.forward(rng.random((4, 8, 8)))
        gaps = []

        def probe(cube):
            gaps.append(float(np.abs(y - op.forward(cube)).max()))
            return tv_denoise(cube, 0.05, 3)

        gap_solve(y, op, SolverConfig(max_iters=8, stop_tol=0.0, accelerate=False), denoiser=probe)
        assert len(gaps) == 8
        assert max(gaps) <= 1e-5

    def test_accelerated_first_iteration_is_plain(self):
        rng = np.random.default_rng(33)
        mask = generate(MaskSpec(8, 8, density=0.8, seed=9))
        op = SensingOperator.from_mask(mask, BlockGrid(2, 2))
        y = rng.random(op.block_shape)
        rec_acc, _ = gap_solve(y, op, _identity_cfg(max_iters=1, tolerant=True))
        rec_plain, _ = gap_solve(y, op, _identity_cfg(max_iters=1, tolerant=True, accelerate=False))
        assert np.array_equal(rec_acc.data, rec_plain.data)

    def test_deterministic_traces(self):
        rng = np.random.default_rng(34)
        mask = generate(MaskSpec(16, 16, density=0.5, seed=3))
        op = SensingOperator.from_mask(mask, BlockGrid(2, 2))
        y = op.forward(rng.random((4, 8, 8)))
        cfg = SolverConfig(max_iters=10, tolerant=True)
        rec1, tr1 = gap_solve(y, op, cfg)
        rec2, tr2 = gap_solve(y, op, cfg)
        assert np.array_equal(rec1.data, rec2.data)
        assert tr1.residual_l2 == tr2.residual_l2
        assert tr1.change_l2 == tr2.change_l2

    def test_nonfinite_state_detected(self):
        mask = Mask(np.ones((4, 4), dtype=np.uint8))
        op = SensingOperator.from_mask(mask, BlockGrid(2, 2))

        def bad_denoiser(cube):
            out = cube.copy()
            out[0, 0, 0] = np.nan
            return out

        with pytest.raises(NonFiniteState):
            gap_solve(np.ones((2, 2)), op, SolverConfig(), denoiser=bad_denoiser)

    def test_stages10_preset(self):
        mask = generate(MaskSpec(8, 8, density=0.5, seed=5))
        op = SensingOperator.from_mask(mask, BlockGrid(2, 2))
        y = op.forward(np.random.default_rng(35).random((4, 4, 4)))
        cfg = SolverConfig.preset("stages10", tolerant=True)
        _, trace = gap_solve(y, op, cfg)
        assert trace.iters == list(range(1, 11))

    def test_eta_schedule_clamps_to_last(self):
        cfg = SolverConfig(eta_schedule=[0.1, 0.2])
        assert cfg.eta_at(0) == 0.1
        assert cfg.eta_at(1) == 0.2
        assert cfg.eta_at(5) == 0.2
        assert SolverConfig(eta_schedule=0.3).eta_at(7) == 0.3

    def test_trace_csv_schema(self, tmp_path):
        mask = Mask(np.ones((4, 4), dtype=np.uint8))
        op = SensingOperator.from_mask(mask, BlockGrid(1, 1))
        _, trace = gap_solve(np.ones((4, 4)) * 0.5, op, SolverConfig(tv_weight=0.0))
        out = tmp_path / "trace.csv"
        trace.write_csv(out)
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "iter,residual_l2,change_l2"
        assert len(lines) == len(trace.iters) + 1


class TestAdmmSolve:
    def test_first_x_update_is_projection_with_rho(self):
        rng = np.random.default_rng(36)
        mask = generate(MaskSpec(8, 8, density=0.8, seed=6))
        op = SensingOperator.from_mask(mask, BlockGrid(2, 2))
        y = rng.random(op.block_shape)
        x0 = op.init_estimate(y)
        cfg = _identity_cfg(algorithm="admm", max_iters=1, rho=0.05, tolerant=True)
        rec, _ = admm_solve(y, op, cfg, denoiser=IdentityDenoiser(), x0=x0)
        # identity denoiser, u0 = 0: returned z == x-update == projection at x0
        expected = op.projection_step(x0, y, eta=0.05, tolerant=True)
        from bmicodec.blocks import merge_blocks

        assert np.allclose(rec.data, merge_blocks(expected, op.grid), atol=1e-12)

    def test_zero_measurement_zero_output(self):
        mask = generate(MaskSpec(8, 8, density=0.5, seed=8))
        op = SensingOperator.from_mask(mask, BlockGrid(2, 2))
        y = np.zeros(op.block_shape)
        cfg = SolverConfig(algorithm="admm", max_iters=10, tolerant=True)
        rec, _ = admm_solve(y, op, cfg, x0=np.zeros((4, 4, 4)))
        assert not rec.data.any()

    def test_deterministic(self):
        rng = np.random.default_rng(37)
        mask = generate(MaskSpec(8, 8, density=0.5, seed=2))
        op = SensingOperator.from_mask(mask, BlockGrid(2, 2))
        y = op.forward(rng.random((4, 4, 4)))
        cfg = SolverConfig(algorithm="admm", max_iters=6, tolerant=True)
        rec1, tr1 = admm_solve(y, op, cfg)
        rec2, tr2 = admm_solve(y, op, cfg)
        assert np.array_equal(rec1.data, rec2.data)
        assert tr1.residual_l2 == tr2.residual_l2


class TestTvDenoise:
    def test_zero_weight_is_identity(self):
        rng = np.random.default_rng(38)
        cube = rng.random((3, 8, 8))
        assert np.array_equal(tv_denoise(cube, 0.0, 5), cube)

    def test_constant_block_unchanged(self):
        cube = np.full((2, 8, 8), 0.7)
        out = tv_denoise(cube, 0.3, 10)
        assert np.allclose(out, cube, atol=1e-14)

    def test_impulse_peak_matches_reference(self):
        cube = np.zeros((1, 8, 8))
        cube[0, 4, 4] = 1.0
        out = tv_denoise(cube, 0.1, 5)
        assert abs(out[0, 4, 4] - IMPULSE_PEAK_AFTER_TV) <= 1e-9
        assert out[0, 4, 4] < 1.0
        assert abs(out.sum() - 1.0) <= 1e-3

    def test_matches_reference_implementation(self):
        rng = np.random.default_rng(39)
        block = rng.random((12, 12))
        ours = tv_denoise(block[np.newaxis], 0.15, 7)[0]
        theirs = chambolle_tv_reference(block, 0.15, 7)
        assert np.allclose(ours, theirs, atol=1e-12)

    def test_tv_never_increases(self):
        rng = np.random.default_rng(40)
        for seed in range(5):
            block = rng.random((10, 10))
            out = tv_denoise(block[np.newaxis], 0.2, 5)[0]
            assert total_variation(out) <= total_variation(block) + 1e-12

    def test_blocks_denoised_independently(self):
        rng = np.random.default_rng(41)
        a = rng.random((8, 8))
        b = rng.random((8, 8))
        stacked = tv_denoise(np.stack([a, b]), 0.1, 5)
        assert np.array_equal(stacked[0], tv_denoise(a[np.newaxis], 0.1, 5)[0])
        assert np.array_equal(stacked[1], tv_denoise(b[np.newaxis], 0.1, 5)[0])


class TestSolverConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(max_iters=0)
        with pytest.raises(ValueError):
            SolverConfig(tv_weight=-0.1)
        with pytest.raises(ValueError):
            SolverConfig(rho=0.0)
        with pytest.raises(ValueError):
            SolverConfig(algorithm="sgd")

    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            SolverConfig.preset("stages99")
