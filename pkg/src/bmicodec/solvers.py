"""Iterative reconstruction: GAP and ADMM outer loops with pluggable denoisers.

A denoiser is any deterministic shape-preserving callable on the block cube;
the shipped classical prior is isotropic total variation applied per block
via Chambolle's dual fixed point. All solver arithmetic is float64; the final
image is cast to float32 after cropping and (optionally) clamping.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .blocks import merge_blocks, pad_to_grid
from .errors import DimensionMismatch, NonFiniteState
from .maskgen import MaskSpec, generate
from .sensing import SensingOperator
from .types import Image, Mask, Measurement, ReconState

Denoiser = Callable[[np.ndarray], np.ndarray]

_CHAMBOLLE_TAU = 0.25


@dataclass
class SolverConfig:
    """Knobs shared by both algorithms.

    eta_schedule is a scalar or a per-iteration sequence (clamped to its last
    entry when shorter than max_iters). The ``stages10`` preset mirrors a
    fixed 10-stage unrolled run: exactly 10 iterations, no early stop.
    """

    algorithm: str = "gap"
    max_iters: int = 60
    eta_schedule: float | Sequence[float] = 0.0
    rho: float = 0.01
    tv_weight: float = 0.1
    tv_inner_iters: int = 5
    stop_tol: float = 1e-5
    clamp_final: bool = True
    tolerant: bool = False
    accelerate: bool = True

    def __post_init__(self):
        if self.algorithm not in ("gap", "admm"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tv_weight < 0:
            raise ValueError(f"tv_weight must be >= 0, got {self.tv_weight}")
        if self.rho <= 0:
            raise ValueError(f"rho must be > 0, got {self.rho}")

    def eta_at(self, k: int) -> float:
        if np.isscalar(self.eta_schedule):
            return float(self.eta_schedule)
        sched = list(self.eta_schedule)
        return float(sched[min(k, len(sched) - 1)])

    @classmethod
    def preset(cls, name: str, **overrides) -> "SolverConfig":
        if name == "stages10":
            base = {"max_iters": 10, "stop_tol": 0.0}
        else:
            raise ValueError(f"unknown preset {name!r}")
        base.update(overrides)
        return cls(**base)


@dataclass
class SolveTrace:
    """Per-iteration convergence record, one row per outer iteration."""

    iters: list = dataclasses.field(default_factory=list)
    residual_l2: list = dataclasses.field(default_factory=list)
    change_l2: list = dataclasses.field(default_factory=list)

    def append(self, k: int, residual: float, change: float) -> None:
        self.iters.append(k)
        self.residual_l2.append(residual)
        self.change_l2.append(change)

    def to_csv(self) -> str:
        lines = ["iter,residual_l2,change_l2"]
        for k, r, c in zip(self.iters, self.residual_l2, self.change_l2):
            lines.append(f"{k},{r:.17g},{c:.17g}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_csv())


class IdentityDenoiser:
    """No-op prior; useful for pure least-squares behaviour and tests."""

    def __call__(self, cube: np.ndarray) -> np.ndarray:
        return cube


class TvDenoiser:
    """Isotropic-TV proximal denoiser applied independently per block."""

    def __init__(self, weight: float, inner_iters: int = 5):
        self.weight = weight
        self.inner_iters = inner_iters

    def __call__(self, cube: np.ndarray) -> np.ndarray:
        return tv_denoise(cube, self.weight, self.inner_iters)


def _grad(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    gx = np.zeros_like(a)
    gy = np.zeros_like(a)
    gx[..., :, :-1] = a[..., :, 1:] - a[..., :, :-1]
    gy[..., :-1, :] = a[..., 1:, :] - a[..., :-1, :]
    return gx, gy


def _div(px: np.ndarray, py: np.ndarray) -> np.ndarray:
    d = np.zeros_like(px)
    d[..., :, 0] += px[..., :, 0]
    d[..., :, 1:] += px[..., :, 1:] - px[..., :, :-1]
    d[..., 0, :] += py[..., 0, :]
    d[..., 1:, :] += py[..., 1:, :] - py[..., :-1, :]
    return d


def total_variation(a: np.ndarray) -> float:
    """Isotropic TV with forward differences and Neumann boundaries."""
    gx, gy = _grad(np.asarray(a, dtype=np.float64))
    return float(np.sqrt(gx * gx + gy * gy).sum())


def tv_denoise(cube: np.ndarray, weight: float, inner_iters: int) -> np.ndarray:
    """Proximal isotropic-TV denoising via Chambolle dual iterations.

    Solves min_x 0.5 ||x - b||^2 + weight * TV(x) per 2-d block (leading axes
    are batch). weight == 0 returns the input unchanged.
    """
    if weight < 0:
        raise ValueError(f"weight must be >= 0, got {weight}")
    if weight == 0 or inner_iters == 0:
        return cube
    b = np.asarray(cube, dtype=np.float64)
    px = np.zeros_like(b)
    py = np.zeros_like(b)
    scaled = b / weight
    for _ in range(inner_iters):
        gx, gy = _grad(_div(px, py) - scaled)
        norm = 1.0 + _CHAMBOLLE_TAU * np.sqrt(gx * gx + gy * gy)
        px = (px + _CHAMBOLLE_TAU * gx) / norm
        py = (py + _CHAMBOLLE_TAU * gy) / norm
    return b - weight * _div(px, py)


def _make_denoiser(cfg: SolverConfig) -> Denoiser:
    if cfg.tv_weight == 0:
        return IdentityDenoiser()
    return TvDenoiser(cfg.tv_weight, cfg.tv_inner_iters)


def _finish(
    cube: np.ndarray, op: SensingOperator, cfg: SolverConfig, crop_to
) -> Image:
    full = merge_blocks(cube, op.grid)
    if crop_to is not None:
        full = full[: crop_to[0], : crop_to[1]]
    if cfg.clamp_final:
        full = np.clip(full, 0.0, 1.0)
    return Image(full)


def gap_solve(
    y: np.ndarray,
    op: SensingOperator,
    cfg: SolverConfig,
    denoiser: Denoiser | None = None,
    x0: np.ndarray | None = None,
    crop_to: tuple[int, int] | None = None,
) -> tuple[Image, SolveTrace]:
    """Alternate the data projection and the denoiser until converged.

    With ``accelerate`` (the default) the projection target accumulates the
    measurement residual each iteration, counteracting the denoiser's bias;
    the accumulator starts at the forward image of x0, so the first
    iteration is always the plain projection. Stops at max_iters or when the
    relative change of the estimate drops below stop_tol, whichever comes
    first. Returns the reassembled (cropped, optionally clamped) image and
    the convergence trace.
    """
    if denoiser is None:
        denoiser = _make_denoiser(cfg)
    y64 = np.asarray(y, dtype=np.float64)
    x = np.array(op.init_estimate(y64) if x0 is None else x0, dtype=np.float64)
    state = ReconState(x=x, v=np.zeros_like(x))
    y_eff = op.forward(state.x) if cfg.accelerate else y64
    trace = SolveTrace()
    for k in range(cfg.max_iters):
        state.eta = cfg.eta_at(k)
        if cfg.accelerate:
            y_eff = y_eff + (y64 - op.forward(state.x))
        state.v = op.projection_step(state.x, y_eff, state.eta, tolerant=cfg.tolerant)
        x_new = np.asarray(denoiser(state.v), dtype=np.float64)
        if not np.isfinite(x_new).all():
            raise NonFiniteState(f"non-finite iterate at iteration {k + 1}")
        state.residual_norm = float(np.linalg.norm(y64 - op.forward(x_new)))
        change = float(np.linalg.norm(x_new - state.x))
        rel_change = change / max(float(np.linalg.norm(state.x)), 1e-12)
        state.stage = k + 1
        trace.append(state.stage, state.residual_norm, change)
        state.x = x_new
        if rel_change < cfg.stop_tol:
            break
    return _finish(state.x, op, cfg, crop_to), trace


def admm_solve(
    y: np.ndarray,
    op: SensingOperator,
    cfg: SolverConfig,
    denoiser: Denoiser | None = None,
    x0: np.ndarray | None = None,
    crop_to: tuple[int, int] | None = None,
) -> tuple[Image, SolveTrace]:
    """Scaled-form ADMM: penalized projection, denoise, dual ascent.

    The x-update is the projection step with eta = rho evaluated at z - u;
    the returned image comes from the prior-consistent variable z.
    """
    if denoiser is None:
        denoiser = _make_denoiser(cfg)
    y64 = np.asarray(y, dtype=np.float64)
    x = np.array(op.init_estimate(y64) if x0 is None else x0, dtype=np.float64)
    z = x.copy()
    u = np.zeros_like(x)
    trace = SolveTrace()
    for k in range(cfg.max_iters):
        x = op.projection_step(z - u, y64, cfg.rho, tolerant=cfg.tolerant)
        z_new = np.asarray(denoiser(x + u), dtype=np.float64)
        if not np.isfinite(z_new).all():
            raise NonFiniteState(f"non-finite iterate at iteration {k + 1}")
        u = u + x - z_new
        residual = float(np.linalg.norm(y64 - op.forward(x)))
        change = float(np.linalg.norm(z_new - z))
        rel_change = change / max(float(np.linalg.norm(z)), 1e-12)
        trace.append(k + 1, residual, change)
        z = z_new
        if rel_change < cfg.stop_tol:
            break
    return _finish(z, op, cfg, crop_to), trace


def resolve_mask(measurement: Measurement, override: Mask | None = None) -> Mask:
    """Mask to decode with: explicit override, embedded bitmap, or seed."""
    if override is not None:
        return override
    if measurement.mask is not None:
        return measurement.mask
    spec = MaskSpec(
        measurement.original_height,
        measurement.original_width,
        density=measurement.mask_density,
        seed=measurement.mask_seed,
    )
    return generate(spec)


def decode_measurement(
    measurement: Measurement,
    cfg: SolverConfig,
    denoiser: Denoiser | None = None,
    mask: Mask | None = None,
) -> tuple[Image, SolveTrace]:
    """End-to-end decode: resolve the mask, build the operator, run the solver.

    The mask (original shape) is zero-padded to the measurement's padded
    extent before the operator is built, mirroring the encoder's convention.
    """
    m = resolve_mask(measurement, mask)
    bits = pad_to_grid(m.bits, measurement.grid)
    if bits.shape != (measurement.padded_height, measurement.padded_width):
        raise DimensionMismatch(
            (measurement.padded_height, measurement.padded_width), bits.shape, "mask"
        )
    op = SensingOperator.from_mask(Mask(bits), measurement.grid)
    solve = gap_solve if cfg.algorithm == "gap" else admm_solve
    return solve(
        measurement.data,
        op,
        cfg,
        denoiser=denoiser,
        crop_to=(measurement.original_height, measurement.original_width),
    )
