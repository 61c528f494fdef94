"""Block-modulated imaging codec toolkit.

Single-exposure optical-encoding simulation (mask, modulate, block-sum),
bit-exact measurement containers, and plug-and-play iterative decoders built
on the diagonal-Gram linear projection.
"""

from .chart import calibration_chart, center_crop
from .encoder import bench_encode, encode, modulate
from .maskgen import MaskSpec, coverage_per_position, generate
from .metrics import psnr, ssim
from .sensing import SensingOperator
from .solvers import (
    IdentityDenoiser,
    SolveTrace,
    SolverConfig,
    TvDenoiser,
    admm_solve,
    decode_measurement,
    gap_solve,
    tv_denoise,
)
from .types import BlockGrid, Image, Mask, Measurement, ReconState, validate_pair

__version__ = "0.1.0"

__all__ = [
    "BlockGrid",
    "Image",
    "IdentityDenoiser",
    "Mask",
    "MaskSpec",
    "Measurement",
    "ReconState",
    "SensingOperator",
    "SolveTrace",
    "SolverConfig",
    "TvDenoiser",
    "admm_solve",
    "bench_encode",
    "calibration_chart",
    "center_crop",
    "coverage_per_position",
    "decode_measurement",
    "encode",
    "gap_solve",
    "generate",
    "modulate",
    "psnr",
    "ssim",
    "tv_denoise",
    "validate_pair",
]
