"""Image-quality metrics on normalized single-channel images.

PSNR uses dynamic range 1 and is capped at 100 dB (the documented value for
identical inputs). SSIM follows the reference parameterization: 11x11
Gaussian window with sigma 1.5, K1=0.01, K2=0.03, L=1, local statistics over
fully valid windows only. Both are symmetric in their arguments.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.signal import convolve2d

from .errors import DimensionMismatch, TooSmall
from .types import Image

PSNR_CAP_DB = 100.0

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


def _as_array(img) -> np.ndarray:
    data = img.data if isinstance(img, Image) else np.asarray(img)
    return data.astype(np.float64)


def _check_shapes(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(a.shape, b.shape, "image")


def psnr(reference, test) -> float:
    """Peak signal-to-noise ratio in dB for unit dynamic range."""
    a, b = _as_array(reference), _as_array(test)
    _check_shapes(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(1.0 / mse))


def _gaussian_window() -> np.ndarray:
    half = _SSIM_WINDOW // 2
    coords = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(coords**2) / (2.0 * _SSIM_SIGMA**2))
    win = np.outer(g, g)
    return win / win.sum()


def ssim(reference, test) -> float:
    """Mean local structural similarity over all fully valid windows."""
    a, b = _as_array(reference), _as_array(test)
    _check_shapes(a, b)
    if min(a.shape) < _SSIM_WINDOW:
        raise TooSmall(f"image {a.shape} smaller than {_SSIM_WINDOW}x{_SSIM_WINDOW} window")

    win = _gaussian_window()
    c1 = _SSIM_K1**2
    c2 = _SSIM_K2**2

    mu_a = convolve2d(a, win, mode="valid")
    mu_b = convolve2d(b, win, mode="valid")
    var_a = convolve2d(a * a, win, mode="valid") - mu_a**2
    var_b = convolve2d(b * b, win, mode="valid") - mu_b**2
    cov = convolve2d(a * b, win, mode="valid") - mu_a * mu_b

    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))
