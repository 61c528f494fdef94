"""Deterministic synthetic test chart.

A fixed composite of a circular zone pattern, a diagonal gradient, and a
checkerboard: smooth regions, strong edges, and rings in every crop. Used by
the regression fixtures and handy for demos; no randomness involved.
"""

from __future__ import annotations

import numpy as np

from .types import Image


def calibration_chart(size: int = 256) -> Image:
    """Grayscale chart of the given square size, values in [0, 1]."""
    if size < 2:
        raise ValueError(f"chart size must be >= 2, got {size}")
    coords = np.arange(size, dtype=np.float64)
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    center = (size - 1) / 2.0
    r2 = ((xx - center) ** 2 + (yy - center) ** 2) / center**2
    zone = 0.5 + 0.5 * np.cos(np.pi * 12.0 * r2)
    gradient = (xx + yy) / (2.0 * (size - 1))
    cell = max(size // 16, 1)
    checker = ((xx // cell + yy // cell) % 2).astype(np.float64)
    chart = 0.45 * zone + 0.35 * gradient + 0.20 * checker
    return Image(np.clip(chart, 0.0, 1.0))


def center_crop(image: Image, size: int) -> Image:
    """Central size x size window of an image."""
    if size > image.height or size > image.width:
        raise ValueError(f"crop {size} exceeds image {image.height}x{image.width}")
    top = (image.height - size) // 2
    left = (image.width - size) // 2
    return Image(image.data[top : top + size, left : left + size])
