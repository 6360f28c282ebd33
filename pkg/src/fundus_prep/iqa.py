"""Full-reference quality metrics: MSE, PSNR, and sliding-window SSIM.

All metrics work on the 8-bit scale; real-sample images are multiplied by 255
(without rounding) before comparison. MSE pools every channel; SSIM scores
channels independently and averages the per-channel means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _fast
from .image import Image

PSNR_INF = math.inf


@dataclass(frozen=True)
class SsimParams:
    """Uniform (unweighted) window SSIM configuration.

    ``dynamic_range`` is the peak-to-peak sample range L used in the
    stabilizers c1 = (k1 L)^2 and c2 = (k2 L)^2; 255 for 8-bit images.
    """

    window: int = 8
    stride: int = 1
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 255.0

    def __post_init__(self):
        if self.window < 2:
            raise ValueError("window must be >= 2")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.dynamic_range <= 0:
            raise ValueError("dynamic_range must be positive")

    @property
    def c1(self) -> float:
        return (self.k1 * self.dynamic_range) ** 2

    @property
    def c2(self) -> float:
        return (self.k2 * self.dynamic_range) ** 2

    def config(self) -> dict:
        return {
            "window": self.window,
            "stride": self.stride,
            "k1": self.k1,
            "k2": self.k2,
            "dynamic_range": self.dynamic_range,
        }


def _planes_8bit(image: Image) -> np.ndarray:
    arr = image.pixels.astype(np.float64)
    if image.sample_kind != "integer":
        arr = arr * 255.0
    return arr


def _check_same_geometry(x: Image, y: Image):
    if (x.width, x.height, x.channels) != (y.width, y.height, y.channels):
        raise ValueError(
            f"image geometry mismatch: {x.width}x{x.height}x{x.channels} "
            f"vs {y.width}x{y.height}x{y.channels}"
        )


def mse(x: Image, y: Image) -> float:
    """Mean squared error over all samples, channels pooled, 8-bit units."""
    _check_same_geometry(x, y)
    diff = _planes_8bit(x) - _planes_8bit(y)
    return float(np.mean(diff * diff))


def psnr(x: Image, y: Image, peak: float = 255.0) -> float:
    """Peak signal-to-noise ratio in dB; identical images give +inf."""
    if peak <= 0:
        raise ValueError("peak must be positive")
    err = mse(x, y)
    if err == 0.0:
        return PSNR_INF
    return 10.0 * math.log10(peak * peak / err)


def ssim(x: Image, y: Image, params: SsimParams | None = None) -> float:
    """Mean structural similarity over all window positions.

    Windows are uniform ``window`` x ``window`` patches advanced by ``stride``
    along both axes; statistics are population moments of the windowed
    samples. Result lies in [-1, 1], with 1 exactly for identical images.
    """
    params = params or SsimParams()
    _check_same_geometry(x, y)
    if x.width < params.window or x.height < params.window:
        raise ValueError(
            f"image {x.width}x{x.height} smaller than SSIM window {params.window}"
        )
    xa, ya = _planes_8bit(x), _planes_8bit(y)
    scores = [
        _fast.ssim_plane(
            np.ascontiguousarray(xa[:, :, c]),
            np.ascontiguousarray(ya[:, :, c]),
            params.window,
            params.stride,
            params.c1,
            params.c2,
        )
        for c in range(x.channels)
    ]
    return float(np.mean(scores))
