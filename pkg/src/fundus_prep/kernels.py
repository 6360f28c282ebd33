"""Resampling kernels and tap-table construction.

Coordinate convention used everywhere: output pixel ``j`` samples the source
at ``(j + 0.5) * ratio - 0.5`` where ``ratio = n_src / n_dst``. Half-pixel
centering keeps resampling free of drift and makes mirrored inputs produce
mirrored outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


def bilinear_weight(t):
    """Triangle kernel, support 1."""
    return np.maximum(0.0, 1.0 - np.abs(t))


def bicubic_weight(t, a: float = -0.5):
    """Piecewise cubic convolution kernel (Catmull-Rom family), support 2."""
    at = np.abs(np.asarray(t, dtype=np.float64))
    inner = ((a + 2.0) * at - (a + 3.0)) * at * at + 1.0
    outer = a * (((at - 5.0) * at + 8.0) * at - 4.0)
    return np.where(at <= 1.0, inner, np.where(at < 2.0, outer, 0.0))


def lanczos_weight(t, a: int = 2):
    """Windowed sinc: sinc(t) * sinc(t/a) inside |t| < a, zero outside."""
    t = np.asarray(t, dtype=np.float64)
    return np.where(np.abs(t) < a, np.sinc(t) * np.sinc(t / a), 0.0)


@dataclass(frozen=True)
class Kernel:
    """A symmetric weight function with finite support radius."""

    name: str
    support: float
    fn: Callable[[np.ndarray], np.ndarray]

    def __call__(self, t):
        return self.fn(t)


BILINEAR = Kernel("bilinear", 1.0, bilinear_weight)
BICUBIC = Kernel("bicubic", 2.0, bicubic_weight)


def lanczos_kernel(taps: int) -> Kernel:
    """Lanczos kernel for a 4, 6 or 8 tap window (support = taps / 2)."""
    if taps not in (4, 6, 8):
        raise ValueError(f"lanczos taps must be 4, 6 or 8, got {taps}")
    a = taps // 2
    return Kernel(f"lanczos{taps}", float(a), lambda t: lanczos_weight(t, a))


def kernel_weight(kernel: str, t, *, lanczos_taps: int = 4):
    """Evaluate a named kernel at signed offset(s) ``t``.

    ``kernel`` is one of ``bilinear``, ``bicubic``, ``lanczos``. Total over all
    real ``t``; returns 0 outside the support radius.
    """
    if kernel == "bilinear":
        w = bilinear_weight(np.asarray(t, dtype=np.float64))
    elif kernel == "bicubic":
        w = bicubic_weight(t)
    elif kernel == "lanczos":
        w = lanczos_weight(t, lanczos_taps // 2)
    else:
        raise ValueError(f"unknown kernel {kernel!r}")
    if np.isscalar(t):
        return float(w)
    return w


def build_taps(n_src: int, n_dst: int, ratio: float, kernel: Kernel, filterscale: float):
    """Tap indices and normalized weights for one resampling axis.

    ``filterscale`` stretches the kernel support: equal to the scale factor
    for anti-aliased downscaling, 1.0 for plain interpolation. Indices outside
    the source are clamped to the border (edge replication). Weights are
    normalized to sum to 1 per output sample, so constant inputs survive
    exactly up to rounding.
    """
    centers = (np.arange(n_dst, dtype=np.float64) + 0.5) * ratio - 0.5
    radius = kernel.support * filterscale
    count = int(math.floor(2.0 * radius)) + 1
    base = np.floor(centers - radius).astype(np.int64) + 1
    pos = base[:, np.newaxis] + np.arange(count, dtype=np.int64)[np.newaxis, :]
    wts = kernel((pos - centers[:, np.newaxis]) / filterscale)
    wts = wts / wts.sum(axis=1, keepdims=True)
    idx = np.clip(pos, 0, n_src - 1)
    return idx, wts


def nearest_indices(n_src: int, n_dst: int, scale: int) -> np.ndarray:
    """Source index per output pixel for nearest-neighbour sampling.

    Exact half-way ties (every even scale produces them) resolve toward the
    image center so that mirroring commutes with downscaling; a tie sitting
    exactly on the center takes the lower index.
    """
    centers = (np.arange(n_dst, dtype=np.float64) + 0.5) * scale - 0.5
    lo = np.floor(centers)
    frac = centers - lo
    mid = (n_src - 1) / 2.0
    idx = np.where(
        frac > 0.5,
        lo + 1.0,
        np.where(frac < 0.5, lo, np.where(centers < mid, lo + 1.0, lo)),
    )
    return np.clip(idx.astype(np.int64), 0, n_src - 1)
