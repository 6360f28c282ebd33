"""Hot numeric kernels with numba and pure-numpy twins.

Every kernel exists twice: a ``*_nb`` version compiled with ``numba.njit`` and
a vectorized ``*_np`` version. The public wrappers pick the numba path when it
is available and the ``FUNDUS_PREP_NO_NUMBA`` environment variable is unset.
Both paths accumulate in the same order, so results agree to the last few ulps
and are identical after 8-bit rounding. ``benchmarks/bench_kernels.py``
compares the two paths.
"""

from __future__ import annotations

import os

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

NO_NUMBA_ENV = "FUNDUS_PREP_NO_NUMBA"

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


def numba_active() -> bool:
    """True when the compiled kernels are selected for dispatch."""
    if not NUMBA_AVAILABLE:
        return False
    return os.environ.get(NO_NUMBA_ENV, "").lower() not in ("1", "true", "yes")


# ---------------------------------------------------------------------------
# Separable resampling: weighted gather along one axis.
# src is (h, w) float64; idx/wts are (n_out, k) tap tables from kernels.build_taps.


def _resample_cols_np(src, idx, wts):
    out = np.zeros((src.shape[0], idx.shape[0]))
    for k in range(idx.shape[1]):
        out += src[:, idx[:, k]] * wts[:, k]
    return out


def _resample_rows_np(src, idx, wts):
    out = np.zeros((idx.shape[0], src.shape[1]))
    for k in range(idx.shape[1]):
        out += src[idx[:, k], :] * wts[:, k][:, np.newaxis]
    return out


@njit(cache=True)
def _resample_cols_nb(src, idx, wts):  # pragma: no cover - compiled
    h = src.shape[0]
    n, taps = idx.shape
    out = np.zeros((h, n))
    for i in range(h):
        for j in range(n):
            acc = 0.0
            for k in range(taps):
                acc += src[i, idx[j, k]] * wts[j, k]
            out[i, j] = acc
    return out


@njit(cache=True)
def _resample_rows_nb(src, idx, wts):  # pragma: no cover - compiled
    w = src.shape[1]
    n, taps = idx.shape
    out = np.zeros((n, w))
    for i in range(n):
        for j in range(w):
            acc = 0.0
            for k in range(taps):
                acc += src[idx[i, k], j] * wts[i, k]
            out[i, j] = acc
    return out


def resample_cols(src, idx, wts):
    if numba_active():
        return _resample_cols_nb(src, idx, wts)
    return _resample_cols_np(src, idx, wts)


def resample_rows(src, idx, wts):
    if numba_active():
        return _resample_rows_nb(src, idx, wts)
    return _resample_rows_np(src, idx, wts)


# ---------------------------------------------------------------------------
# Detail-weighted patch downscale (rdip). planes is (c, h, w) float64,
# intensity the channel mean; edge patches are truncated, never padded.


def _rdip_np(planes, intensity, scale, lam, eps):
    h, w = intensity.shape
    by = np.arange(0, h, scale)
    bx = np.arange(0, w, scale)
    cnt_y = np.diff(np.append(by, h))
    cnt_x = np.diff(np.append(bx, w))

    def patch_sum(a):
        return np.add.reduceat(np.add.reduceat(a, by, axis=0), bx, axis=1)

    box = patch_sum(intensity) / np.outer(cnt_y, cnt_x)
    box_up = np.repeat(np.repeat(box, cnt_y, axis=0), cnt_x, axis=1)
    weight = np.abs(intensity - box_up) ** lam + eps
    den = patch_sum(weight)
    out = np.empty((planes.shape[0], by.size, bx.size))
    for c in range(planes.shape[0]):
        out[c] = patch_sum(weight * planes[c]) / den
    return out


@njit(cache=True)
def _rdip_nb(planes, intensity, scale, lam, eps):  # pragma: no cover - compiled
    nc = planes.shape[0]
    h, w = intensity.shape
    oh = (h + scale - 1) // scale
    ow = (w + scale - 1) // scale
    out = np.empty((nc, oh, ow))
    for py in range(oh):
        y0 = py * scale
        y1 = min(y0 + scale, h)
        for px in range(ow):
            x0 = px * scale
            x1 = min(x0 + scale, w)
            area = (y1 - y0) * (x1 - x0)
            box = 0.0
            for y in range(y0, y1):
                for x in range(x0, x1):
                    box += intensity[y, x]
            box /= area
            den = 0.0
            for y in range(y0, y1):
                for x in range(x0, x1):
                    den += abs(intensity[y, x] - box) ** lam + eps
            for c in range(nc):
                num = 0.0
                for y in range(y0, y1):
                    for x in range(x0, x1):
                        num += (abs(intensity[y, x] - box) ** lam + eps) * planes[c, y, x]
                out[c, py, px] = num / den
    return out


def rdip_reduce(planes, intensity, scale, lam, eps):
    if numba_active():
        return _rdip_nb(planes, intensity, scale, lam, eps)
    return _rdip_np(planes, intensity, scale, lam, eps)


# ---------------------------------------------------------------------------
# Mean structural similarity over uniform sliding windows, one channel.
# x/y are (h, w) float64 on the 8-bit scale.


def _ssim_plane_np(x, y, window, stride, c1, c2):
    shp = (window, window)
    xw = sliding_window_view(x, shp)[::stride, ::stride]
    yw = sliding_window_view(y, shp)[::stride, ::stride]
    xxw = sliding_window_view(x * x, shp)[::stride, ::stride]
    yyw = sliding_window_view(y * y, shp)[::stride, ::stride]
    xyw = sliding_window_view(x * y, shp)[::stride, ::stride]

    mx = xw.mean(axis=(-2, -1))
    my = yw.mean(axis=(-2, -1))
    vx = xxw.mean(axis=(-2, -1)) - mx * mx
    vy = yyw.mean(axis=(-2, -1)) - my * my
    cov = xyw.mean(axis=(-2, -1)) - mx * my
    score = ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / (
        (mx * mx + my * my + c1) * (vx + vy + c2)
    )
    return float(score.mean())


@njit(cache=True)
def _ssim_plane_nb(x, y, window, stride, c1, c2):  # pragma: no cover - compiled
    h, w = x.shape
    n = window * window
    total = 0.0
    count = 0
    for y0 in range(0, h - window + 1, stride):
        for x0 in range(0, w - window + 1, stride):
            sx = 0.0
            sy = 0.0
            sxx = 0.0
            syy = 0.0
            sxy = 0.0
            for i in range(y0, y0 + window):
                for j in range(x0, x0 + window):
                    a = x[i, j]
                    b = y[i, j]
                    sx += a
                    sy += b
                    sxx += a * a
                    syy += b * b
                    sxy += a * b
            mx = sx / n
            my = sy / n
            vx = sxx / n - mx * mx
            vy = syy / n - my * my
            cov = sxy / n - mx * my
            total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / (
                (mx * mx + my * my + c1) * (vx + vy + c2)
            )
            count += 1
    return total / count


def ssim_plane(x, y, window, stride, c1, c2):
    if numba_active():
        return _ssim_plane_nb(x, y, window, stride, c1, c2)
    return _ssim_plane_np(x, y, window, stride, c1, c2)
