"""Native downscalers, Lanczos upscaling, and the external-downscaler import.

Downscaling by integer factor s maps output pixel j to source coordinate
(j + 0.5) * s - 0.5 and produces ceil(w/s) x ceil(h/s) output. The weighted
algorithms stretch their kernel support by s (anti-aliasing) unless
ResampleSpec.antialias is off; nearest-neighbour takes a single gathered
sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from . import _fast
from .errors import ExternalInputError
from .image import INTEGER, Image, load_image, real_to_uint8
from .kernels import BICUBIC, BILINEAR, Kernel, build_taps, lanczos_kernel, nearest_indices

NATIVE_ALGORITHMS = ("nearest", "bilinear", "bicubic", "lanczos", "rdip")
ALGORITHMS = NATIVE_ALGORITHMS + ("external",)


@dataclass(frozen=True)
class ResampleSpec:
    """Algorithm identifier plus every parameter a run needs to be replayed."""

    algorithm: str
    scale: int = 8
    lanczos_taps: int = 4
    rdip_lambda: float = 1.0
    rdip_epsilon: float = 1e-6
    antialias: bool = True
    external_dir: Path | None = None

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.scale < 1:
            raise ValueError(f"scale must be >= 1, got {self.scale}")
        if self.lanczos_taps not in (4, 6, 8):
            raise ValueError(f"lanczos taps must be 4, 6 or 8, got {self.lanczos_taps}")
        if self.rdip_lambda < 0:
            raise ValueError("rdip lambda must be nonnegative")
        if self.rdip_epsilon <= 0:
            raise ValueError("rdip epsilon must be positive")
        if self.algorithm == "external" and self.external_dir is None:
            raise ValueError("external algorithm needs external_dir")

    @property
    def label(self) -> str:
        """Column name used in reports; distinguishes non-default tap counts."""
        if self.algorithm == "lanczos" and self.lanczos_taps != 4:
            return f"lanczos{self.lanczos_taps}"
        return self.algorithm

    def config(self) -> dict:
        out = {"algorithm": self.algorithm, "scale": self.scale}
        if self.algorithm == "lanczos":
            out["lanczos_taps"] = self.lanczos_taps
        if self.algorithm == "rdip":
            out["rdip_lambda"] = self.rdip_lambda
            out["rdip_epsilon"] = self.rdip_epsilon
        if self.algorithm in ("bilinear", "bicubic", "lanczos"):
            out["antialias"] = self.antialias
        if self.external_dir is not None:
            out["external_dir"] = str(self.external_dir)
        return out


def out_dim(n: int, scale: int) -> int:
    return -(-n // scale)


def _separable(image: Image, kernel: Kernel, out_w, out_h, ratio, filterscale) -> Image:
    idx_x, wts_x = build_taps(image.width, out_w, ratio, kernel, filterscale)
    idx_y, wts_y = build_taps(image.height, out_h, ratio, kernel, filterscale)
    src = image.pixels.astype(np.float64)
    if image.sample_kind == INTEGER:
        src = src / 255.0
    planes = []
    for c in range(image.channels):
        tmp = _fast.resample_rows(src[:, :, c], idx_y, wts_y)
        planes.append(_fast.resample_cols(tmp, idx_x, wts_x))
    out = np.clip(np.stack(planes, axis=2), 0.0, 1.0)
    if image.sample_kind == INTEGER:
        return Image(real_to_uint8(out))
    return Image(out)


def downscale(image: Image, spec: ResampleSpec) -> Image:
    """Downscale by the integer factor in ``spec`` with its native algorithm."""
    s = spec.scale
    ow, oh = out_dim(image.width, s), out_dim(image.height, s)
    if spec.algorithm == "nearest":
        ix = nearest_indices(image.width, ow, s)
        iy = nearest_indices(image.height, oh, s)
        return Image(image.pixels[iy][:, ix].copy())
    if spec.algorithm == "rdip":
        return rdip_downscale(image, s, spec.rdip_lambda, spec.rdip_epsilon)
    if spec.algorithm == "bilinear":
        kernel = BILINEAR
    elif spec.algorithm == "bicubic":
        kernel = BICUBIC
    elif spec.algorithm == "lanczos":
        kernel = lanczos_kernel(spec.lanczos_taps)
    else:
        raise ValueError(f"{spec.algorithm!r} is not a native downscaler")
    filterscale = float(s) if spec.antialias else 1.0
    return _separable(image, kernel, ow, oh, float(s), filterscale)


def rdip_downscale(image: Image, scale: int, lam: float = 1.0, epsilon: float = 1e-6) -> Image:
    """Detail-weighted patch downscale.

    Each output pixel averages its s x s source patch with weights
    |I(p) - B|^lam + epsilon, where B is the patch mean; pixels deviating from
    their box-filtered surround contribute more. Multichannel images share one
    weight field computed from the channel-mean intensity.
    """
    if scale < 2:
        raise ValueError(f"rdip needs scale >= 2, got {scale}")
    if lam < 0 or epsilon <= 0:
        raise ValueError("rdip needs lambda >= 0 and epsilon > 0")
    src = image.pixels.astype(np.float64)
    if image.sample_kind == INTEGER:
        src = src / 255.0
    planes = np.ascontiguousarray(np.moveaxis(src, 2, 0))
    intensity = np.ascontiguousarray(src.mean(axis=2))
    out = _fast.rdip_reduce(planes, intensity, scale, float(lam), float(epsilon))
    out = np.clip(np.moveaxis(out, 0, 2), 0.0, 1.0)
    if image.sample_kind == INTEGER:
        return Image(real_to_uint8(out))
    return Image(np.ascontiguousarray(out))


def upscale_lanczos4(image: Image, scale: int) -> Image:
    """Upscale by an integer factor with the 4-tap Lanczos kernel."""
    if scale < 1:
        raise ValueError(f"scale must be >= 1, got {scale}")
    kernel = lanczos_kernel(4)
    return _separable(
        image, kernel, image.width * scale, image.height * scale, 1.0 / scale, 1.0
    )


def match_external_files(directory, manifest) -> dict[str, Path]:
    """Map every manifest record id to ``<directory>/<id>.png``.

    Raises if any stem is missing, naming the absent files.
    """
    directory = Path(directory)
    mapping: dict[str, Path] = {}
    missing = []
    for record in manifest.records:
        candidate = directory / f"{record.id}.png"
        if candidate.is_file():
            mapping[record.id] = candidate
        else:
            missing.append(record.id)
    if missing:
        shown = ", ".join(missing[:5])
        more = f" (+{len(missing) - 5} more)" if len(missing) > 5 else ""
        raise ExternalInputError(f"missing externally downscaled files for: {shown}{more}")
    return mapping


def import_external(directory, manifest) -> Iterator[tuple]:
    """Yield (record, downscaled image) pairs from a directory of
    pre-downscaled files named ``<id>.png``."""
    mapping = match_external_files(directory, manifest)
    for record in manifest.records:
        yield record, load_image(mapping[record.id])


def external_dims_note(orig_w, orig_h, got_w, got_h, scale) -> str | None:
    """Warning text when an imported image does not match ceil(orig/scale)."""
    want_w, want_h = out_dim(orig_w, scale), out_dim(orig_h, scale)
    if (got_w, got_h) != (want_w, want_h):
        return f"expected {want_w}x{want_h} for scale {scale}, got {got_w}x{got_h}"
    return None
