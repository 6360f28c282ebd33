"""Image container, PNG/JPEG codec, border crop, symmetric padding, tiling."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as _PILImage
from PIL import UnidentifiedImageError

from .errors import AllBackgroundError, ImageIOError, OversizeError, SampleKindError

INTEGER = "integer"
REAL = "real"

# Modes coerced on load; 16/32-bit sample depths are out of scope.
_MODE_COERCE = {"1": "L", "LA": "L", "P": "RGB", "RGBA": "RGB", "CMYK": "RGB", "YCbCr": "RGB"}


@dataclass(frozen=True, eq=False)
class Image:
    """Dense raster of shape (height, width, channels) with 1 or 3 channels.

    Samples are either uint8 in [0, 255] or float64 in [0.0, 1.0]. The pixel
    buffer is adopted and marked read-only; pass a copy if the caller still
    needs to write to it.
    """

    pixels: np.ndarray

    def __post_init__(self):
        px = self.pixels
        if px.ndim == 2:
            px = px[:, :, np.newaxis]
        if px.ndim != 3 or px.shape[2] not in (1, 3):
            raise ValueError(f"expected (h, w, c) with c in {{1, 3}}, got shape {px.shape}")
        if px.shape[0] < 1 or px.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        px = np.ascontiguousarray(px)
        if px.dtype == np.float64:
            if float(px.min()) < 0.0 or float(px.max()) > 1.0:
                raise ValueError("real samples must lie in [0.0, 1.0]")
        elif px.dtype != np.uint8:
            raise ValueError(f"unsupported dtype {px.dtype}; use uint8 or float64")
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def sample_kind(self) -> str:
        return INTEGER if self.pixels.dtype == np.uint8 else REAL

    def to_real(self) -> "Image":
        """8-bit samples mapped to [0, 1] via division by 255."""
        if self.sample_kind == REAL:
            return self
        return Image(self.pixels.astype(np.float64) / 255.0)

    def to_integer(self) -> "Image":
        """Real samples mapped to uint8, rounding halves away from zero."""
        if self.sample_kind == INTEGER:
            return self
        return Image(real_to_uint8(self.pixels))


def real_to_uint8(arr: np.ndarray) -> np.ndarray:
    """Scale by 255, round halves away from zero, clamp to [0, 255]."""
    return np.clip(np.floor(arr * 255.0 + 0.5), 0.0, 255.0).astype(np.uint8)


@dataclass(frozen=True)
class CropBox:
    """Half-open pixel rectangle: left/top inclusive, right/bottom exclusive."""

    left: int
    top: int
    right: int
    bottom: int

    def __post_init__(self):
        if not (0 <= self.left < self.right and 0 <= self.top < self.bottom):
            raise ValueError(f"degenerate crop box {self}")

    @property
    def width(self) -> int:
        return self.right - self.left

    @property
    def height(self) -> int:
        return self.bottom - self.top


@dataclass(frozen=True)
class PadResult:
    """Padded image plus the offsets where the original was placed."""

    image: Image
    offset_x: int
    offset_y: int


def load_image(path) -> Image:
    """Decode a PNG or JPEG file into an 8-bit image.

    Color sources become 3-channel, grayscale sources 1-channel. Palette and
    alpha modes are flattened to plain RGB/L.
    """
    path = Path(path)
    try:
        with _PILImage.open(path) as im:
            if im.format not in ("PNG", "JPEG"):
                raise ImageIOError(f"{path}: unsupported format {im.format!r} (PNG or JPEG only)")
            mode = im.mode
            if mode.startswith("I") or mode == "F":
                raise ImageIOError(f"{path}: unsupported sample depth (mode {mode!r})")
            if mode in _MODE_COERCE:
                im = im.convert(_MODE_COERCE[mode])
            elif mode not in ("L", "RGB"):
                im = im.convert("RGB")
            arr = np.asarray(im, dtype=np.uint8)
    except FileNotFoundError as exc:
        raise ImageIOError(f"{path}: {exc.strerror or 'file not found'}") from exc
    except UnidentifiedImageError as exc:
        raise ImageIOError(f"{path}: not a decodable image ({exc})") from exc
    except (OSError, SyntaxError) as exc:
        raise ImageIOError(f"{path}: corrupt or truncated stream ({exc})") from exc
    return Image(arr)


def save_image(image: Image, path, format: str | None = None) -> None:
    """Encode an 8-bit image as PNG or JPEG (inferred from the suffix)."""
    path = Path(path)
    if image.sample_kind != INTEGER:
        raise SampleKindError(
            f"{path}: real-sample image must be converted with to_integer() before saving"
        )
    if format is None:
        format = {".png": "png", ".jpg": "jpeg", ".jpeg": "jpeg"}.get(path.suffix.lower())
        if format is None:
            raise ImageIOError(f"{path}: cannot infer format from suffix; pass format=")
    if format not in ("png", "jpeg"):
        raise ImageIOError(f"{path}: unsupported format {format!r}")
    arr = image.pixels
    if image.channels == 1:
        arr = arr[:, :, 0]
    try:
        _PILImage.fromarray(arr).save(path, format=format.upper())
    except (OSError, ValueError) as exc:
        raise ImageIOError(f"{path}: {exc}") from exc


def crop_borders(image: Image, threshold: float = 10.0):
    """Trim background rows/columns from every border.

    A row or column is background when its channel-averaged mean intensity is
    below ``threshold`` (8-bit units). Returns the cropped image and the
    bounding box of everything at or above the threshold.
    """
    if image.sample_kind != INTEGER:
        raise SampleKindError("crop_borders expects an 8-bit image")
    intensity = image.pixels.mean(axis=2, dtype=np.float64)
    row_means = intensity.mean(axis=1)
    col_means = intensity.mean(axis=0)
    rows = np.flatnonzero(row_means >= threshold)
    cols = np.flatnonzero(col_means >= threshold)
    if rows.size == 0 or cols.size == 0:
        raise AllBackgroundError(
            f"no row or column reaches threshold {threshold} "
            f"({image.width}x{image.height} image is entirely background)"
        )
    box = CropBox(int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1)
    cropped = Image(image.pixels[box.top : box.bottom, box.left : box.right].copy())
    return cropped, box


def pad_to(image: Image, target_w: int, target_h: int, fill=0) -> PadResult:
    """Center the image on a target canvas filled with ``fill``.

    Padding splits evenly on both sides; an odd remainder puts the extra pixel
    on the right/bottom.
    """
    if image.width > target_w or image.height > target_h:
        raise OversizeError(image.width, image.height, target_w, target_h)
    if image.sample_kind == INTEGER:
        canvas = np.full((target_h, target_w, image.channels), fill, dtype=np.uint8)
    else:
        canvas = np.full((target_h, target_w, image.channels), float(fill), dtype=np.float64)
    off_x = (target_w - image.width) // 2
    off_y = (target_h - image.height) // 2
    canvas[off_y : off_y + image.height, off_x : off_x + image.width] = image.pixels
    return PadResult(Image(canvas), off_x, off_y)


def center_crop(image: Image, target_w: int, target_h: int) -> Image:
    """Crop a centered window; an odd remainder trims the extra pixel on the
    right/bottom, mirroring the padding tie-break."""
    if image.width < target_w or image.height < target_h:
        raise ValueError(
            f"cannot center-crop {image.width}x{image.height} to {target_w}x{target_h}"
        )
    x0 = (image.width - target_w) // 2
    y0 = (image.height - target_h) // 2
    return Image(image.pixels[y0 : y0 + target_h, x0 : x0 + target_w].copy())


def tile_quadrants(image: Image):
    """Split an even-sized image into (top-left, top-right, bottom-left,
    bottom-right) quarters."""
    if image.width % 2 or image.height % 2:
        raise ValueError(f"quadrant tiling needs even dimensions, got {image.width}x{image.height}")
    hh, hw = image.height // 2, image.width // 2
    px = image.pixels
    return (
        Image(px[:hh, :hw].copy()),
        Image(px[:hh, hw:].copy()),
        Image(px[hh:, :hw].copy()),
        Image(px[hh:, hw:].copy()),
    )


def stitch_quadrants(tl: Image, tr: Image, bl: Image, br: Image) -> Image:
    """Inverse of tile_quadrants."""
    top = np.concatenate([tl.pixels, tr.pixels], axis=1)
    bottom = np.concatenate([bl.pixels, br.pixels], axis=1)
    return Image(np.concatenate([top, bottom], axis=0))
