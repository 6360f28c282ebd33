import numpy as np
import pytest

from fundus_prep.image import Image


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_image(rng, w, h, channels=1):
    return Image(rng.integers(0, 256, size=(h, w, channels), dtype=np.uint8))


def gaussian_smooth(arr, sigma):
    """Separable Gaussian blur via numpy convolve (test helper, not library code)."""
    radius = int(3 * sigma)
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(t * t) / (2.0 * sigma * sigma))
    k /= k.sum()
    padded = np.pad(arr, radius, mode="edge")
    rows = np.apply_along_axis(lambda r: np.convolve(r, k, mode="valid"), 1, padded)
    return np.apply_along_axis(lambda c: np.convolve(c, k, mode="valid"), 0, rows)


def bandlimited_images(seed, count, size=64, sigma=5.0):
    """Gaussian-smoothed noise rasters, rescaled to a healthy 8-bit range."""
    gen = np.random.default_rng(seed)
    images = []
    for _ in range(count):
        noise = gen.normal(size=(size, size))
        smooth = gaussian_smooth(noise, sigma)
        lo, hi = smooth.min(), smooth.max()
        scaled = (smooth - lo) / (hi - lo) * 200.0 + 25.0
        images.append(Image(scaled.astype(np.uint8)[:, :, None]))
    return images
