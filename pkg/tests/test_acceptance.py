"""Acceptance suite: one test per shipped guarantee, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the summary lines.

Two assertions in here are expected to fail and are kept failing on purpose;
each checks a published reference figure whose own arithmetic is internally
inconsistent, and this suite does not bend its arithmetic to match:

* metric-reproduction: the bilinear-run reference reports 81.2% sensitivity,
  but its recorded counts give 3216/3934 = 81.75%, outside the 0.3pp gate.
* amalgamation-total: the reference grand total 35732 disagrees with the sum
  of the per-class counts it is printed beside (35642; the 35216 subtotal is
  a transposition of 35126).
"""

import functools
import math

import numpy as np
import pytest

from fundus_prep.clf_metrics import confusion, metrics
from fundus_prep.dataset import (
    DatasetRecord,
    Manifest,
    amalgamate,
    split_sizes,
    stratified_split,
    write_manifest,
)
from fundus_prep.harness import roundtrip_one
from fundus_prep.image import Image, crop_borders, pad_to, stitch_quadrants, tile_quadrants
from fundus_prep.iqa import mse, psnr, ssim
from fundus_prep.resample import ResampleSpec, downscale, out_dim, upscale_lanczos4

from conftest import bandlimited_images
from oracles import (
    ref_box_downscale,
    ref_downscale,
    ref_nearest_downscale,
    ref_rdip,
    ref_ssim,
)

DOWNSCALERS = ("nearest", "bilinear", "bicubic", "lanczos", "rdip")


def criterion(name):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except AssertionError:
                print(f"\nACCEPTANCE {name}: FAIL")
                raise
            print(f"\nACCEPTANCE {name}: PASS")

        return wrapper

    return decorate


# --- metric reproduction ---------------------------------------------------------


def _predictions_for(tp, tn, fp, fn):
    # cell convention: fp = actual positive predicted negative,
    # fn = actual negative predicted positive
    actual = [1] * tp + [0] * tn + [1] * fp + [0] * fn
    predicted = [1] * tp + [0] * tn + [0] * fp + [1] * fn
    return actual, predicted


REFERENCE_RUNS = {
    # counts -> reported rounded percentages
    "bilinear": ((3216, 3112, 564, 718), (83.15, 81.2, 84.6)),
    "learned": ((3298, 3194, 454, 664), (85.2, 83.4, 87.6)),
}


@criterion("metric-reproduction")
def test_metric_reproduction():
    violations = []
    for run, ((tp, tn, fp, fn), reported) in REFERENCE_RUNS.items():
        binary, _ = confusion(*_predictions_for(tp, tn, fp, fn))
        assert (binary.tp, binary.tn, binary.fp, binary.fn) == (tp, tn, fp, fn)
        m = metrics(binary)
        computed = (m.accuracy * 100, m.sensitivity * 100, m.specificity * 100)
        for name, got, want in zip(("accuracy", "sensitivity", "specificity"), computed, reported):
            if abs(got - want) > 0.3:
                violations.append(f"{run} {name}: computed {got:.4f}% vs reported {want}%")
    assert not violations, "; ".join(violations)


# --- partition of unity ----------------------------------------------------------


@criterion("partition-of-unity")
def test_partition_of_unity():
    gen = np.random.default_rng(1001)

    def log_uniform_size():
        return int(round(math.exp(gen.uniform(math.log(8), math.log(512)))))

    for _ in range(100):
        w, h = log_uniform_size(), log_uniform_size()
        channels = 3 if max(w, h) <= 64 else 1
        value = int(gen.integers(0, 256))
        img = Image(np.full((h, w, channels), value, dtype=np.uint8))
        for algo in DOWNSCALERS:
            for scale in (2, 4, 8):
                out = downscale(img, ResampleSpec(algo, scale=scale))
                assert out.pixels.shape == (out_dim(h, scale), out_dim(w, scale), channels)
                assert (out.pixels == value).all(), (algo, scale, w, h, value)
        up = upscale_lanczos4(img, 8)
        assert up.pixels.shape == (h * 8, w * 8, channels)
        assert (up.pixels == value).all(), ("upscale", w, h, value)


# --- oracle equivalence ----------------------------------------------------------


@criterion("oracle-equivalence")
def test_oracle_equivalence():
    gen = np.random.default_rng(2002)
    for _ in range(50):
        w, h = int(gen.integers(2, 17)), int(gen.integers(2, 17))
        arr = gen.integers(0, 256, (h, w, 1), dtype=np.uint8).astype(np.uint8)
        img = Image(arr)
        for scale in (2, 4):
            for algo in DOWNSCALERS:
                got = downscale(img, ResampleSpec(algo, scale=scale)).pixels
                if algo == "nearest":
                    want = ref_nearest_downscale(arr, scale)
                elif algo == "rdip":
                    want = ref_rdip(arr, scale, 1.0, 1e-6)
                else:
                    want = ref_downscale(arr, algo, scale)
                diff = np.abs(got.astype(int) - want.astype(int)).max()
                assert diff <= 1, (algo, scale, w, h, diff)

    for _ in range(20):
        a = gen.integers(0, 256, (16, 16, 1), dtype=np.uint8).astype(np.uint8)
        b = gen.integers(0, 256, (16, 16, 1), dtype=np.uint8).astype(np.uint8)
        got = ssim(Image(a), Image(b))
        assert got == pytest.approx(ref_ssim(a, b), abs=1e-9)


# --- IQA identities --------------------------------------------------------------


@criterion("iqa-identities")
def test_iqa_identities():
    gen = np.random.default_rng(3003)
    for _ in range(20):
        w, h = int(gen.integers(8, 40)), int(gen.integers(8, 40))
        img = Image(gen.integers(0, 256, (h, w, 1), dtype=np.uint8).astype(np.uint8))
        assert math.isinf(psnr(img, img))
        assert ssim(img, img) == 1.0

    base = gen.integers(0, 255, (24, 24, 1), dtype=np.uint8).astype(np.uint8)
    offset = Image((base + 1).astype(np.uint8))
    assert mse(Image(base), offset) == 1.0
    assert psnr(Image(base), offset) == pytest.approx(48.1308, abs=1e-3)


# --- qualitative ordering --------------------------------------------------------


@criterion("qualitative-psnr-ordering")
def test_qualitative_psnr_ordering():
    # Gaussian-smoothed noise, kernel radius 18 px (sigma 6): band-limited
    # enough that anti-aliased kernels are unambiguously ahead
    images = bandlimited_images(seed=404, count=24, size=64, sigma=6.0)
    means = {}
    for algo in ("nearest", "bilinear", "bicubic"):
        vals = [roundtrip_one(img, ResampleSpec(algo, scale=8))[0] for img in images]
        means[algo] = sum(vals) / len(vals)
    assert means["bicubic"] >= means["bilinear"] >= means["nearest"], means


# --- preprocessing contract ------------------------------------------------------


@criterion("preprocessing-contract")
def test_preprocessing_contract():
    size, radius = 4800, 2370
    coord = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    disc = (coord[:, None] ** 2 + coord[None, :] ** 2) <= radius * radius
    arr = np.where(disc[:, :, None], np.uint8(200), np.uint8(0)).astype(np.uint8)
    arr = np.repeat(arr, 3, axis=2)
    img = Image(arr)

    cropped, box = crop_borders(img, threshold=10)
    assert cropped.width < size and cropped.height < size
    down = downscale(cropped, ResampleSpec("bilinear", scale=8))
    assert down.width <= 600 and down.height <= 600
    padded = pad_to(down, 600, 600, fill=0)
    result = padded.image
    assert (result.width, result.height, result.channels) == (600, 600, 3)
    left, right = padded.offset_x, 600 - down.width - padded.offset_x
    top, bottom = padded.offset_y, 600 - down.height - padded.offset_y
    assert abs(left - right) <= 1 and abs(top - bottom) <= 1

    tiles = tile_quadrants(result)
    for tile in tiles:
        assert (tile.width, tile.height, tile.channels) == (300, 300, 3)
    assert np.array_equal(stitch_quadrants(*tiles).pixels, result.pixels)


# --- split determinism and stratification ----------------------------------------

KAGGLE_COUNTS = {0: 25810, 1: 2443, 2: 5292, 3: 873, 4: 708}
IDRID_COUNTS = {0: 168, 1: 25, 2: 168, 3: 93, 4: 62}


def _counts_manifest(counts, source):
    records = [
        DatasetRecord(f"{source}_{label}_{i:05d}", f"{label}/{i:05d}.png", label, source)
        for label, n in sorted(counts.items())
        for i in range(n)
    ]
    return Manifest(records)


@criterion("split-determinism")
def test_split_determinism(tmp_path):
    merged = amalgamate(
        [_counts_manifest(KAGGLE_COUNTS, "kaggle"), _counts_manifest(IDRID_COUNTS, "idrid")]
    )

    # class 4: 708 + 62 = 770 records split 154/123/493
    assert merged.class_counts()[4] == 770
    assert split_sizes(770, 0.2, 0.2) == (493, 123, 154)

    split_a = stratified_split(merged, seed=42)
    split_b = stratified_split(merged, seed=42)
    pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
    write_manifest(split_a, pa)
    write_manifest(split_b, pb)
    assert pa.read_bytes() == pb.read_bytes()

    per_class_split = {label: {"train": 0, "val": 0, "test": 0} for label in range(5)}
    for record in split_a.records:
        per_class_split[record.label][record.split] += 1
    for label, counts in per_class_split.items():
        n = merged.class_counts()[label]
        train, val, test = split_sizes(n, 0.2, 0.2)
        assert (counts["train"], counts["val"], counts["test"]) == (train, val, test)
        assert min(counts.values()) >= 1, f"class {label} missing from a split"
    assert per_class_split[4] == {"train": 493, "val": 123, "test": 154}

    assert len(merged) == 35732, (
        f"per-class reference counts sum to {len(merged)}, not the published "
        f"grand total 35732 (35216+516); the subtotal is inconsistent with "
        f"its own class counts"
    )


# --- rdip degenerate behaviour ---------------------------------------------------


@criterion("rdip-degenerate")
def test_rdip_degenerate():
    gen = np.random.default_rng(7007)
    from fundus_prep.resample import rdip_downscale

    for _ in range(20):
        w, h = int(gen.integers(6, 33)), int(gen.integers(6, 33))
        arr = gen.integers(0, 256, (h, w, 1), dtype=np.uint8).astype(np.uint8)
        got = rdip_downscale(Image(arr), 4, 0.0, 1e-6).pixels
        box = ref_box_downscale(arr, 4)
        assert np.abs(got.astype(int) - box.astype(int)).max() <= 1

    for lam in (0.0, 1.0, 2.0):
        for value in (0, 17, 128, 255):
            img = Image(np.full((16, 16, 3), value, dtype=np.uint8))
            out = rdip_downscale(img, 8, lam, 1e-6)
            assert (out.pixels == value).all(), (lam, value)
