import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fundus_prep.errors import (
    AllBackgroundError,
    ImageIOError,
    OversizeError,
    SampleKindError,
)
from fundus_prep.image import (
    Image,
    center_crop,
    crop_borders,
    load_image,
    pad_to,
    save_image,
    stitch_quadrants,
    tile_quadrants,
)

from conftest import random_image
from oracles import ref_crop_box


class TestImageType:
    def test_shape_normalization(self):
        img = Image(np.zeros((4, 5), dtype=np.uint8))
        assert (img.height, img.width, img.channels) == (4, 5, 1)

    def test_sample_kind(self):
        assert Image(np.zeros((2, 2, 3), dtype=np.uint8)).sample_kind == "integer"
        assert Image(np.zeros((2, 2, 3), dtype=np.float64)).sample_kind == "real"

    def test_rejects_bad_channel_count(self):
        with pytest.raises(ValueError):
            Image(np.zeros((2, 2, 4), dtype=np.uint8))

    def test_rejects_out_of_range_reals(self):
        with pytest.raises(ValueError):
            Image(np.full((2, 2, 1), 1.5))

    def test_rejects_other_dtypes(self):
        with pytest.raises(ValueError):
            Image(np.zeros((2, 2, 1), dtype=np.int32))

    def test_pixels_are_read_only(self):
        img = Image(np.zeros((2, 2, 1), dtype=np.uint8))
        with pytest.raises(ValueError):
            img.pixels[0, 0, 0] = 1

    def test_conversion_round_trip(self, rng):
        img = random_image(rng, 13, 9, 3)
        back = img.to_real().to_integer()
        assert np.array_equal(back.pixels, img.pixels)

    def test_round_half_away(self):
        # 0.5/255 scaled back lands exactly on .5 and must round up
        img = Image(np.full((1, 1, 1), 0.5 / 255.0 + 0.5 / 255.0))  # 1.0/255
        assert img.to_integer().pixels[0, 0, 0] == 1
        img = Image(np.full((1, 1, 1), 127.5 / 255.0))
        assert img.to_integer().pixels[0, 0, 0] == 128


class TestCodec:
    def test_png_round_trip_rgb(self, tmp_path):
        arr = np.array(
            [[(0, 0, 0), (255, 255, 255)], [(10, 20, 30), (40, 50, 60)]], dtype=np.uint8
        )
        path = tmp_path / "tiny.png"
        save_image(Image(arr), path)
        loaded = load_image(path)
        assert (loaded.width, loaded.height, loaded.channels) == (2, 2, 3)
        assert np.array_equal(loaded.pixels, arr)

    def test_png_round_trip_grayscale(self, tmp_path):
        path = tmp_path / "gray.png"
        save_image(Image(np.full((1, 1, 1), 128, dtype=np.uint8)), path)
        loaded = load_image(path)
        assert loaded.channels == 1
        assert loaded.pixels[0, 0, 0] == 128

    def test_png_round_trip_random(self, tmp_path, rng):
        img = random_image(rng, 31, 17, 3)
        path = tmp_path / "rand.png"
        save_image(img, path)
        assert np.array_equal(load_image(path).pixels, img.pixels)

    def test_jpeg_accepted(self, tmp_path, rng):
        img = random_image(rng, 16, 16, 3)
        path = tmp_path / "img.jpg"
        save_image(img, path)
        loaded = load_image(path)
        assert (loaded.width, loaded.height, loaded.channels) == (16, 16, 3)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ImageIOError, match="nope.png"):
            load_image(tmp_path / "nope.png")

    def test_truncated_file(self, tmp_path, rng):
        path = tmp_path / "trunc.png"
        save_image(random_image(rng, 64, 64, 3), path)
        data = path.read_bytes()
        path.write_bytes(data[: len(data) // 2])
        with pytest.raises(ImageIOError):
            load_image(path)

    def test_not_an_image(self, tmp_path):
        path = tmp_path / "junk.png"
        path.write_bytes(b"definitely not a png")
        with pytest.raises(ImageIOError):
            load_image(path)

    def test_unsupported_format(self, tmp_path, rng):
        from PIL import Image as PILImage

        path = tmp_path / "img.bmp"
        PILImage.fromarray(random_image(rng, 4, 4, 3).pixels).save(path, format="BMP")
        with pytest.raises(ImageIOError, match="unsupported format"):
            load_image(path)

    def test_save_to_missing_directory(self, rng):
        with pytest.raises(ImageIOError):
            save_image(random_image(rng, 4, 4, 1), "/nonexistent-dir/x.png")

    def test_save_rejects_real_samples(self, tmp_path):
        img = Image(np.zeros((2, 2, 1), dtype=np.float64))
        with pytest.raises(SampleKindError):
            save_image(img, tmp_path / "x.png")


class TestCropBorders:
    def test_block_on_black(self):
        arr = np.zeros((20, 20, 1), dtype=np.uint8)
        arr[5:15, 5:15] = 200
        cropped, box = crop_borders(Image(arr), threshold=10)
        assert (box.left, box.top, box.right, box.bottom) == (5, 5, 15, 15)
        assert ref_crop_box(arr, 10) == (5, 5, 15, 15)
        assert cropped.pixels.shape == (10, 10, 1)
        assert (cropped.pixels == 200).all()

    def test_no_background(self, rng):
        arr = rng.integers(100, 256, size=(12, 9, 3), dtype=np.uint8).astype(np.uint8)
        cropped, box = crop_borders(Image(arr), threshold=10)
        assert (box.left, box.top, box.right, box.bottom) == (0, 0, 9, 12)
        assert np.array_equal(cropped.pixels, arr)

    def test_all_background(self):
        with pytest.raises(AllBackgroundError):
            crop_borders(Image(np.zeros((8, 8, 1), dtype=np.uint8)), threshold=10)

    def test_matches_scan_oracle(self, rng):
        for _ in range(10):
            arr = np.zeros((16, 14, 3), dtype=np.uint8)
            x0, y0 = int(rng.integers(0, 6)), int(rng.integers(0, 6))
            w, h = int(rng.integers(3, 8)), int(rng.integers(3, 8))
            arr[y0 : y0 + h, x0 : x0 + w] = rng.integers(120, 256, size=(h, w, 3))
            _, box = crop_borders(Image(arr), threshold=10)
            assert ref_crop_box(arr, 10) == (box.left, box.top, box.right, box.bottom)

    def test_idempotent_on_disc(self):
        # synthetic fundus: bright disc, black frame
        size = 101
        yy, xx = np.mgrid[:size, :size]
        disc = ((yy - 50) ** 2 + (xx - 50) ** 2 <= 40**2).astype(np.uint8) * 180
        cropped, _ = crop_borders(Image(disc[:, :, None]), threshold=10)
        again, box = crop_borders(cropped, threshold=10)
        assert (box.left, box.top) == (0, 0)
        assert (box.right, box.bottom) == (cropped.width, cropped.height)
        assert np.array_equal(again.pixels, cropped.pixels)

    def test_rejects_real_samples(self):
        with pytest.raises(SampleKindError):
            crop_borders(Image(np.zeros((4, 4, 1), dtype=np.float64)))


class TestPad:
    def test_even_remainder(self, rng):
        img = random_image(rng, 592, 584, 3)
        res = pad_to(img, 600, 600)
        assert (res.offset_x, res.offset_y) == (4, 8)
        assert (res.image.width, res.image.height) == (600, 600)

    def test_odd_remainder_goes_right_bottom(self, rng):
        res = pad_to(random_image(rng, 599, 600, 1), 600, 600)
        assert (res.offset_x, res.offset_y) == (0, 0)

    def test_oversize(self, rng):
        with pytest.raises(OversizeError):
            pad_to(random_image(rng, 601, 600, 1), 600, 600)

    def test_fill_value(self, rng):
        res = pad_to(random_image(rng, 2, 2, 1), 4, 4, fill=7)
        border = res.image.pixels.copy()
        border[res.offset_y : res.offset_y + 2, res.offset_x : res.offset_x + 2] = 7
        assert (border == 7).all()

    @given(
        w=st.integers(1, 40),
        h=st.integers(1, 40),
        tw=st.integers(40, 64),
        th=st.integers(40, 64),
    )
    @settings(max_examples=40, deadline=None)
    def test_extract_recovers_input(self, w, h, tw, th):
        gen = np.random.default_rng(w * 1000 + h * 100 + tw)
        img = Image(gen.integers(0, 256, size=(h, w, 1), dtype=np.uint8))
        res = pad_to(img, tw, th)
        window = res.image.pixels[res.offset_y : res.offset_y + h, res.offset_x : res.offset_x + w]
        assert np.array_equal(window, img.pixels)
        # symmetry: pads differ by at most one pixel
        assert abs(res.offset_x - (tw - w - res.offset_x)) <= 1
        assert abs(res.offset_y - (th - h - res.offset_y)) <= 1

    def test_center_crop_complements_pad(self, rng):
        img = random_image(rng, 10, 8, 1)
        cropped = center_crop(img, 6, 6)
        assert cropped.pixels.shape == (6, 6, 1)
        assert np.array_equal(cropped.pixels, img.pixels[1:7, 2:8])


class TestTiles:
    def test_600_to_300(self, rng):
        tiles = tile_quadrants(random_image(rng, 600, 600, 3))
        for t in tiles:
            assert (t.width, t.height, t.channels) == (300, 300, 3)

    def test_2x2(self):
        arr = np.array([[1, 2], [3, 4]], dtype=np.uint8)[:, :, None]
        tl, tr, bl, br = tile_quadrants(Image(arr))
        assert (tl.pixels.ravel()[0], tr.pixels.ravel()[0]) == (1, 2)
        assert (bl.pixels.ravel()[0], br.pixels.ravel()[0]) == (3, 4)

    def test_odd_dimension(self, rng):
        with pytest.raises(ValueError):
            tile_quadrants(random_image(rng, 3, 2, 1))

    @given(hw=st.integers(1, 16), hh=st.integers(1, 16), ch=st.sampled_from([1, 3]))
    @settings(max_examples=40, deadline=None)
    def test_stitch_identity(self, hw, hh, ch):
        gen = np.random.default_rng(hw * 317 + hh * 11 + ch)
        img = Image(gen.integers(0, 256, size=(2 * hh, 2 * hw, ch), dtype=np.uint8))
        assert np.array_equal(stitch_quadrants(*tile_quadrants(img)).pixels, img.pixels)
