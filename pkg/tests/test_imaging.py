import math

import numpy as np
import pytest

from hald.dataset import GrayImage
from hald.errors import EmptyIntersection, ImageTooSmall, TileLargerThanImage
from hald.imaging import (
    Region,
    crop,
    enhance_adaptive,
    enhance_clamped,
    gaussian_blur,
    sobel_gradients,
)


def gray(arr):
    return GrayImage(np.asarray(arr, dtype=np.uint8))


# --- CLAHE --------------------------------------------------------------------

def test_clahe_constant_stays_constant_any_clip():
    for clip in (1.0, 4.0, 40.0):
        for level in (0, 64, 128, 200, 255):
            out = enhance_adaptive(gray(np.full((64, 64), level)), tile=16,
                                   clip_limit=clip)
            assert len(np.unique(out.pixels)) == 1


def test_clahe_constant_level_within_one_at_min_clip():
    # at clip 1 the equalized histogram is almost uniform, so every level
    # maps onto itself up to quantization
    for level in range(0, 256, 17):
        out = enhance_adaptive(gray(np.full((48, 48), level)), tile=16,
                               clip_limit=1.0)
        assert abs(int(out.pixels[0, 0]) - level) <= 1


def test_clahe_two_tile_spread_oracle():
    # two tiles with narrow, well separated ramps: equalization expands
    # each half's histogram, and more clip means more expansion
    rng = np.random.default_rng(0)
    left = rng.integers(40, 61, size=(64, 64))
    right = rng.integers(190, 211, size=(64, 64))
    img = gray(np.concatenate([left, right], axis=1))
    spreads = []
    for clip in (1.0, 4.0, 40.0):
        out = enhance_adaptive(img, tile=64, clip_limit=clip).pixels
        half_l, half_r = out[:, :64], out[:, 64:]
        assert half_l.min() <= 40 and half_l.max() >= 60
        assert half_r.min() <= 190 and half_r.max() >= 210
        spreads.append(int(half_l.max()) - int(half_l.min()))
    assert spreads[0] < spreads[1] < spreads[2]
    assert spreads[0] > 20  # strictly wider than the input ramp


def test_clahe_output_range():
    rng = np.random.default_rng(1)
    img = gray(rng.integers(0, 256, size=(80, 80)))
    out = enhance_adaptive(img, tile=32, clip_limit=8.0)
    assert out.pixels.min() >= 0 and out.pixels.max() <= 255
    assert out.pixels.dtype == np.uint8
    assert (out.width, out.height) == (img.width, img.height)
    assert out.mm_per_pixel == img.mm_per_pixel


def test_clahe_tile_larger_than_image():
    with pytest.raises(TileLargerThanImage):
        enhance_adaptive(gray(np.zeros((32, 32))), tile=64, clip_limit=4.0)


def test_enhance_clamped_small_crops():
    img = gray(np.arange(100).reshape(10, 10) * 2)
    out = enhance_clamped(img, tile=64, clip_limit=4.0)
    assert out.pixels.shape == (10, 10)
    tiny = gray(np.zeros((4, 4)))
    assert enhance_clamped(tiny, 64, 4.0) is tiny


# --- gaussian blur ---------------------------------------------------------------

def test_blur_impulse_matches_analytic_gaussian():
    arr = np.zeros((21, 21), dtype=np.uint8)
    arr[10, 10] = 1
    out = gaussian_blur(gray(arr), sigma=1.0)
    assert out.sum() == pytest.approx(1.0, abs=1e-6)
    radius = math.ceil(3.0)
    xs = np.arange(-radius, radius + 1)
    g = np.exp(-(xs ** 2) / 2.0)
    g /= g.sum()
    oracle = np.outer(g, g)
    window = out[10 - radius:10 + radius + 1, 10 - radius:10 + radius + 1]
    assert np.abs(window - oracle).max() < 1e-12


def test_blur_preserves_constant():
    out = gaussian_blur(gray(np.full((16, 16), 77)), sigma=2.0)
    assert np.abs(out - 77.0).max() < 1e-9


def test_blur_commutes_with_mirror():
    rng = np.random.default_rng(2)
    arr = rng.integers(0, 256, size=(24, 31)).astype(np.uint8)
    a = gaussian_blur(gray(np.fliplr(arr).copy()), 1.3)
    b = np.fliplr(gaussian_blur(gray(arr), 1.3))
    assert np.abs(a - b).max() < 1e-12


def test_blur_rejects_bad_sigma():
    with pytest.raises(ValueError):
        gaussian_blur(gray(np.zeros((8, 8))), 0.0)


# --- sobel ------------------------------------------------------------------------

def test_sobel_vertical_step():
    arr = np.zeros((9, 9), dtype=np.uint8)
    arr[:, 5:] = 255
    grad = sobel_gradients(gray(arr))
    row = grad.magnitude[4]
    edge_col = int(np.argmax(row))
    assert edge_col in (4, 5)
    assert grad.direction[4, edge_col] == pytest.approx(0.0, abs=1e-12)


def test_sobel_constant_zero():
    grad = sobel_gradients(gray(np.full((8, 8), 42)))
    assert np.all(grad.magnitude == 0.0)


def test_sobel_rotation_oracle():
    # clockwise image rotation adds pi/2 to every gradient direction
    rng = np.random.default_rng(5)
    base = gaussian_blur(gray(rng.integers(0, 256, size=(32, 32))), 2.0)
    rotated = np.rot90(base, k=-1).copy()
    ga = sobel_gradients(base)
    gb = sobel_gradients(rotated)
    n = 32
    for y in range(3, n - 3):
        for x in range(3, n - 3):
            xp, yp = n - 1 - y, x
            assert gb.magnitude[yp, xp] == pytest.approx(ga.magnitude[y, x],
                                                         abs=1e-9)
            if ga.magnitude[y, x] < 1e-9:
                continue
            delta = (gb.direction[yp, xp] - ga.direction[y, x]) % (2 * math.pi)
            assert delta == pytest.approx(math.pi / 2, abs=1e-9)


def test_sobel_offset_invariance():
    rng = np.random.default_rng(6)
    arr = rng.integers(0, 200, size=(16, 16)).astype(np.uint8)
    a = sobel_gradients(gray(arr)).magnitude[1:-1, 1:-1]
    b = sobel_gradients(gray(arr + 50)).magnitude[1:-1, 1:-1]
    assert np.allclose(a, b)


def test_sobel_too_small():
    with pytest.raises(ImageTooSmall):
        sobel_gradients(gray(np.zeros((2, 5))))


# --- regions and crops ---------------------------------------------------------------

def test_crop_identity():
    rng = np.random.default_rng(7)
    img = gray(rng.integers(0, 256, size=(12, 17)))
    part = crop(img, Region(0, 0, 17, 12))
    assert np.array_equal(part.image.pixels, img.pixels)
    assert part.region == Region(0, 0, 17, 12)


def test_crop_single_pixel():
    rng = np.random.default_rng(8)
    img = gray(rng.integers(0, 256, size=(12, 12)))
    part = crop(img, Region(5, 7, 1, 1))
    assert part.image.pixels[0, 0] == img.pixels[7, 5]
    assert part.to_full_frame(0, 0) == (5, 7)


def test_crop_composition():
    rng = np.random.default_rng(9)
    img = gray(rng.integers(0, 256, size=(40, 40)))
    r1 = Region(4, 6, 30, 25)
    r2 = Region(10, 8, 20, 30)
    c1 = crop(img, r1)
    inner = Region(r2.x0 - c1.region.x0, r2.y0 - c1.region.y0,
                   r2.width, r2.height)
    c2 = crop(c1.image, inner)
    direct = crop(img, r1.intersect(r2))
    assert np.array_equal(c2.image.pixels, direct.image.pixels)
    assert (c2.region.x0 + c1.region.x0, c2.region.y0 + c1.region.y0) == \
        (direct.region.x0, direct.region.y0)


def test_crop_clips_and_rejects_outside():
    img = gray(np.zeros((10, 10)))
    part = crop(img, Region(-5, -5, 8, 8))
    assert part.region == Region(0, 0, 3, 3)
    with pytest.raises(EmptyIntersection):
        crop(img, Region(50, 50, 5, 5))


def test_region_contains_closed_box():
    region = Region(10, 20, 5, 5)
    assert region.contains_point(10.0, 20.0)
    assert region.contains_point(15.0, 25.0)
    assert not region.contains_point(15.01, 22.0)


def test_region_monotone_inflate():
    region = Region(10, 10, 5, 6)
    bigger = region.inflate(2, 3)
    assert bigger == Region(8, 7, 9, 12)
