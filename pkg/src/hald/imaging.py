"""Shared raster primitives: contrast enhancement, smoothing, gradients, crops.

All convolutions replicate the border pixel, so windows close to a region
edge never see phantom dark halos. Intermediate rasters between smoothing
and gradient stages stay real-valued.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import GrayImage
from .errors import EmptyIntersection, ImageTooSmall, TileLargerThanImage


@dataclass(frozen=True)
class Region:
    """Integer pixel window: inclusive top-left corner plus extents."""

    x0: int
    y0: int
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"degenerate region {self}")

    @property
    def x1(self) -> int:  # exclusive
        return self.x0 + self.width

    @property
    def y1(self) -> int:  # exclusive
        return self.y0 + self.height

    @property
    def slices(self):
        return slice(self.y0, self.y1), slice(self.x0, self.x1)

    def contains_point(self, x: float, y: float) -> bool:
        """Closed-box containment for real-valued landmark coordinates."""
        return (self.x0 <= x <= self.x0 + self.width
                and self.y0 <= y <= self.y0 + self.height)

    def intersect(self, other: "Region") -> "Region | None":
        x0 = max(self.x0, other.x0)
        y0 = max(self.y0, other.y0)
        x1 = min(self.x1, other.x1)
        y1 = min(self.y1, other.y1)
        if x1 <= x0 or y1 <= y0:
            return None
        return Region(x0, y0, x1 - x0, y1 - y0)

    def union_bbox(self, other: "Region") -> "Region":
        x0 = min(self.x0, other.x0)
        y0 = min(self.y0, other.y0)
        x1 = max(self.x1, other.x1)
        y1 = max(self.y1, other.y1)
        return Region(x0, y0, x1 - x0, y1 - y0)

    def inflate(self, dx: int, dy: int) -> "Region":
        return Region(self.x0 - dx, self.y0 - dy,
                      self.width + 2 * dx, self.height + 2 * dy)

    def clip_to(self, width: int, height: int) -> "Region | None":
        return self.intersect(Region(0, 0, width, height))


@dataclass(frozen=True)
class Crop:
    """A sub-raster plus the source-frame region it came from."""

    image: GrayImage
    region: Region

    def to_full_frame(self, x: float, y: float) -> tuple[float, float]:
        return x + self.region.x0, y + self.region.y0


@dataclass(frozen=True)
class GradientField:
    magnitude: np.ndarray  # float64, >= 0
    direction: np.ndarray  # float64 radians, atan2(gy, gx)


def crop(img: GrayImage, region: Region) -> Crop:
    """Extract the part of `region` that intersects the image."""
    clipped = region.clip_to(img.width, img.height)
    if clipped is None:
        raise EmptyIntersection(f"{region} lies outside {img.width}x{img.height}")
    sub = img.pixels[clipped.slices].copy()
    return Crop(GrayImage(sub, img.mm_per_pixel), clipped)


# --- contrast-limited adaptive histogram equalization ------------------------

def _tile_lut(tile_pixels: np.ndarray, clip_limit: float) -> np.ndarray:
    """Midpoint-rule equalization mapping for one tile, as 256 floats."""
    area = tile_pixels.size
    hist = np.bincount(tile_pixels.ravel(), minlength=256).astype(np.float64)
    threshold = clip_limit * area / 256.0
    clipped = np.minimum(hist, threshold)
    clipped += (hist - clipped).sum() / 256.0
    cdf = np.cumsum(clipped) / area
    below = np.concatenate(([0.0], cdf[:-1]))
    return 255.0 * (below + cdf) / 2.0


def _axis_interp(length: int, starts: np.ndarray, stops: np.ndarray):
    """Per-pixel flanking tile indices and blend weight along one axis."""
    centers = (starts + stops - 1) / 2.0
    coords = np.arange(length, dtype=np.float64)
    hi = np.searchsorted(centers, coords, side="right")
    i0 = np.clip(hi - 1, 0, len(centers) - 1)
    i1 = np.clip(hi, 0, len(centers) - 1)
    span = centers[i1] - centers[i0]
    with np.errstate(invalid="ignore", divide="ignore"):
        w = np.where(span > 0, (coords - centers[i0]) / np.where(span > 0, span, 1.0), 0.0)
    return i0, i1, np.clip(w, 0.0, 1.0)


def enhance_adaptive(img: GrayImage, tile: int = 64,
                     clip_limit: float = 4.0) -> GrayImage:
    """Contrast-limited adaptive histogram equalization.

    The image is partitioned into tile x tile windows (edge tiles may be
    smaller); each window's equalization mapping is clipped at
    `clip_limit` times the uniform histogram bin height, and per-pixel
    outputs blend the four surrounding tile mappings bilinearly.
    """
    if tile < 8:
        raise ValueError(f"tile must be >= 8, got {tile}")
    if not 1.0 <= clip_limit <= 40.0:
        raise ValueError(f"clip_limit must be in [1, 40], got {clip_limit}")
    h, w = img.pixels.shape
    if tile > w or tile > h:
        raise TileLargerThanImage(f"tile {tile} exceeds image {w}x{h}")

    x_starts = np.arange(0, w, tile)
    y_starts = np.arange(0, h, tile)
    x_stops = np.minimum(x_starts + tile, w)
    y_stops = np.minimum(y_starts + tile, h)

    luts = np.empty((len(y_starts), len(x_starts), 256), dtype=np.float64)
    for ty in range(len(y_starts)):
        for tx in range(len(x_starts)):
            block = img.pixels[y_starts[ty]:y_stops[ty], x_starts[tx]:x_stops[tx]]
            luts[ty, tx] = _tile_lut(block, clip_limit)

    ty0, ty1, wy = _axis_interp(h, y_starts, y_stops)
    tx0, tx1, wx = _axis_interp(w, x_starts, x_stops)

    v = img.pixels
    out = np.zeros((h, w), dtype=np.float64)
    for ty, fy in ((ty0, 1.0 - wy), (ty1, wy)):
        for tx, fx in ((tx0, 1.0 - wx), (tx1, wx)):
            out += (fy[:, None] * fx[None, :]) * luts[ty[:, None], tx[None, :], v]
    return GrayImage(np.clip(np.rint(out), 0, 255).astype(np.uint8),
                     img.mm_per_pixel)


def enhance_clamped(img: GrayImage, tile: int, clip_limit: float) -> GrayImage:
    """enhance_adaptive with the tile size clamped to fit small crops.

    Crops narrower than the minimum 8-px tile are returned unchanged.
    """
    limit = min(img.width, img.height)
    if limit < 8:
        return img
    return enhance_adaptive(img, min(tile, limit), clip_limit)


# --- smoothing and gradients --------------------------------------------------

def _gaussian_kernel(sigma: float) -> np.ndarray:
    radius = math.ceil(3.0 * sigma)
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return kernel / kernel.sum()


def _convolve_axis(arr: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    radius = len(kernel) // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius, radius)
    padded = np.pad(arr, pad, mode="edge")
    out = np.zeros_like(arr, dtype=np.float64)
    index = [slice(None), slice(None)]
    for k, weight in enumerate(kernel):
        index[axis] = slice(k, k + arr.shape[axis])
        out += weight * padded[tuple(index)]
    return out


def gaussian_blur(img, sigma: float) -> np.ndarray:
    """Separable Gaussian smoothing; returns a float64 raster.

    Kernel radius is ceil(3*sigma); borders replicate the edge pixel.
    Accepts a GrayImage or a 2-D array.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    arr = img.pixels if isinstance(img, GrayImage) else np.asarray(img)
    arr = arr.astype(np.float64, copy=False)
    kernel = _gaussian_kernel(sigma)
    return _convolve_axis(_convolve_axis(arr, kernel, axis=1), kernel, axis=0)


_SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.float64)
_SOBEL_Y = np.array([[-1, -2, -1], [0, 0, 0], [1, 2, 1]], dtype=np.float64)


def _correlate3x3(arr: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    padded = np.pad(arr, 1, mode="edge")
    h, w = arr.shape
    out = np.zeros((h, w), dtype=np.float64)
    for dy in range(3):
        for dx in range(3):
            weight = kernel[dy, dx]
            if weight != 0.0:
                out += weight * padded[dy:dy + h, dx:dx + w]
    return out


def sobel_gradients(raster) -> GradientField:
    """3x3 Sobel gradient field: magnitude and atan2(gy, gx) direction."""
    arr = raster.pixels if isinstance(raster, GrayImage) else np.asarray(raster)
    arr = arr.astype(np.float64, copy=False)
    if arr.shape[0] < 3 or arr.shape[1] < 3:
        raise ImageTooSmall(f"need at least 3x3, got {arr.shape[1]}x{arr.shape[0]}")
    gx = _correlate3x3(arr, _SOBEL_X)
    gy = _correlate3x3(arr, _SOBEL_Y)
    return GradientField(magnitude=np.hypot(gx, gy),
                         direction=np.arctan2(gy, gx))
