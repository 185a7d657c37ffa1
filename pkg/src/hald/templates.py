"""Weighted template matching.

A landmark's template is the pixel-wise mean of enhanced training crops
aligned on the expert landmark; a per-pixel weight raster makes the
structurally informative pixels dominate the matching error. Search
slides the template over every integer placement inside a window and
minimizes the weighted mean squared intensity error.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import GrayImage, Point, load_image, save_image
from .errors import (
    DimensionMismatch,
    EmptyTrainingSet,
    InvalidWeights,
    NoOverlap,
    RegionSmallerThanTemplate,
    UnreadableFile,
)
from .imaging import Region, crop, enhance_clamped

_F32_MAGIC = b"HALDTMPL"


@dataclass(frozen=True)
class WeightedTemplate:
    template: np.ndarray  # float32, shape (th, tw)
    weights: np.ndarray   # float32, same shape, >= 0, not all zero
    anchor: tuple[float, float]  # landmark offset inside the template frame
    landmark: str
    trained_on: int = 0

    def __post_init__(self):
        if self.template.shape != self.weights.shape:
            raise DimensionMismatch(
                f"template {self.template.shape} vs weights {self.weights.shape}")
        if np.any(self.weights < 0) or not float(self.weights.sum()) > 0:
            raise InvalidWeights("weights must be >= 0 and not all zero")
        th, tw = self.template.shape
        ax, ay = self.anchor
        if not (0 <= ax < tw and 0 <= ay < th):
            raise ValueError(f"anchor {self.anchor} outside {tw}x{th} template")

    @property
    def shape(self) -> tuple[int, int]:
        return self.template.shape


def default_weights(shape: tuple[int, int], anchor: tuple[float, float]) -> np.ndarray:
    """Unnormalized Gaussian centered on the anchor, sigma = min(side)/4."""
    th, tw = shape
    sigma = min(tw, th) / 4.0
    ys, xs = np.mgrid[0:th, 0:tw]
    d2 = (xs - anchor[0]) ** 2 + (ys - anchor[1]) ** 2
    return np.exp(-d2 / (2.0 * sigma * sigma)).astype(np.float32)


def build_template(train_crops, landmark: str = "",
                   weight_map: np.ndarray | None = None) -> WeightedTemplate:
    """Average landmark-aligned crops into a template.

    `train_crops` holds (GrayImage crop, landmark point inside the crop)
    pairs, already enhanced. Crops are aligned by integer translation of
    the rounded landmark positions; the template is the mean over the
    common overlap, and the anchor keeps the mean sub-pixel residual.
    """
    train_crops = list(train_crops)
    if not train_crops:
        raise EmptyTrainingSet("no training crops")

    rounded = []
    for img, (px, py) in train_crops:
        rounded.append((int(round(px)), int(round(py))))
    left = min(rx for rx, _ in rounded)
    top = min(ry for _, ry in rounded)
    right = min(img.width - rx for (img, _), (rx, _) in zip(train_crops, rounded))
    bottom = min(img.height - ry for (img, _), (_, ry) in zip(train_crops, rounded))
    tw, th = left + right, top + bottom
    if tw <= 0 or th <= 0:
        raise NoOverlap("aligned crops share no common region")

    acc = np.zeros((th, tw), dtype=np.float64)
    for (img, _), (rx, ry) in zip(train_crops, rounded):
        acc += img.pixels[ry - top:ry + bottom, rx - left:rx + right]
    acc /= len(train_crops)

    frac_x = float(np.mean([px - rx for (_, (px, _)), (rx, _) in zip(train_crops, rounded)]))
    frac_y = float(np.mean([py - ry for (_, (_, py)), (_, ry) in zip(train_crops, rounded)]))
    ax = min(max(left + frac_x, 0.0), tw - 1e-6)
    ay = min(max(top + frac_y, 0.0), th - 1e-6)

    if weight_map is not None:
        weights = np.asarray(weight_map, dtype=np.float32)
        if weights.shape != (th, tw):
            raise DimensionMismatch(
                f"weight map {weights.shape} vs template {(th, tw)}")
        if np.any(weights < 0) or not float(weights.sum()) > 0:
            raise InvalidWeights("weight map must be >= 0 and not all zero")
    else:
        weights = default_weights((th, tw), (ax, ay))

    return WeightedTemplate(template=acc.astype(np.float32), weights=weights,
                            anchor=(ax, ay), landmark=landmark,
                            trained_on=len(train_crops))


def _window_scores(t: WeightedTemplate, windows: np.ndarray) -> np.ndarray:
    """Weighted MSE of the template against a batch of windows.

    This is the single scoring kernel shared by wmse() and match(), so a
    sliding-window search and a one-window evaluation agree bit for bit.
    """
    tpl = t.template.astype(np.float64)
    wts = t.weights.astype(np.float64)
    diff = windows.astype(np.float64) - tpl
    return np.sum(wts * diff * diff, axis=(1, 2)) / np.sum(wts)


def wmse(t: WeightedTemplate, window: np.ndarray) -> float:
    """Sum of w*(T-W)^2 over pixels, normalized by the total weight."""
    window = np.asarray(window)
    if window.shape != t.shape:
        raise DimensionMismatch(f"window {window.shape} vs template {t.shape}")
    return float(_window_scores(t, window[None])[0])


def match(t: WeightedTemplate, img: GrayImage, region: Region,
          enhance: tuple[int, float] | None = None) -> tuple[Point, float]:
    """Best template placement inside a search window.

    Evaluates the weighted MSE at every placement where the template
    fits fully inside the (clipped) region and returns the full-image
    coordinates of the anchor at the argmin, plus the minimum score.
    Ties go to the smallest (y, x) placement. `enhance` is an optional
    (tile, clip_limit) applied to the window before scoring.
    """
    part = crop(img, region)
    th, tw = t.shape
    if part.image.width < tw or part.image.height < th:
        raise RegionSmallerThanTemplate(
            f"window {part.image.width}x{part.image.height} < template {tw}x{th}")
    raster = part.image
    if enhance is not None:
        raster = enhance_clamped(raster, enhance[0], enhance[1])
    win = raster.pixels

    view = np.lib.stride_tricks.sliding_window_view(win, (th, tw))
    n_rows, n_cols = view.shape[0], view.shape[1]
    # bound the materialized diff buffer to a few MB per block
    block = max(1, int(4_000_000 // max(1, n_cols * th * tw)))
    best_score = np.inf
    best_yx = (0, 0)
    for y0 in range(0, n_rows, block):
        rows = view[y0:y0 + block].reshape(-1, th, tw)
        scores = _window_scores(t, rows)
        k = int(np.argmin(scores))
        score = float(scores[k])
        if score < best_score:
            best_score = score
            best_yx = (y0 + k // n_cols, k % n_cols)
    y, x = best_yx
    point = part.to_full_frame(x + t.anchor[0], y + t.anchor[1])
    return point, best_score


# --- persistence --------------------------------------------------------------

def _write_f32(path: Path, arr: np.ndarray) -> None:
    th, tw = arr.shape
    header = _F32_MAGIC + struct.pack("<II", tw, th)
    path.write_bytes(header + arr.astype("<f4").tobytes())


def _read_f32(path: Path) -> np.ndarray:
    data = path.read_bytes()
    if len(data) < 16 or data[:8] != _F32_MAGIC:
        raise UnreadableFile(f"{path} is not a template raster")
    tw, th = struct.unpack("<II", data[8:16])
    expected = 16 + 4 * tw * th
    if len(data) < expected:
        raise UnreadableFile(f"{path} truncated")
    return np.frombuffer(data[16:expected], dtype="<f4").reshape(th, tw).copy()


def save_template(t: WeightedTemplate, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    _write_f32(directory / "template.f32", t.template)
    _write_f32(directory / "weights.f32", t.weights)
    quantized = np.clip(np.rint(t.template), 0, 255).astype(np.uint8)
    save_image(GrayImage(quantized), directory / "template.pgm")
    (directory / "anchor.txt").write_text(
        f"{t.anchor[0]!r} {t.anchor[1]!r}\n", encoding="utf-8")
    (directory / "meta.txt").write_text(
        f"landmark={t.landmark}\ntrained_on={t.trained_on}\n", encoding="utf-8")


def load_template(directory) -> WeightedTemplate:
    directory = Path(directory)
    template = _read_f32(directory / "template.f32")
    weights = _read_f32(directory / "weights.f32")
    ax_s, ay_s = (directory / "anchor.txt").read_text().split()
    meta = {}
    for line in (directory / "meta.txt").read_text().splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            meta[key.strip()] = value.strip()
    return WeightedTemplate(template=template, weights=weights,
                            anchor=(float(ax_s), float(ay_s)),
                            landmark=meta.get("landmark", ""),
                            trained_on=int(meta.get("trained_on", "0")))


def load_weight_map(path) -> np.ndarray:
    """Hand-authored weight raster from a PGM/PNG file, as float32."""
    img = load_image(path)
    return img.pixels.astype(np.float32)
