"""Detection overlays as dependency-free binary PPM images."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .dataset import GrayImage
from .imaging import Region
from .lines import Line2D

DETECTED_COLOR = (255, 64, 64)
EXPERT_COLOR = (64, 220, 64)
LINE_COLOR = (80, 140, 255)


def to_rgb(img: GrayImage) -> np.ndarray:
    return np.repeat(img.pixels[:, :, None], 3, axis=2).astype(np.uint8)


def save_ppm(rgb: np.ndarray, path) -> None:
    h, w, _ = rgb.shape
    header = f"P6\n{w} {h}\n255\n".encode("ascii")
    Path(path).write_bytes(header + rgb.astype(np.uint8).tobytes())


def _put(rgb: np.ndarray, x: int, y: int, color) -> None:
    if 0 <= y < rgb.shape[0] and 0 <= x < rgb.shape[1]:
        rgb[y, x] = color


def draw_cross(rgb: np.ndarray, x: float, y: float, color=DETECTED_COLOR,
               half: int = 2) -> None:
    """5-px cross marker."""
    cx, cy = int(round(x)), int(round(y))
    for d in range(-half, half + 1):
        _put(rgb, cx + d, cy, color)
        _put(rgb, cx, cy + d, color)


def draw_circle(rgb: np.ndarray, x: float, y: float, radius: int = 4,
                color=EXPERT_COLOR) -> None:
    cx, cy = int(round(x)), int(round(y))
    steps = max(16, 8 * radius)
    for k in range(steps):
        phi = 2.0 * np.pi * k / steps
        _put(rgb, int(round(cx + radius * np.cos(phi))),
             int(round(cy + radius * np.sin(phi))), color)


def draw_line(rgb: np.ndarray, line: Line2D, span: Region,
              color=LINE_COLOR) -> None:
    """Draw a line clipped to a region, sampled at half-pixel steps."""
    px, py = line.point
    dx, dy = line.direction
    reach = float(np.hypot(span.width, span.height))
    for t in np.arange(-reach, reach, 0.5):
        x, y = px + t * dx, py + t * dy
        if span.contains_point(x, y):
            _put(rgb, int(round(x)), int(round(y)), color)
