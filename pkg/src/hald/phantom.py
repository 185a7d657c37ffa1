"""Synthetic radiograph-like corpus with exactly known landmark geometry.

Each phantom plants a bright mandible-like polygon (its lowest vertex is
Me, the most anterior chin vertex Pog, the gonial-angle vertex Go, and
the lower border doubles as the Go-Me line), one distinctive textured
glyph per template-matched landmark, and thick straight segments for the
incisor axes. All truth coordinates are analytic, so detector accuracy
can be asserted in pixels and degrees. The two emitted expert sets carry
equal-and-opposite jitter, making their mean the planted truth.

Vertex corners are kept away from exact horizontal/vertical/diagonal
tangents; flat tangents turn the extremum into a row-plateau whose
tie-break wanders several pixels under noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import GrayImage, LandmarkSet, save_annotations, save_image

WIDTH, HEIGHT = 640, 800
MM_PER_PIXEL = 0.1
JITTER = 0.02          # normalized per-case placement jitter
EXPERT_JITTER = 1.5    # px, equal-and-opposite between the two expert sets
STAMP = 24             # glyph side
BONE_VALUE = 215
SEGMENT_VALUE = 230
BACKGROUND = 30
SEGMENT_HALF_WIDTH = 2.5

# Mean normalized positions of the planted glyphs (facing right).
_STAMP_LAYOUT = {
    "S": (0.42, 0.26),
    "N": (0.76, 0.20),
    "Po": (0.22, 0.36),
    "Or": (0.60, 0.36),
    "PNS": (0.44, 0.50),
    "ANS": (0.78, 0.46),
    "A": (0.78, 0.54),
    "UIT": (0.70, 0.62),
    "B": (0.76, 0.70),
}
_CHIN_CENTER = (0.62, 0.78)
_CHIN_RADIUS = (36.0, 42.0)      # px, scales the whole mandible polygon
_LIT = (0.58, 0.60)
_UPPER_AXIS_DEG = (-105.0, -95.0)   # direction UIT -> UIA
_LOWER_AXIS_DEG = (95.0, 105.0)     # direction LIT -> LIA
_UPPER_LEN = 105.0
_LOWER_LEN = 85.0
_UIT_GAP = 26.0       # upper axis stops short of the UIT glyph


@dataclass(frozen=True)
class PhantomCase:
    case_id: str
    image: GrayImage
    truth: LandmarkSet


def _glyph(landmark: str) -> np.ndarray:
    """Per-landmark smooth texture stamp in [0, 1] with a soft border."""
    seed = sum(ord(c) * (k + 1) for k, c in enumerate(landmark))
    rng = np.random.default_rng(10_000 + seed)
    coarse = rng.random((6, 6))
    ys, xs = np.mgrid[0:STAMP, 0:STAMP]
    scale = (6 - 1) / (STAMP - 1)
    fy, fx = ys * scale, xs * scale
    y0, x0 = fy.astype(int), fx.astype(int)
    y1, x1 = np.minimum(y0 + 1, 5), np.minimum(x0 + 1, 5)
    wy, wx = fy - y0, fx - x0
    fine = ((1 - wy) * (1 - wx) * coarse[y0, x0]
            + (1 - wy) * wx * coarse[y0, x1]
            + wy * (1 - wx) * coarse[y1, x0]
            + wy * wx * coarse[y1, x1])
    center = (STAMP - 1) / 2.0
    dist = np.hypot(xs - center, ys - center) / (STAMP / 2.0)
    window = np.cos(np.clip(dist, 0.0, 1.0) * math.pi / 2.0) ** 2
    return fine * window


_GLYPHS = {name: _glyph(name) for name in _STAMP_LAYOUT}


def _paste_glyph(canvas: np.ndarray, name: str, cx: float, cy: float) -> None:
    glyph = _GLYPHS[name]
    x0 = int(round(cx)) - STAMP // 2
    y0 = int(round(cy)) - STAMP // 2
    patch = BACKGROUND + glyph * (235 - BACKGROUND)
    window = canvas[y0:y0 + STAMP, x0:x0 + STAMP]
    np.maximum(window, patch, out=window)


def _fill_polygon(canvas: np.ndarray, vertices, value: float) -> None:
    """Crossing-number rasterization (handles non-convex outlines)."""
    ys, xs = np.mgrid[0:canvas.shape[0], 0:canvas.shape[1]]
    inside = np.zeros(canvas.shape, dtype=bool)
    n = len(vertices)
    for k in range(n):
        px, py = vertices[k]
        qx, qy = vertices[(k + 1) % n]
        if py == qy:
            continue
        straddles = (ys >= min(py, qy)) & (ys < max(py, qy))
        x_cross = px + (ys - py) * (qx - px) / (qy - py)
        inside ^= straddles & (xs < x_cross)
    canvas[inside] = np.maximum(canvas[inside], value)


def _draw_segment(canvas: np.ndarray, a, b,
                  half_width: float = SEGMENT_HALF_WIDTH) -> None:
    ax, ay = a
    bx, by = b
    x0 = max(int(min(ax, bx) - half_width - 2), 0)
    x1 = min(int(max(ax, bx) + half_width + 3), canvas.shape[1])
    y0 = max(int(min(ay, by) - half_width - 2), 0)
    y1 = min(int(max(ay, by) + half_width + 3), canvas.shape[0])
    ys, xs = np.mgrid[y0:y1, x0:x1]
    dx, dy = bx - ax, by - ay
    t = np.clip(((xs - ax) * dx + (ys - ay) * dy) / (dx * dx + dy * dy), 0.0, 1.0)
    dist = np.hypot(xs - (ax + t * dx), ys - (ay + t * dy))
    window = canvas[y0:y1, x0:x1]
    hit = dist <= half_width
    window[hit] = np.maximum(window[hit], SEGMENT_VALUE)


def _mandible(canvas: np.ndarray, cx: float, cy: float, r: float):
    """Draw the jaw polygon; returns the Me, Pog, Gn and Go truth points.

    The lower border (Go to Me) is the longest straight edge by a wide
    margin so the Go-Me line fit cannot lock onto the ramus or the upper
    border, which stays above the learned Go-Me search window.
    """
    me = (cx + 0.05 * r, cy + r)
    knee = (me[0] + 0.22 * r, me[1] - 0.33 * r)
    pog = (knee[0] + 0.30 * r, knee[1] - 0.15 * r)
    go = (me[0] - 1.9 * r, me[1] - 0.57 * r)
    vertices = [
        go,
        me,
        knee,
        pog,
        (pog[0] - 0.30 * r, pog[1] - 0.50 * r),  # fast recede above Pog
        (pog[0] - 0.35 * r, me[1] - 85.0),       # anterior ramus, steep
        (go[0] + 0.15 * r, me[1] - 90.0),        # upper border stays high
    ]
    _fill_polygon(canvas, vertices, BONE_VALUE)

    # Gn: halfway between Pog and Me along the ideal chin outline
    len_mk = math.hypot(knee[0] - me[0], knee[1] - me[1])
    len_kp = math.hypot(pog[0] - knee[0], pog[1] - knee[1])
    half = (len_mk + len_kp) / 2.0
    if half <= len_mk:
        f = half / len_mk
        gn = (me[0] + f * (knee[0] - me[0]), me[1] + f * (knee[1] - me[1]))
    else:
        f = (half - len_mk) / len_kp
        gn = (knee[0] + f * (pog[0] - knee[0]), knee[1] + f * (pog[1] - knee[1]))
    return me, pog, gn, go


def _jittered(rng, mean_uv) -> tuple[float, float]:
    u = mean_uv[0] + rng.uniform(-JITTER, JITTER)
    v = mean_uv[1] + rng.uniform(-JITTER, JITTER)
    return u * WIDTH, v * HEIGHT


def generate_case(case_id: str, rng: np.random.Generator,
                  noise: float = 8.0) -> PhantomCase:
    canvas = np.full((HEIGHT, WIDTH), float(BACKGROUND))
    truth: dict[str, tuple[float, float]] = {}

    for name, mean_uv in _STAMP_LAYOUT.items():
        x, y = _jittered(rng, mean_uv)
        truth[name] = (x, y)
        _paste_glyph(canvas, name, x, y)

    cx, cy = _jittered(rng, _CHIN_CENTER)
    radius = rng.uniform(*_CHIN_RADIUS)
    me, pog, gn, go = _mandible(canvas, cx, cy, radius)
    truth["Me"], truth["Pog"], truth["Gn"], truth["Go"] = me, pog, gn, go

    uit = truth["UIT"]
    theta = math.radians(rng.uniform(*_UPPER_AXIS_DEG))
    axis = (math.cos(theta), math.sin(theta))
    uia = (uit[0] + _UPPER_LEN * axis[0], uit[1] + _UPPER_LEN * axis[1])
    truth["UIA"] = uia
    _draw_segment(canvas, uia, (uit[0] + _UIT_GAP * axis[0],
                                uit[1] + _UIT_GAP * axis[1]))

    lit = _jittered(rng, _LIT)
    truth["LIT"] = lit
    theta = math.radians(rng.uniform(*_LOWER_AXIS_DEG))
    lia = (lit[0] + _LOWER_LEN * math.cos(theta),
           lit[1] + _LOWER_LEN * math.sin(theta))
    truth["LIA"] = lia
    _draw_segment(canvas, lit, lia)

    if noise > 0:
        canvas = canvas + rng.uniform(-noise, noise, canvas.shape)
    pixels = np.clip(np.rint(canvas), 0, 255).astype(np.uint8)
    return PhantomCase(case_id=case_id, image=GrayImage(pixels, MM_PER_PIXEL),
                       truth=LandmarkSet(truth, source="expert"))


def generate_corpus(out_dir, n: int = 12, seed: int = 7,
                    noise: float = 8.0) -> list[str]:
    """Write n phantom cases (image + two expert sets) into out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    case_ids = []
    for k in range(n):
        case_id = f"case{k + 1:02d}"
        case = generate_case(case_id, rng, noise=noise)
        save_image(case.image, out_dir / f"{case_id}.pgm")

        jitter = {name: (rng.uniform(-EXPERT_JITTER, EXPERT_JITTER),
                         rng.uniform(-EXPERT_JITTER, EXPERT_JITTER))
                  for name in case.truth.entries}
        expert_a = LandmarkSet(
            {name: (x + jitter[name][0], y + jitter[name][1])
             for name, (x, y) in case.truth.entries.items()}, source="expert")
        expert_b = LandmarkSet(
            {name: (x - jitter[name][0], y - jitter[name][1])
             for name, (x, y) in case.truth.entries.items()}, source="expert")
        save_annotations(expert_a, out_dir / f"{case_id}.a.lmk",
                         MM_PER_PIXEL, facing="right")
        save_annotations(expert_b, out_dir / f"{case_id}.b.lmk",
                         MM_PER_PIXEL, facing="right")
        case_ids.append(case_id)
    return case_ids
