"""Edge tracing for the chin landmarks Me, Pog and Gn.

The mandibular symphysis produces the cleanest edge on a lateral film:
detection crops the joint search window of the three landmarks, extracts
contours, picks the chain that reaches lowest, and reads the landmarks
off that chain with geometric extremum rules. "Anterior" depends on
which way the profile faces, so the facing direction is explicit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import GrayImage, Point
from .edges import ContourChain, canny, trace_contours
from .errors import DegenerateContour, NoContourFound, PointNotOnChain
from .imaging import Region, crop, enhance_clamped
from .regions import RegionModel, region_for

MIN_CHAIN_PX = 20


@dataclass(frozen=True)
class Facing:
    """Direction the patient's face points in the image."""

    direction: str  # "left" or "right"

    def __post_init__(self):
        if self.direction not in ("left", "right"):
            raise ValueError(f"facing must be left or right, got {self.direction!r}")

    @property
    def sign(self) -> int:
        return 1 if self.direction == "right" else -1


def lowest_point(chain: ContourChain, facing: Facing = Facing("right")) -> Point:
    """Max-y chain point; ties break toward the facing direction."""
    if not chain.points:
        raise ValueError("empty chain")
    return max(chain.points, key=lambda p: (p[1], facing.sign * p[0]))


def _most_anterior(chain: ContourChain, facing: Facing) -> Point:
    """Extreme point in the facing direction; ties break downward."""
    return max(chain.points, key=lambda p: (facing.sign * p[0], p[1]))


def _cumulative_lengths(points) -> list[float]:
    out = [0.0]
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        out.append(out[-1] + math.hypot(x1 - x0, y1 - y0))
    return out


def _path_between(chain: ContourChain, ia: int, ib: int):
    """Points from index ia to ib; closed chains take the shorter way round."""
    pts = list(chain.points)
    if not chain.closed:
        step = 1 if ib >= ia else -1
        return pts[ia:ib + step:step] if step == 1 else pts[ia:None if ib == 0 else ib - 1:-1]
    n = len(pts)
    forward = [pts[(ia + k) % n] for k in range((ib - ia) % n + 1)]
    backward = [pts[(ia - k) % n] for k in range((ia - ib) % n + 1)]
    len_f = _cumulative_lengths(forward)[-1]
    len_b = _cumulative_lengths(backward)[-1]
    return forward if len_f <= len_b else backward


def arc_midpoint(chain: ContourChain, a: Point, b: Point) -> Point:
    """Chain point halfway between a and b by arc length (shorter path)."""
    try:
        ia = chain.points.index((int(round(a[0])), int(round(a[1]))))
        ib = chain.points.index((int(round(b[0])), int(round(b[1]))))
    except ValueError:
        raise PointNotOnChain(f"{a} or {b} not on chain") from None
    if ia == ib:
        return chain.points[ia]
    path = _path_between(chain, ia, ib)
    lengths = _cumulative_lengths(path)
    half = lengths[-1] / 2.0
    best = min(range(len(path)), key=lambda i: (abs(lengths[i] - half), i))
    return path[best]


def _chord_max_point(chain: ContourChain, a: Point, b: Point) -> Point:
    """Chain point between a and b farthest from the a-b chord."""
    ia = chain.points.index((int(round(a[0])), int(round(a[1]))))
    ib = chain.points.index((int(round(b[0])), int(round(b[1]))))
    if ia == ib:
        return chain.points[ia]
    path = _path_between(chain, ia, ib)
    ax, ay = path[0]
    bx, by = path[-1]
    nx, ny = by - ay, ax - bx  # normal of the chord
    norm = math.hypot(nx, ny)
    if norm == 0:
        return path[0]
    best = max(range(len(path)),
               key=lambda i: (abs((path[i][0] - ax) * nx + (path[i][1] - ay) * ny) / norm,
                              -i))
    return path[best]


@dataclass(frozen=True)
class CannyParams:
    sigma: float = 1.4
    low_ratio: float = 0.08
    high_ratio: float = 0.20


@dataclass(frozen=True)
class EnhanceParams:
    tile: int = 64
    clip_limit: float = 4.0


def detect_chin(img: GrayImage, model: RegionModel, facing: Facing,
                canny_params: CannyParams = CannyParams(),
                enhance: EnhanceParams | None = EnhanceParams(),
                gn_rule: str = "arc_mid",
                min_chain_px: int = MIN_CHAIN_PX) -> dict[str, Point]:
    """Locate Me, Pog, Gn on the traced symphysis contour.

    Returns full-image coordinates. Raises NoContourFound when no chain
    of at least `min_chain_px` pixels shows up in the joint window, and
    DegenerateContour when Pog and Me coincide.
    """
    window = region_for(model, "Me", img)
    window = window.union_bbox(region_for(model, "Pog", img))
    window = window.union_bbox(region_for(model, "Gn", img))
    part = crop(img, window)
    raster = part.image
    if enhance is not None:
        raster = enhance_clamped(raster, enhance.tile, enhance.clip_limit)
    edges = canny(raster, canny_params.sigma, canny_params.low_ratio,
                  canny_params.high_ratio)
    chains = [c for c in trace_contours(edges) if len(c) >= min_chain_px]
    if not chains:
        raise NoContourFound(
            f"no contour of >= {min_chain_px} px inside {window}")

    def lowest_y(chain):
        return max(p[1] for p in chain.points)

    chin = max(chains, key=lambda c: (lowest_y(c), len(c)))

    me = lowest_point(chin, facing)
    pog = _most_anterior(chin, facing)
    if me == pog:
        raise DegenerateContour("Pog and Me coincide on the selected chain")
    if gn_rule == "arc_mid":
        gn = arc_midpoint(chin, pog, me)
    elif gn_rule == "chord_max":
        gn = _chord_max_point(chin, pog, me)
    else:
        raise ValueError(f"unknown gn rule {gn_rule!r}")

    return {
        "Me": part.to_full_frame(*_as_float(me)),
        "Pog": part.to_full_frame(*_as_float(pog)),
        "Gn": part.to_full_frame(*_as_float(gn)),
    }


def _as_float(p) -> Point:
    return float(p[0]), float(p[1])
