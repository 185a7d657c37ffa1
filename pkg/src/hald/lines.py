"""Direct estimation of the clinically required lines.

The analyses consume inclinations, not endpoint positions, so the four
lines are produced directly: the Frankfort horizontal picks whichever of
two candidates (the matched Or-Po direction, or the S-N direction bent
toward horizontal by a fixed offset) lies closer to the true horizontal;
the incisor axes and the mandibular lower border are fitted to edge
pixels inside their learned windows with a seeded RANSAC followed by
orthogonal regression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .dataset import GrayImage, Point
from .edges import canny
from .errors import (
    AllPointsCoincident,
    CoincidentPoints,
    NonMonotonicThresholds,
    ParseError,
    TooFewEdgePixels,
)
from .imaging import Region, crop, enhance_clamped

MM_THRESHOLDS = (1.0, 2.0, 3.0, 4.0)


@dataclass(frozen=True)
class Line2D:
    """Undirected 2-D line: a point, a unit direction, and its inclination.

    Inclination is the signed angle in degrees from the image horizontal
    (y grows downward) in (-90, 90]; vertical lines report exactly 90.
    """

    point: Point
    direction: tuple[float, float]
    inclination_deg: float

    @staticmethod
    def from_direction(point: Point, dx: float, dy: float) -> "Line2D":
        norm = math.hypot(dx, dy)
        if norm == 0:
            raise CoincidentPoints("zero-length direction")
        dx, dy = dx / norm, dy / norm
        if dx < 0 or (dx == 0 and dy < 0):
            dx, dy = -dx, -dy
        inclination = math.degrees(math.atan2(dy, dx))
        if inclination == -90.0:
            inclination = 90.0
        return Line2D(point, (dx, dy), inclination)

    @staticmethod
    def from_points(a: Point, b: Point) -> "Line2D":
        if a == b:
            raise CoincidentPoints(f"identical points {a}")
        return Line2D.from_direction(a, b[0] - a[0], b[1] - a[1])

    @staticmethod
    def from_inclination(point: Point, inclination_deg: float) -> "Line2D":
        rad = math.radians(inclination_deg)
        return Line2D.from_direction(point, math.cos(rad), math.sin(rad))


def fit_line_tls(points) -> Line2D:
    """Orthogonal regression through the centroid of a point set.

    The direction is the principal eigenvector of the 2x2 scatter
    matrix, which handles vertical lines exactly.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValueError("need a list of at least two (x, y) points")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    scatter = centered.T @ centered
    if not scatter.trace() > 0:
        raise AllPointsCoincident("all points identical")
    eigvals, eigvecs = np.linalg.eigh(scatter)
    principal = eigvecs[:, int(np.argmax(eigvals))]
    return Line2D.from_direction((float(centroid[0]), float(centroid[1])),
                                 float(principal[0]), float(principal[1]))


def orthogonal_residual(line: Line2D, points) -> float:
    """Sum of squared perpendicular distances from points to the line."""
    pts = np.asarray(points, dtype=np.float64)
    nx, ny = -line.direction[1], line.direction[0]
    d = (pts[:, 0] - line.point[0]) * nx + (pts[:, 1] - line.point[1]) * ny
    return float(np.sum(d * d))


def _toward_horizontal(inclination: float, offset: float) -> float:
    """Shift an inclination by `offset` degrees toward zero."""
    return inclination - math.copysign(offset, inclination) if inclination != 0 \
        else inclination - offset


def frankfort_candidates(or_pt: Point, po_pt: Point, s_pt: Point, n_pt: Point,
                         sn_offset_deg: float = 7.0) -> tuple[float, float]:
    """The two candidate inclinations: matched Or-Po, and bent S-N."""
    cand_a = Line2D.from_points(or_pt, po_pt).inclination_deg
    cand_b = _toward_horizontal(Line2D.from_points(s_pt, n_pt).inclination_deg,
                                sn_offset_deg)
    return cand_a, cand_b


def frankfort_line(or_pt: Point, po_pt: Point, s_pt: Point, n_pt: Point,
                   sn_offset_deg: float = 7.0) -> Line2D:
    """Frankfort horizontal through Or.

    Candidate A is the inclination of the matched Or-Po pair; candidate
    B bends the S-N inclination toward horizontal by the fixed offset.
    The candidate closer to the true horizontal wins.
    """
    cand_a, cand_b = frankfort_candidates(or_pt, po_pt, s_pt, n_pt,
                                          sn_offset_deg)
    winner = cand_a if abs(cand_a) <= abs(cand_b) else cand_b
    return Line2D.from_inclination(or_pt, winner)


@dataclass(frozen=True)
class RansacParams:
    seed: int = 1234
    iterations: int = 500
    inlier_band: float = 2.0
    min_inliers: int = 10


@dataclass(frozen=True)
class EdgeLineParams:
    canny_sigma: float = 1.4
    canny_low: float = 0.08
    canny_high: float = 0.20
    enhance_tile: int = 64
    enhance_clip: float = 4.0
    enhance_first: bool = True
    ransac: RansacParams = RansacParams()


def _ransac_line(pts: np.ndarray, params: RansacParams) -> np.ndarray:
    """Inlier mask of the dominant linear structure (seeded, deterministic)."""
    rng = np.random.default_rng(params.seed)
    n = len(pts)
    best_count = -1
    best_mask = None
    for _ in range(params.iterations):
        i, j = rng.choice(n, size=2, replace=False)
        dx, dy = pts[j] - pts[i]
        norm = math.hypot(dx, dy)
        if norm == 0:
            continue
        nx, ny = -dy / norm, dx / norm
        d = np.abs((pts[:, 0] - pts[i, 0]) * nx + (pts[:, 1] - pts[i, 1]) * ny)
        mask = d <= params.inlier_band
        count = int(mask.sum())
        if count > best_count:
            best_count = count
            best_mask = mask
    if best_mask is None or best_count < params.min_inliers:
        raise TooFewEdgePixels(
            f"best model has {max(best_count, 0)} inliers, need {params.min_inliers}")
    return best_mask


def estimate_edge_line(img: GrayImage, region: Region,
                       params: EdgeLineParams = EdgeLineParams()) -> Line2D:
    """Fit the dominant straight edge inside a window.

    Enhance, extract edges, pick the dominant linear structure with
    RANSAC, then refine on the inliers with orthogonal regression. The
    returned line lives in full-image coordinates.
    """
    part = crop(img, region)
    raster = part.image
    if params.enhance_first:
        raster = enhance_clamped(raster, params.enhance_tile, params.enhance_clip)
    edges = canny(raster, params.canny_sigma, params.canny_low, params.canny_high)
    ys, xs = np.nonzero(edges.edge)
    if len(xs) < 2:
        raise TooFewEdgePixels(f"{len(xs)} edge pixels in {region}")
    pts = np.stack([xs, ys], axis=1).astype(np.float64)
    mask = _ransac_line(pts, params.ransac)
    fitted = fit_line_tls(pts[mask])
    return Line2D.from_direction(part.to_full_frame(*fitted.point),
                                 *fitted.direction)


# --- degree-equivalent thresholds ----------------------------------------------

def degree_threshold(x_mm: float, line_length_mm: float,
                     endpoints_independent: bool) -> float:
    """Angular error equivalent to an x-mm endpoint displacement.

    Each endpoint moves perpendicular to the line in opposite senses, by
    x/2 mm when at least one endpoint is independently detectable and by
    x mm otherwise; the equivalent angle is atan(2d / length).
    """
    if not x_mm > 0 or not line_length_mm > 0:
        raise ValueError("x_mm and line_length_mm must be positive")
    d = x_mm / 2.0 if endpoints_independent else x_mm
    return math.degrees(math.atan(2.0 * d / line_length_mm))


@dataclass(frozen=True)
class DegreeThresholds:
    """Per-line angular thresholds matching the 1/2/3/4 mm point levels."""

    rows: dict[str, tuple[float, float, float, float]]

    def __post_init__(self):
        for name, row in self.rows.items():
            if not all(a < b for a, b in zip(row, row[1:])):
                raise NonMonotonicThresholds(f"{name}: {row}")

    def __getitem__(self, name: str) -> tuple[float, float, float, float]:
        return self.rows[name]


def thresholds_from_lengths(lengths_mm: dict[str, float],
                            independence: dict[str, bool]) -> DegreeThresholds:
    rows = {}
    for name, length in lengths_mm.items():
        rows[name] = tuple(degree_threshold(x, length, independence[name])
                           for x in MM_THRESHOLDS)
    return DegreeThresholds(rows)


def save_degree_thresholds(thresholds: DegreeThresholds, path) -> None:
    lines = ["# degthr v1"]
    for name, row in thresholds.rows.items():
        lines.append(name + " " + " ".join(f"{t!r}" for t in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_degree_thresholds(path) -> DegreeThresholds:
    path = Path(path)
    rows: dict[str, tuple[float, float, float, float]] = {}
    for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != 5:
            raise ParseError(path, line_no, f"expected 'name t1 t2 t3 t4', got {raw!r}")
        try:
            rows[fields[0]] = tuple(float(f) for f in fields[1:])
        except ValueError:
            raise ParseError(path, line_no, "non-numeric threshold") from None
    return DegreeThresholds(rows)


def default_degree_thresholds() -> DegreeThresholds:
    """The thresholds shipped with the package (clinical line lengths)."""
    ref = resources.files("hald").joinpath("data/degree_thresholds.degthr")
    with resources.as_file(ref) as path:
        return load_degree_thresholds(path)
