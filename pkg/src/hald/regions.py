"""Learned per-landmark search windows.

Each landmark's window is learned from training annotations in
normalized coordinates (u = x/width, v = y/height) as the mean position
plus max-absolute-deviation half-extents, inflated by a safety margin.
Every training position is therefore inside its window by construction,
and the margin guards test-time variation. Windows are also learned for
the edge-fitted clinical lines, covering both endpoint distributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import GrayImage, LandmarkSet
from .errors import MissingLandmark, ParseError, UnknownLandmark
from .imaging import Region
from .landmarks import LANDMARK_NAMES, LINE_REGION_KEYS

DEFAULT_MARGIN = 0.02

# cover the raw landmarks plus the synthetic line keys, in file order
_MODEL_KEYS = LANDMARK_NAMES + tuple(LINE_REGION_KEYS[k] for k in sorted(LINE_REGION_KEYS))

_LINE_KEY_ENDPOINTS = {
    "Go-Me": ("Go", "Me"),
    "UIA-UIT": ("UIA", "UIT"),
    "LIA-LIT": ("LIA", "LIT"),
}


@dataclass(frozen=True)
class RegionSpec:
    u: float   # normalized center
    v: float
    du: float  # normalized half-extents
    dv: float


@dataclass(frozen=True)
class RegionModel:
    entries: dict[str, RegionSpec]
    margin: float
    trained_on: int

    def __contains__(self, name: str) -> bool:
        return name in self.entries


def _spread(values: np.ndarray, margin: float) -> tuple[float, float]:
    """Center and margin-inflated half-extent of a 1-D sample."""
    center = float(values.mean())
    half = float(np.abs(values - center).max()) + margin
    return center, max(half, 1e-9)


def learn_regions(train, margin: float = DEFAULT_MARGIN,
                  case_ids=None) -> RegionModel:
    """Learn search windows from (image dims, expert LandmarkSet) pairs.

    `train` items are ((width, height), LandmarkSet); every case must
    carry all sixteen landmarks. Line windows take the bounding box of
    both endpoint samples.
    """
    train = list(train)
    if not train:
        raise ValueError("empty training list")
    if margin < 0:
        raise ValueError(f"margin must be >= 0, got {margin}")
    ids = list(case_ids) if case_ids is not None else [str(i) for i in range(len(train))]

    norm: dict[str, list[tuple[float, float]]] = {n: [] for n in LANDMARK_NAMES}
    for case, ((width, height), landmarks) in zip(ids, train):
        for name in LANDMARK_NAMES:
            if name not in landmarks:
                raise MissingLandmark(case, name)
            x, y = landmarks[name]
            norm[name].append((x / width, y / height))

    entries: dict[str, RegionSpec] = {}
    for name in LANDMARK_NAMES:
        pts = np.asarray(norm[name])
        u, du = _spread(pts[:, 0], margin)
        v, dv = _spread(pts[:, 1], margin)
        entries[name] = RegionSpec(u, v, du, dv)
    for key, (end_a, end_b) in _LINE_KEY_ENDPOINTS.items():
        pts = np.asarray(norm[end_a] + norm[end_b])
        u, du = _spread(pts[:, 0], margin)
        v, dv = _spread(pts[:, 1], margin)
        entries[key] = RegionSpec(u, v, du, dv)
    return RegionModel(entries=entries, margin=margin, trained_on=len(train))


def region_for(model: RegionModel, name: str, img: GrayImage) -> Region:
    """Instantiate a learned window on an image, clipped to its bounds."""
    if name not in model.entries:
        raise UnknownLandmark(name)
    spec = model.entries[name]
    x0 = math.floor((spec.u - spec.du) * img.width)
    x1 = math.ceil((spec.u + spec.du) * img.width)
    y0 = math.floor((spec.v - spec.dv) * img.height)
    y1 = math.ceil((spec.v + spec.dv) * img.height)
    x0 = max(x0, 0)
    y0 = max(y0, 0)
    x1 = min(max(x1, x0 + 1), img.width)
    y1 = min(max(y1, y0 + 1), img.height)
    x0 = min(x0, x1 - 1)
    y0 = min(y0, y1 - 1)
    return Region(x0, y0, x1 - x0, y1 - y0)


def save_region_model(model: RegionModel, path) -> None:
    lines = [f"# regions v1 margin={model.margin!r} n={model.trained_on}"]
    for name in _MODEL_KEYS:
        spec = model.entries[name]
        lines.append(f"{name} {spec.u!r} {spec.v!r} {spec.du!r} {spec.dv!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_region_model(path) -> RegionModel:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    margin = 0.0
    trained_on = 0
    entries: dict[str, RegionSpec] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for token in line[1:].split():
                if token.startswith("margin="):
                    margin = float(token[len("margin="):])
                elif token.startswith("n="):
                    trained_on = int(token[len("n="):])
            continue
        fields = line.split()
        if len(fields) != 5:
            raise ParseError(path, line_no, f"expected 'name u v du dv', got {raw!r}")
        name = fields[0]
        if name not in _MODEL_KEYS:
            raise UnknownLandmark(name)
        try:
            u, v, du, dv = (float(f) for f in fields[1:])
        except ValueError:
            raise ParseError(path, line_no, "non-numeric region values") from None
        entries[name] = RegionSpec(u, v, du, dv)
    return RegionModel(entries=entries, margin=margin, trained_on=trained_on)
