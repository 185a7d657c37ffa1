"""Radiograph and annotation ingestion.

Images are binary PGM (P5, maxval 255) or 8-bit grayscale PNG. Landmark
annotations live in sidecar ``.lmk`` text files:

    # mm_per_pixel=0.1
    Me<TAB>412.5<TAB>980.0

Coordinates are pixels, origin top-left, x rightward, y downward. Lines
starting with ``#`` are comments; a ``# mm_per_pixel=...`` comment carries
the calibration and an optional ``# facing=left|right`` comment records
the profile orientation.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateLandmark,
    NameMismatch,
    ParseError,
    TooFewCases,
    UnknownLandmark,
    UnreadableFile,
    UnsupportedFormat,
    ZeroDimension,
)
from .landmarks import LANDMARK_NAMES, canonical_name

DEFAULT_MM_PER_PIXEL = 0.1

Point = tuple[float, float]


@dataclass(frozen=True)
class GrayImage:
    """8-bit single-channel raster with physical calibration."""

    pixels: np.ndarray  # uint8, shape (height, width)
    mm_per_pixel: float = DEFAULT_MM_PER_PIXEL

    def __post_init__(self):
        if self.pixels.ndim != 2 or self.pixels.dtype != np.uint8:
            raise ValueError("pixels must be a 2-D uint8 array")
        if self.pixels.shape[0] < 1 or self.pixels.shape[1] < 1:
            raise ZeroDimension("image has an empty dimension")
        if not self.mm_per_pixel > 0:
            raise ValueError("mm_per_pixel must be positive")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass
class LandmarkSet:
    """Named 2-D points for one radiograph."""

    entries: dict[str, Point] = field(default_factory=dict)
    source: str = "expert"  # "expert" or "detected"

    def __post_init__(self):
        for name in self.entries:
            if name not in LANDMARK_NAMES:
                raise UnknownLandmark(name)
        if self.source not in ("expert", "detected"):
            raise ValueError(f"bad source {self.source!r}")

    def __getitem__(self, name: str) -> Point:
        return self.entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self.entries

    def names(self):
        return self.entries.keys()


@dataclass(frozen=True)
class CorpusSplit:
    train: tuple[str, ...]
    test: tuple[str, ...]
    seed: int


# --- PGM --------------------------------------------------------------------

def _read_pnm_tokens(data: bytes, count: int):
    """Read `count` whitespace-separated header tokens, skipping # comments.

    Returns (tokens, offset of first raster byte).
    """
    tokens = []
    i = 0
    n = len(data)
    while len(tokens) < count:
        if i >= n:
            raise UnsupportedFormat("truncated PNM header")
        c = data[i:i + 1]
        if c == b"#":
            j = data.find(b"\n", i)
            i = n if j < 0 else j + 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < n and not data[j:j + 1].isspace() and data[j:j + 1] != b"#":
                j += 1
            tokens.append(data[i:j])
            i = j
    # exactly one whitespace byte separates the header from the raster
    if i >= n or not data[i:i + 1].isspace():
        raise UnsupportedFormat("malformed PNM header")
    return tokens, i + 1


def _parse_pgm(data: bytes) -> np.ndarray:
    if not data.startswith(b"P5"):
        raise UnsupportedFormat("not a binary PGM (P5) file")
    tokens, offset = _read_pnm_tokens(data[2:], 3)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise UnsupportedFormat("non-numeric PGM header") from None
    if maxval != 255:
        raise UnsupportedFormat(f"PGM maxval {maxval} (only 255 supported)")
    if width == 0 or height == 0:
        raise ZeroDimension("PGM with zero width or height")
    raster = data[2 + offset:2 + offset + width * height]
    if len(raster) < width * height:
        raise UnsupportedFormat("PGM raster shorter than header promises")
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).copy()


def _parse_png(path: Path) -> np.ndarray:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            if im.mode != "L":
                raise UnsupportedFormat(
                    f"PNG mode {im.mode!r} (only 8-bit grayscale supported)")
            arr = np.asarray(im, dtype=np.uint8)
    except UnidentifiedImageError as exc:
        raise UnreadableFile(f"cannot decode {path}") from exc
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ZeroDimension(f"{path} has an empty dimension")
    return arr


def _sidecar_mm_per_pixel(path: Path) -> float:
    """Calibration from the paired annotation file, if one exists."""
    stem = path.with_suffix("")
    for candidate in (stem.with_suffix(".lmk"),
                      Path(str(stem) + ".a.lmk"),
                      Path(str(stem) + ".b.lmk")):
        if candidate.exists():
            header = read_case_header(candidate)
            if header.mm_per_pixel is not None:
                return header.mm_per_pixel
    return DEFAULT_MM_PER_PIXEL


def load_image(path) -> GrayImage:
    """Load a PGM/PNG radiograph; calibration comes from its sidecar .lmk."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc
    if data.startswith(b"P5"):
        pixels = _parse_pgm(data)
    elif data.startswith(b"\x89PNG"):
        pixels = _parse_png(path)
    else:
        raise UnreadableFile(f"{path} is neither binary PGM nor PNG")
    return GrayImage(pixels, mm_per_pixel=_sidecar_mm_per_pixel(path))


def save_image(img: GrayImage, path) -> None:
    """Write a binary PGM (P5), maxval 255."""
    path = Path(path)
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    path.write_bytes(header + img.pixels.tobytes())


# --- annotations ------------------------------------------------------------

_MM_RE = re.compile(r"#\s*mm_per_pixel\s*=\s*(\S+)")
_FACING_RE = re.compile(r"#\s*facing\s*=\s*(left|right)\s*$")


@dataclass(frozen=True)
class CaseHeader:
    mm_per_pixel: float | None
    facing: str | None


def read_case_header(path) -> CaseHeader:
    """Scan an .lmk file's comment lines for calibration and facing."""
    mm = None
    facing = None
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line.startswith("#"):
            continue
        m = _MM_RE.match(line)
        if m and mm is None:
            try:
                mm = float(m.group(1))
            except ValueError:
                pass
        m = _FACING_RE.match(line)
        if m and facing is None:
            facing = m.group(1)
    return CaseHeader(mm_per_pixel=mm, facing=facing)


def load_annotations(path) -> tuple[LandmarkSet, float]:
    """Parse an .lmk file into a LandmarkSet plus calibration."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc

    mm = None
    entries: dict[str, Point] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            m = _MM_RE.match(line)
            if m and mm is None:
                try:
                    mm = float(m.group(1))
                except ValueError:
                    raise ParseError(path, line_no, "bad mm_per_pixel value")
                if not mm > 0:
                    raise ParseError(path, line_no, "mm_per_pixel must be positive")
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise ParseError(path, line_no,
                             f"expected 'Name<TAB>x<TAB>y', got {raw!r}")
        name = canonical_name(fields[0])
        if name is None:
            raise UnknownLandmark(fields[0])
        if name in entries:
            raise DuplicateLandmark(name)
        try:
            x, y = float(fields[1]), float(fields[2])
        except ValueError:
            raise ParseError(path, line_no, f"bad coordinates in {raw!r}") from None
        entries[name] = (x, y)
    return LandmarkSet(entries, source="expert"), (mm if mm is not None
                                                   else DEFAULT_MM_PER_PIXEL)


def save_annotations(lm: LandmarkSet, path, mm_per_pixel: float,
                     facing: str | None = None) -> None:
    """Write a LandmarkSet in the .lmk grammar (catalogue order)."""
    lines = [f"# mm_per_pixel={mm_per_pixel!r}"]
    if facing is not None:
        lines.append(f"# facing={facing}")
    for name in LANDMARK_NAMES:
        if name in lm.entries:
            x, y = lm.entries[name]
            lines.append(f"{name}\t{x!r}\t{y!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def average_expert_sets(a: LandmarkSet, b: LandmarkSet) -> LandmarkSet:
    """Coordinate-wise mean of two expert annotations of the same case."""
    if set(a.entries) != set(b.entries):
        only_a = sorted(set(a.entries) - set(b.entries))
        only_b = sorted(set(b.entries) - set(a.entries))
        raise NameMismatch(f"expert sets disagree: a-only={only_a}, b-only={only_b}")
    entries = {}
    for name, (ax, ay) in a.entries.items():
        bx, by = b.entries[name]
        entries[name] = ((ax + bx) / 2.0, (ay + by) / 2.0)
    return LandmarkSet(entries, source="expert")


def split_corpus(case_ids, seed: int) -> CorpusSplit:
    """Deterministic shuffled half split; odd corpora put the extra in train."""
    ids = list(case_ids)
    if len(ids) < 2:
        raise TooFewCases(f"need at least 2 cases, got {len(ids)}")
    rng = random.Random(seed)
    rng.shuffle(ids)
    cut = (len(ids) + 1) // 2
    return CorpusSplit(train=tuple(ids[:cut]), test=tuple(ids[cut:]), seed=seed)
