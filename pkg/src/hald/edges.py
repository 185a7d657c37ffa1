"""Canny edge detection and 8-connected contour chain extraction.

Thresholds are relative to the strongest gradient in the given raster, so
detection behaves consistently inside small search-region crops of very
different contrast.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .dataset import GrayImage
from .imaging import gaussian_blur, sobel_gradients

# Gradient-direction sector -> offset of the "forward" neighbor. The
# backward neighbor is the negation. Sector 0 is a horizontal gradient
# (vertical edge), sectors advance by 45 degrees.
_SECTOR_FORWARD = ((1, 0), (1, 1), (0, 1), (-1, 1))


@dataclass(frozen=True)
class EdgeMap:
    edge: np.ndarray  # bool, shape (height, width)

    @property
    def width(self) -> int:
        return self.edge.shape[1]

    @property
    def height(self) -> int:
        return self.edge.shape[0]


@dataclass(frozen=True)
class ContourChain:
    """Ordered 8-connected pixel chain; closed chains do not repeat the start."""

    points: tuple[tuple[int, int], ...]  # (x, y)
    closed: bool

    def __len__(self):
        return len(self.points)


def _shifted(arr: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Neighbor values at offset (dx, dy); out-of-bounds reads as +inf so
    pixels whose gradient points out of the raster never pass suppression."""
    h, w = arr.shape
    out = np.full_like(arr, np.inf)
    src_y = slice(max(dy, 0), h + min(dy, 0))
    src_x = slice(max(dx, 0), w + min(dx, 0))
    dst_y = slice(max(-dy, 0), h + min(-dy, 0))
    dst_x = slice(max(-dx, 0), w + min(-dx, 0))
    out[dst_y, dst_x] = arr[src_y, src_x]
    return out


def _non_maximum_suppression(magnitude: np.ndarray,
                             direction: np.ndarray) -> np.ndarray:
    """Keep gradient-direction local maxima; plateau ties keep one pixel.

    A pixel survives when it is strictly greater than its forward
    neighbor and at least as large as its backward neighbor along the
    quantized gradient direction.
    """
    deg = np.degrees(direction) % 180.0
    sector = (np.floor((deg + 22.5) / 45.0).astype(np.int64)) % 4
    keep = np.zeros(magnitude.shape, dtype=bool)
    for s, (dx, dy) in enumerate(_SECTOR_FORWARD):
        forward = _shifted(magnitude, dx, dy)
        backward = _shifted(magnitude, -dx, -dy)
        keep |= (sector == s) & (magnitude > forward) & (magnitude >= backward)
    return keep


def _hysteresis(magnitude: np.ndarray, keep: np.ndarray,
                low: float, high: float) -> np.ndarray:
    strong = keep & (magnitude > high)
    weak = keep & (magnitude > low)
    edge = strong.copy()
    h, w = magnitude.shape
    queue = deque(zip(*np.nonzero(strong)))
    while queue:
        y, x = queue.popleft()
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w and weak[ny, nx] and not edge[ny, nx]:
                    edge[ny, nx] = True
                    queue.append((ny, nx))
    return edge


def canny(img, sigma: float = 1.4, low_ratio: float = 0.08,
          high_ratio: float = 0.20) -> EdgeMap:
    """Gaussian blur, Sobel, non-maximum suppression, hysteresis linking.

    The high threshold is high_ratio times the maximum gradient magnitude
    of this raster, the low threshold low_ratio times it; weak pixels
    survive only when 8-connected to a strong pixel through weak ones.
    """
    if not 0.0 < low_ratio < high_ratio <= 1.0:
        raise ValueError(f"need 0 < low < high <= 1, got {low_ratio}, {high_ratio}")
    blurred = gaussian_blur(img, sigma)
    grad = sobel_gradients(blurred)
    peak = float(grad.magnitude.max())
    if peak <= 1e-6:  # numerically flat raster
        return EdgeMap(np.zeros(grad.magnitude.shape, dtype=bool))
    keep = _non_maximum_suppression(grad.magnitude, grad.direction)
    edge = _hysteresis(grad.magnitude, keep, low_ratio * peak, high_ratio * peak)
    return EdgeMap(edge)


def edge_map_image(edges: EdgeMap, mm_per_pixel: float = 0.1) -> GrayImage:
    """Edge raster as a writable image (edge=255) for overlay inspection."""
    return GrayImage((edges.edge.astype(np.uint8) * 255), mm_per_pixel)


# --- chain extraction ---------------------------------------------------------

_NEIGHBORS8 = ((-1, -1), (0, -1), (1, -1), (-1, 0),
               (1, 0), (-1, 1), (0, 1), (1, 1))


def _adjacency(pixel_set):
    """Reduced 8-connectivity: diagonal links with a 4-connected shortcut
    are dropped, so staircase corners do not masquerade as junctions."""
    adj = {}
    for x, y in pixel_set:
        found = []
        for dx, dy in _NEIGHBORS8:
            q = (x + dx, y + dy)
            if q not in pixel_set:
                continue
            if dx != 0 and dy != 0 and ((x + dx, y) in pixel_set
                                        or (x, y + dy) in pixel_set):
                continue
            found.append(q)
        adj[(x, y)] = found
    return adj


def _trace_path(start, adj, allowed, visited):
    """Follow unvisited neighbors inside `allowed` from one endpoint."""
    chain = [start]
    visited.add(start)
    current = start
    while True:
        nxt = [q for q in adj[current] if q in allowed and q not in visited]
        if not nxt:
            break
        current = min(nxt, key=lambda p: (p[1], p[0]))
        chain.append(current)
        visited.add(current)
    return chain


def trace_contours(edges: EdgeMap) -> list[ContourChain]:
    """Partition edge pixels into maximal 8-connected chains.

    Junction pixels (three or more neighbors in the reduced adjacency)
    terminate chains; the non-junction remainder splits into simple
    paths and cycles. Every edge pixel lands in exactly one chain.
    Chains come back longest first.
    """
    ys, xs = np.nonzero(edges.edge)
    pixels = [(int(x), int(y)) for x, y in zip(xs, ys)]
    pixel_set = set(pixels)
    scan_order = sorted(pixels, key=lambda p: (p[1], p[0]))

    adj = _adjacency(pixel_set)
    junctions = {p for p in pixels if len(adj[p]) >= 3}
    simple = pixel_set - junctions

    visited: set = set()
    chains: list[ContourChain] = []

    def simple_degree(p):
        return sum(1 for q in adj[p] if q in simple)

    # open paths first: start from pixels with at most one simple neighbor
    for p in scan_order:
        if p in simple and p not in visited and simple_degree(p) <= 1:
            chains.append(
                ContourChain(tuple(_trace_path(p, adj, simple, visited)), False))
    # what remains of the simple subgraph are cycles
    for p in scan_order:
        if p in simple and p not in visited:
            chain = _trace_path(p, adj, simple, visited)
            chains.append(ContourChain(tuple(chain), True))
    # junction pixels form their own short chains
    for p in scan_order:
        if p in junctions and p not in visited:
            chains.append(
                ContourChain(tuple(_trace_path(p, adj, junctions, visited)), False))

    chains.sort(key=lambda c: (-len(c.points), c.points[0][1], c.points[0][0]))
    return chains
