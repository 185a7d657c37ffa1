import numpy as np
import pytest

from hald.dataset import GrayImage
from hald.edges import (
    EdgeMap,
    _non_maximum_suppression,
    canny,
    edge_map_image,
    trace_contours,
)
from hald.imaging import gaussian_blur, sobel_gradients


def gray(arr):
    return GrayImage(np.asarray(arr, dtype=np.uint8))


def disk_image(radius=20.0, size=64, cx=None, cy=None, fg=255, bg=0):
    cx = size / 2 if cx is None else cx
    cy = size / 2 if cy is None else cy
    yy, xx = np.mgrid[0:size, 0:size]
    arr = np.where((xx - cx) ** 2 + (yy - cy) ** 2 <= radius ** 2, fg, bg)
    return gray(arr), (cx, cy)


def assert_nms_invariant(img, edges, sigma):
    """No edge pixel has a same-direction neighbor of strictly greater
    magnitude (recomputed from scratch, not via the implementation)."""
    grad = sobel_gradients(gaussian_blur(img, sigma))
    mag, theta = grad.magnitude, grad.direction
    offsets = ((1, 0), (1, 1), (0, 1), (-1, 1))
    h, w = mag.shape
    ys, xs = np.nonzero(edges.edge)
    for y, x in zip(ys, xs):
        deg = np.degrees(theta[y, x]) % 180.0
        sector = int(np.floor((deg + 22.5) / 45.0)) % 4
        dx, dy = offsets[sector]
        for sx, sy in ((dx, dy), (-dx, -dy)):
            ny, nx = y + sy, x + sx
            if 0 <= ny < h and 0 <= nx < w:
                assert mag[ny, nx] <= mag[y, x]


def test_flat_image_no_edges():
    img = gray(np.full((20, 20), 77))
    edges = canny(img, 1.4, 0.08, 0.20)
    assert edges.edge.sum() == 0


def test_vertical_step_single_column():
    arr = np.zeros((20, 20), dtype=np.uint8)
    arr[:, 10:] = 255
    img = gray(arr)
    edges = canny(img, 1.4, 0.08, 0.20)
    ys, xs = np.nonzero(edges.edge)
    cols = set(xs.tolist())
    assert len(cols) == 1
    assert cols.pop() in (9, 10)
    assert len(set(ys.tolist())) == 20
    assert_nms_invariant(img, edges, 1.4)


def test_disk_edge_hausdorff_and_thinness():
    img, (cx, cy) = disk_image()
    edges = canny(img, 1.4, 0.08, 0.20)
    ys, xs = np.nonzero(edges.edge)
    assert len(xs) > 0
    # every edge pixel close to the analytic circle
    radial = np.abs(np.hypot(xs - cx, ys - cy) - 20.0)
    assert radial.max() <= 1.0
    # every circle point close to some edge pixel
    phis = np.linspace(0.0, 2 * np.pi, 1440, endpoint=False)
    circle = np.stack([cx + 20 * np.cos(phis), cy + 20 * np.sin(phis)], axis=1)
    pts = np.stack([xs, ys], axis=1).astype(float)
    nearest = np.sqrt(((circle[:, None] - pts[None]) ** 2).sum(-1)).min(axis=1)
    assert nearest.max() <= 1.0
    assert_nms_invariant(img, edges, 1.4)
    # thinness in the chain-graph sense: the ring is one closed cycle,
    # so every pixel has exactly two reduced-adjacency neighbors
    chains = trace_contours(edges)
    assert len(chains) == 1 and chains[0].closed
    assert len(chains[0]) == len(xs)


def test_hysteresis_monotone_in_low_ratio():
    rng = np.random.default_rng(11)
    arr = rng.integers(0, 256, size=(48, 48)).astype(np.uint8)
    img = gray(arr)
    previous = None
    for low in (0.15, 0.10, 0.05, 0.02):
        edges = canny(img, 1.4, low, 0.2)
        if previous is not None:
            assert np.all(edges.edge[previous])  # nothing removed
        previous = edges.edge


def test_canny_rejects_bad_ratios():
    img = gray(np.zeros((10, 10)))
    with pytest.raises(ValueError):
        canny(img, 1.4, 0.3, 0.2)
    with pytest.raises(ValueError):
        canny(img, 1.4, 0.1, 1.5)


def test_edge_map_image():
    edge = np.zeros((4, 4), dtype=bool)
    edge[1, 2] = True
    out = edge_map_image(EdgeMap(edge))
    assert out.pixels[1, 2] == 255 and out.pixels.sum() == 255


# --- contour tracing -----------------------------------------------------------

def edge_map_from(points, shape=(16, 16)):
    arr = np.zeros(shape, dtype=bool)
    for x, y in points:
        arr[y, x] = True
    return EdgeMap(arr)


def test_single_run_one_chain():
    edges = edge_map_from([(x, 5) for x in range(3, 8)])
    chains = trace_contours(edges)
    assert len(chains) == 1
    assert not chains[0].closed
    assert len(chains[0]) == 5
    for (x0, y0), (x1, y1) in zip(chains[0].points, chains[0].points[1:]):
        assert max(abs(x1 - x0), abs(y1 - y0)) == 1


def test_empty_map():
    assert trace_contours(edge_map_from([])) == []


def test_two_disjoint_circles_partition():
    img = np.zeros((80, 140), dtype=np.uint8)
    yy, xx = np.mgrid[0:80, 0:140]
    img[(xx - 35) ** 2 + (yy - 40) ** 2 <= 18 ** 2] = 255
    img[(xx - 100) ** 2 + (yy - 40) ** 2 <= 14 ** 2] = 200
    edges = canny(gray(img), 1.4, 0.08, 0.20)
    chains = trace_contours(edges)
    assert len(chains) == 2
    assert all(c.closed for c in chains)
    union = set()
    total = 0
    for chain in chains:
        union |= set(chain.points)
        total += len(chain)
    ys, xs = np.nonzero(edges.edge)
    assert total == len(union) == len(xs)


def test_partition_on_random_sparse_maps():
    rng = np.random.default_rng(12)
    for _ in range(10):
        arr = rng.random((24, 24)) < 0.15
        edges = EdgeMap(arr)
        chains = trace_contours(edges)
        union = set()
        total = 0
        for chain in chains:
            union |= set(chain.points)
            total += len(chain)
        assert total == len(union) == int(arr.sum())


def test_junction_splits_chains():
    # a plus sign: four arms meeting at one junction pixel
    arms = ([(8, y) for y in range(3, 8)] + [(8, y) for y in range(9, 14)]
            + [(x, 8) for x in range(3, 8)] + [(x, 8) for x in range(9, 14)])
    edges = edge_map_from(arms + [(8, 8)])
    chains = trace_contours(edges)
    assert len(chains) == 5  # four arms plus the junction pixel itself
    lengths = sorted(len(c) for c in chains)
    assert lengths == [1, 5, 5, 5, 5]


def test_chains_sorted_longest_first():
    edges = edge_map_from([(x, 2) for x in range(3)]
                          + [(x, 10) for x in range(8)])
    chains = trace_contours(edges)
    assert [len(c) for c in chains] == [8, 3]
