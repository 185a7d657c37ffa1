import numpy as np
import pytest

from hald.dataset import GrayImage, LandmarkSet
from hald.errors import MissingLandmark, UnknownLandmark
from hald.imaging import Region
from hald.landmarks import LANDMARK_NAMES
from hald.regions import (
    RegionModel,
    RegionSpec,
    learn_regions,
    load_region_model,
    region_for,
    save_region_model,
)


def full_set(rng, width, height):
    return LandmarkSet({
        name: (rng.uniform(0.1, 0.9) * width, rng.uniform(0.1, 0.9) * height)
        for name in LANDMARK_NAMES})


def random_corpus(rng, n, width=640, height=800):
    return [((width, height), full_set(rng, width, height)) for _ in range(n)]


def test_single_case_margin_window():
    landmarks = LandmarkSet({name: (320.0, 400.0) for name in LANDMARK_NAMES})
    model = learn_regions([((640, 800), landmarks)], margin=0.05)
    spec = model.entries["Me"]
    assert spec.u == pytest.approx(0.5)
    assert spec.v == pytest.approx(0.5)
    assert spec.du == pytest.approx(0.05)
    assert spec.dv == pytest.approx(0.05)
    assert model.trained_on == 1


def test_two_case_extent_arithmetic():
    base = {name: (100.0, 100.0) for name in LANDMARK_NAMES}
    a = dict(base)
    b = dict(base)
    a["Me"] = (0.4 * 1000, 0.8 * 500)
    b["Me"] = (0.6 * 1000, 0.8 * 500)
    model = learn_regions([((1000, 500), LandmarkSet(a)),
                           ((1000, 500), LandmarkSet(b))], margin=0.0)
    spec = model.entries["Me"]
    assert spec.u == pytest.approx(0.5)
    assert spec.du == pytest.approx(0.1)
    assert spec.v == pytest.approx(0.8)


def test_coverage_all_training_points_inside():
    rng = np.random.default_rng(21)
    for margin in (0.0, 0.02):
        corpus = random_corpus(rng, 20)
        model = learn_regions(corpus, margin=margin)
        for (width, height), landmarks in corpus:
            img = GrayImage(np.zeros((height, width), dtype=np.uint8))
            for name in LANDMARK_NAMES:
                region = region_for(model, name, img)
                x, y = landmarks[name]
                assert region.contains_point(x, y)


def test_line_regions_cover_both_endpoints():
    rng = np.random.default_rng(22)
    corpus = random_corpus(rng, 12)
    model = learn_regions(corpus, margin=0.0)
    pairs = {"Go-Me": ("Go", "Me"), "UIA-UIT": ("UIA", "UIT"),
             "LIA-LIT": ("LIA", "LIT")}
    for (width, height), landmarks in corpus:
        img = GrayImage(np.zeros((height, width), dtype=np.uint8))
        for key, (end_a, end_b) in pairs.items():
            region = region_for(model, key, img)
            assert region.contains_point(*landmarks[end_a])
            assert region.contains_point(*landmarks[end_b])


def test_margin_monotonicity():
    rng = np.random.default_rng(23)
    corpus = random_corpus(rng, 8)
    small = learn_regions(corpus, margin=0.01)
    big = learn_regions(corpus, margin=0.05)
    for name in small.entries:
        assert big.entries[name].du >= small.entries[name].du
        assert big.entries[name].dv >= small.entries[name].dv


def test_order_independence():
    rng = np.random.default_rng(24)
    corpus = random_corpus(rng, 9)
    forward = learn_regions(corpus, margin=0.02)
    backward = learn_regions(list(reversed(corpus)), margin=0.02)
    for name in forward.entries:
        a, b = forward.entries[name], backward.entries[name]
        assert a.u == pytest.approx(b.u, abs=1e-12)
        assert a.du == pytest.approx(b.du, abs=1e-12)


def test_missing_landmark_names_case():
    entries = {name: (10.0, 10.0) for name in LANDMARK_NAMES if name != "S"}
    with pytest.raises(MissingLandmark) as err:
        learn_regions([((100, 100), LandmarkSet(entries))],
                      case_ids=["case07"])
    assert err.value.case == "case07"
    assert err.value.name == "S"


def test_region_for_scaling_arithmetic():
    model = RegionModel(entries={"Me": RegionSpec(0.5, 0.5, 0.1, 0.1)},
                        margin=0.0, trained_on=1)
    img = GrayImage(np.zeros((2000, 1000), dtype=np.uint8))
    region = region_for(model, "Me", img)
    assert region == Region(400, 800, 200, 400)


def test_region_for_clips_to_image():
    model = RegionModel(entries={"Me": RegionSpec(0.95, 0.5, 0.2, 0.1)},
                        margin=0.0, trained_on=1)
    img = GrayImage(np.zeros((100, 100), dtype=np.uint8))
    region = region_for(model, "Me", img)
    assert region.x1 <= 100 and region.x0 >= 0


def test_region_for_unknown_name():
    model = RegionModel(entries={}, margin=0.0, trained_on=0)
    img = GrayImage(np.zeros((10, 10), dtype=np.uint8))
    with pytest.raises(UnknownLandmark):
        region_for(model, "Me", img)


def test_denormalize_roundtrip():
    # an exactly representable region denormalizes without growth
    model = RegionModel(entries={"S": RegionSpec(0.25, 0.25, 0.125, 0.125)},
                        margin=0.0, trained_on=1)
    img = GrayImage(np.zeros((256, 256), dtype=np.uint8))
    region = region_for(model, "S", img)
    assert region == Region(32, 32, 64, 64)
    assert (region.x0 + region.width / 2) / 256 == 0.25


def test_persistence_roundtrip(tmp_path):
    rng = np.random.default_rng(25)
    corpus = random_corpus(rng, 7)
    model = learn_regions(corpus, margin=0.03)
    path = tmp_path / "m.regions"
    save_region_model(model, path)
    back = load_region_model(path)
    assert back.margin == model.margin
    assert back.trained_on == model.trained_on
    assert back.entries == model.entries
