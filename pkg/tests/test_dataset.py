import numpy as np
import pytest

from hald.dataset import (
    DEFAULT_MM_PER_PIXEL,
    GrayImage,
    LandmarkSet,
    average_expert_sets,
    load_annotations,
    load_image,
    read_case_header,
    save_annotations,
    save_image,
    split_corpus,
)
from hald.errors import (
    DuplicateLandmark,
    NameMismatch,
    ParseError,
    TooFewCases,
    UnknownLandmark,
    UnreadableFile,
    UnsupportedFormat,
)


def test_load_pgm_bytes(tmp_path):
    path = tmp_path / "img.pgm"
    path.write_bytes(b"P5\n3 2\n255\n" + bytes([0, 128, 255, 1, 2, 3]))
    img = load_image(path)
    assert (img.width, img.height) == (3, 2)
    assert img.pixels.tolist() == [[0, 128, 255], [1, 2, 3]]
    assert img.mm_per_pixel == DEFAULT_MM_PER_PIXEL


def test_load_pgm_with_comment_header(tmp_path):
    path = tmp_path / "img.pgm"
    path.write_bytes(b"P5\n# a comment\n2 1\n255\n" + bytes([7, 9]))
    img = load_image(path)
    assert img.pixels.tolist() == [[7, 9]]


def test_sixteen_bit_pgm_rejected(tmp_path):
    path = tmp_path / "img.pgm"
    path.write_bytes(b"P5\n2 1\n65535\n" + bytes(4))
    with pytest.raises(UnsupportedFormat):
        load_image(path)


def test_garbage_rejected(tmp_path):
    path = tmp_path / "junk.pgm"
    path.write_bytes(b"not an image at all")
    with pytest.raises(UnreadableFile):
        load_image(path)
    with pytest.raises(UnreadableFile):
        load_image(tmp_path / "missing.pgm")


def test_pgm_roundtrip_random(tmp_path):
    rng = np.random.default_rng(3)
    for k in range(5):
        pixels = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
        img = GrayImage(pixels)
        path = tmp_path / f"r{k}.pgm"
        save_image(img, path)
        back = load_image(path)
        assert np.array_equal(back.pixels, pixels)


def test_png_grayscale(tmp_path):
    from PIL import Image

    rng = np.random.default_rng(4)
    pixels = rng.integers(0, 256, size=(20, 30), dtype=np.uint8)
    path = tmp_path / "img.png"
    Image.fromarray(pixels, mode="L").save(path)
    img = load_image(path)
    assert np.array_equal(img.pixels, pixels)


def test_png_color_rejected(tmp_path):
    from PIL import Image

    path = tmp_path / "rgb.png"
    Image.new("RGB", (4, 4)).save(path)
    with pytest.raises(UnsupportedFormat):
        load_image(path)


def test_calibration_from_sidecar(tmp_path):
    path = tmp_path / "case01.pgm"
    path.write_bytes(b"P5\n2 2\n255\n" + bytes(4))
    (tmp_path / "case01.lmk").write_text("# mm_per_pixel=0.25\nMe\t1.0\t1.0\n")
    assert load_image(path).mm_per_pixel == 0.25


def test_load_annotations_single_line(tmp_path):
    path = tmp_path / "a.lmk"
    path.write_text("# mm_per_pixel=0.1\nMe\t412.5\t980.0\n")
    lm, mm = load_annotations(path)
    assert lm["Me"] == (412.5, 980.0)
    assert mm == 0.1


def test_duplicate_landmark_rejected(tmp_path):
    path = tmp_path / "a.lmk"
    path.write_text("Me\t1\t1\nMe\t2\t2\n")
    with pytest.raises(DuplicateLandmark):
        load_annotations(path)


def test_unknown_landmark_rejected(tmp_path):
    path = tmp_path / "a.lmk"
    path.write_text("Xx\t1\t1\n")
    with pytest.raises(UnknownLandmark):
        load_annotations(path)


def test_malformed_line_reports_position(tmp_path):
    path = tmp_path / "a.lmk"
    path.write_text("Me\t1\t1\nPog 2 2\n")
    with pytest.raises(ParseError) as err:
        load_annotations(path)
    assert err.value.line_no == 2


def test_full_name_alias_accepted(tmp_path):
    path = tmp_path / "a.lmk"
    path.write_text("Menton\t4.0\t5.0\n")
    lm, _ = load_annotations(path)
    assert lm["Me"] == (4.0, 5.0)


def test_annotation_roundtrip(tmp_path):
    entries = {"Me": (412.5, 980.0), "S": (101.25, 33.0), "Gn": (400.125, 970.5)}
    lm = LandmarkSet(entries)
    path = tmp_path / "out.lmk"
    save_annotations(lm, path, 0.1, facing="right")
    back, mm = load_annotations(path)
    assert back.entries == entries
    assert mm == 0.1
    assert read_case_header(path).facing == "right"


def test_average_expert_sets():
    a = LandmarkSet({"Me": (10.0, 10.0)})
    b = LandmarkSet({"Me": (12.0, 14.0)})
    assert average_expert_sets(a, b)["Me"] == (11.0, 12.0)
    assert average_expert_sets(a, a).entries == a.entries


def test_average_equidistant_property():
    rng = np.random.default_rng(9)
    names = ("Me", "S", "N", "Or")
    for _ in range(25):
        pa = {n: tuple(rng.uniform(0, 500, 2)) for n in names}
        pb = {n: tuple(rng.uniform(0, 500, 2)) for n in names}
        mid = average_expert_sets(LandmarkSet(pa), LandmarkSet(pb))
        for n in names:
            da = np.hypot(mid[n][0] - pa[n][0], mid[n][1] - pa[n][1])
            db = np.hypot(mid[n][0] - pb[n][0], mid[n][1] - pb[n][1])
            assert da == pytest.approx(db, abs=1e-9)


def test_average_name_mismatch():
    with pytest.raises(NameMismatch):
        average_expert_sets(LandmarkSet({"Me": (1.0, 1.0)}),
                            LandmarkSet({"S": (1.0, 1.0)}))


def test_split_40_cases_even():
    ids = [f"case{i:02d}" for i in range(40)]
    split = split_corpus(ids, seed=5)
    assert len(split.train) == 20 and len(split.test) == 20


def test_split_smallest_and_odd():
    split = split_corpus(["a", "b"], seed=1)
    assert len(split.train) == 1 and len(split.test) == 1
    split = split_corpus(["a", "b", "c"], seed=1)
    assert len(split.train) == 2 and len(split.test) == 1


def test_split_deterministic_and_permutation():
    ids = [f"c{i}" for i in range(17)]
    s1 = split_corpus(ids, seed=99)
    s2 = split_corpus(ids, seed=99)
    assert s1 == s2
    together = list(s1.train) + list(s1.test)
    assert sorted(together) == sorted(ids)
    assert len(set(together)) == len(ids)
    assert not set(s1.train) & set(s1.test)


def test_split_too_few():
    with pytest.raises(TooFewCases):
        split_corpus(["only"], seed=0)
