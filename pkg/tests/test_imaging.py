import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ocr_auditor.errors import InputError, ValidationError
from ocr_auditor.imaging import (
    GrayImage,
    Label,
    PixelClassMask,
    estimate_mask,
    extract_char_regions,
    load_gray_image,
    load_mask,
    load_region_sidecar,
    otsu_threshold,
    regions_from_boxes,
    rgb_to_gray,
    write_pgm,
)
from oracles import flood_fill_components, otsu_float


def mask_from_points(w, h, points):
    labels = np.full((h, w), 255, dtype=np.uint8)
    for x, y in points:
        labels[y, x] = 0
    return PixelClassMask(labels)


# --- decoding -----------------------------------------------------------------

def test_single_gray_byte(tmp_path):
    p = tmp_path / "one.pgm"
    p.write_bytes(b"P5\n1 1\n255\n\x80")
    assert load_gray_image(p) == GrayImage.from_rows(1, 1, [128])


def test_header_comments_and_whitespace(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5 # comment\n# another\n2\t1 255\n\x00\xff")
    assert load_gray_image(p).data.tolist() == [[0, 255]]


def test_luma_weights():
    assert rgb_to_gray(np.array([255, 255, 255])) == 255
    assert rgb_to_gray(np.array([255, 0, 0])) == round(0.299 * 255)  # 76
    assert rgb_to_gray(np.array([0, 255, 0])) == 150  # 149.685
    assert rgb_to_gray(np.array([0, 0, 255])) == 29  # 29.07


def test_luma_rounds_half_up():
    # 0.114 * 250 == 28.5 exactly; banker's rounding would give 28
    assert rgb_to_gray(np.array([0, 0, 250])) == 29


def test_ppm_decodes_to_luma(tmp_path):
    p = tmp_path / "rgb.ppm"
    p.write_bytes(b"P6\n2 1\n255\n" + bytes([255, 0, 0, 255, 255, 255]))
    assert load_gray_image(p).data.tolist() == [[76, 255]]


def test_png_gray_and_rgb(tmp_path):
    Image = pytest.importorskip("PIL.Image")
    Image.fromarray(np.array([[0, 128]], dtype=np.uint8), "L").save(tmp_path / "g.png")
    Image.fromarray(np.array([[[255, 0, 0], [255, 255, 255]]], dtype=np.uint8), "RGB").save(tmp_path / "c.png")
    assert load_gray_image(tmp_path / "g.png").data.tolist() == [[0, 128]]
    assert load_gray_image(tmp_path / "c.png").data.tolist() == [[76, 255]]


@pytest.mark.parametrize(
    "payload",
    [b"P2\n1 1\n255\n0", b"P5\n0 3\n255\n", b"P5\n2 2\n65535\n\x00\x00", b"P5\n2 2\n255\n\x00", b"GIF89a"],
    ids=["ascii-pgm", "zero-dim", "16-bit", "truncated", "gif"],
)
def test_bad_images_rejected(tmp_path, payload):
    p = tmp_path / "bad"
    p.write_bytes(payload)
    with pytest.raises(InputError):
        load_gray_image(p)


def test_missing_file(tmp_path):
    with pytest.raises(InputError):
        load_gray_image(tmp_path / "nope.pgm")


def test_decode_determinism(tmp_path):
    rng = np.random.default_rng(3)
    p = tmp_path / "r.pgm"
    write_pgm(p, rng.integers(0, 256, (17, 23)).astype(np.uint8))
    assert load_gray_image(p) == load_gray_image(p)


def test_gray_image_validation():
    with pytest.raises(ValidationError):
        GrayImage(np.array([[256]]))
    with pytest.raises(ValidationError):
        GrayImage(np.zeros((0, 3)))
    with pytest.raises(ValidationError):
        GrayImage.from_rows(2, 2, [1, 2, 3])
    img = GrayImage.from_rows(2, 1, [1, 2])
    with pytest.raises(ValueError):
        img.data[0, 0] = 9


# --- masks --------------------------------------------------------------------

def test_mask_all_zero(tmp_path):
    img = GrayImage(np.zeros((2, 2)))
    write_pgm(tmp_path / "m.pgm", np.zeros((2, 2), np.uint8))
    m = load_mask(tmp_path / "m.pgm", img)
    assert m.count(Label.CHARACTER) == 4


def test_mask_ignore_code(tmp_path):
    img = GrayImage(np.zeros((2, 2)))
    write_pgm(tmp_path / "m.pgm", np.array([[128, 255], [0, 0]], np.uint8))
    assert load_mask(tmp_path / "m.pgm", img).label_at(0, 0) is Label.IGNORE


def test_mask_dimension_mismatch(tmp_path):
    write_pgm(tmp_path / "m.pgm", np.zeros((3, 3), np.uint8))
    with pytest.raises(ValidationError, match="3x3"):
        load_mask(tmp_path / "m.pgm", GrayImage(np.zeros((2, 2))))


def test_mask_illegal_value(tmp_path):
    write_pgm(tmp_path / "m.pgm", np.array([[0, 7]], np.uint8))
    with pytest.raises(ValidationError, match="illegal mask value 7"):
        load_mask(tmp_path / "m.pgm", GrayImage(np.zeros((1, 2))))


# --- mask estimation ----------------------------------------------------------

@pytest.mark.parametrize("n_dark", [1, 7, 49])
def test_estimate_two_values(n_dark):
    data = np.full(100, 200, np.uint8)
    data[np.random.default_rng(n_dark).choice(100, n_dark, replace=False)] = 50
    img = GrayImage(data.reshape(10, 10))
    m = estimate_mask(img)
    np.testing.assert_array_equal(m.labels == Label.CHARACTER, img.data == 50)


def test_estimate_equal_classes_darker_is_character():
    img = GrayImage(np.array([[50, 200], [200, 50]]))
    assert (estimate_mask(img).labels[img.data == 50] == Label.CHARACTER).all()


def test_estimate_constant_image_errors():
    with pytest.raises(ValidationError, match="constant"):
        estimate_mask(GrayImage(np.full((4, 4), 7)))


def test_estimate_bimodal_against_exhaustive_scan():
    rng = np.random.default_rng(11)
    n = 2000
    dark = rng.random(n) < 0.3
    values = np.where(dark, rng.normal(60, 8, n), rng.normal(190, 8, n)).round().clip(0, 255).astype(np.uint8)
    hist = np.bincount(values, minlength=256)
    t = otsu_threshold(hist)
    assert t == otsu_float(values.tolist())
    assert 60 < t < 190
    m = estimate_mask(GrayImage(values.reshape(40, 50)))
    assert (m.labels.ravel()[values < t] == Label.CHARACTER).all()


@settings(max_examples=60, deadline=None)
@given(values=st.lists(st.integers(0, 255), min_size=2, max_size=60).filter(lambda v: len(set(v)) > 1))
def test_otsu_exact_matches_float_scan(values):
    assert otsu_threshold(np.bincount(values, minlength=256)) == otsu_float(values)


# --- regions ------------------------------------------------------------------

def test_solid_rectangle_one_region(backend):
    labels = np.full((10, 10), 255, np.uint8)
    labels[2:7, 4:7] = 0
    regions = extract_char_regions(PixelClassMask(labels))
    assert [r.box for r in regions] == [(4, 2, 3, 5)]


def test_disconnected_pixels(backend):
    assert len(extract_char_regions(mask_from_points(6, 6, [(0, 0), (5, 5)]))) == 2


def test_diagonal_connectivity(backend):
    m = mask_from_points(3, 3, [(0, 0), (1, 1)])
    assert len(extract_char_regions(m, connectivity=8)) == 1
    assert len(extract_char_regions(m, connectivity=4)) == 2


def test_merge_gap_joins_dotted_glyph(backend):
    # an 'i': dot at row 0, stem rows 2-5, separated by one blank row
    pts = [(1, 0)] + [(1, y) for y in range(2, 6)]
    m = mask_from_points(3, 6, pts)
    assert len(extract_char_regions(m)) == 2
    regions = extract_char_regions(m, merge_gap=1)
    assert [r.box for r in regions] == [(1, 0, 1, 6)]


def test_regions_sorted_and_errors(backend):
    m = mask_from_points(8, 8, [(6, 1), (1, 1), (3, 5)])
    assert [r.box[:2] for r in extract_char_regions(m, connectivity=4)] == [(1, 1), (6, 1), (3, 5)]
    with pytest.raises(ValidationError):
        extract_char_regions(PixelClassMask(np.full((3, 3), 255, np.uint8)))
    with pytest.raises(ValidationError):
        extract_char_regions(m, connectivity=6)


char_masks = st.integers(1, 14).flatmap(
    lambda h: st.integers(1, 14).flatmap(
        lambda w: arrays(np.uint8, (h, w), elements=st.sampled_from([0, 255, 255, 128]))
    )
).filter(lambda a: (a == 0).any())


@settings(max_examples=150, deadline=None)
@given(labels=char_masks, connectivity=st.sampled_from([4, 8]))
def test_region_partition_and_minimality(labels, connectivity):
    mask = PixelClassMask(labels)
    regions = extract_char_regions(mask, connectivity)
    w = mask.width
    all_chars = {(int(x), int(y)) for y, x in zip(*np.nonzero(labels == 0))}
    members = [r.coords(w) for r in regions]
    assert sum(len(m) for m in members) == len(all_chars)
    assert set().union(*members) == all_chars
    expected = {frozenset(c) for c in flood_fill_components(all_chars, connectivity)}
    assert {frozenset(m) for m in members} == expected
    for r, m in zip(regions, members):
        x, y, bw, bh = r.box
        xs = {p[0] for p in m}
        ys = {p[1] for p in m}
        assert min(xs) == x and max(xs) == x + bw - 1
        assert min(ys) == y and max(ys) == y + bh - 1


@settings(max_examples=150, deadline=None)
@given(labels=char_masks)
def test_connectivity_and_merge_monotone(labels):
    mask = PixelClassMask(labels)
    assert len(extract_char_regions(mask, 8)) <= len(extract_char_regions(mask, 4))
    counts = [len(extract_char_regions(mask, 4, g)) for g in range(4)]
    assert counts == sorted(counts, reverse=True)


def test_sidecar_regions(tmp_path):
    p = tmp_path / "r.txt"
    p.write_text("0 0 2 2\n1 1 3 1\n")
    assert load_region_sidecar(p) == [(0, 0, 2, 2), (1, 1, 3, 1)]
    mask = mask_from_points(4, 4, [(0, 0), (2, 1)])
    regions = regions_from_boxes(mask, load_region_sidecar(p))
    assert [len(r.members) for r in regions] == [1, 1]


@pytest.mark.parametrize("text", ["0 0 2\n", "0  0 2 2\n", "a b c d\n", "0 0 -1 2\n"])
def test_sidecar_malformed(tmp_path, text):
    p = tmp_path / "r.txt"
    p.write_text(text)
    with pytest.raises(ValidationError):
        load_region_sidecar(p)


def test_sidecar_box_out_of_bounds():
    with pytest.raises(ValidationError):
        regions_from_boxes(mask_from_points(4, 4, [(0, 0)]), [(2, 2, 5, 5)])
