import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cropscan import geometry
from cropscan.errors import ContractError, DimensionError

import oracles


# ---------------------------------------------------------------- rasterize

def test_axis_aligned_square_covers_exactly_its_pixels():
    mask = geometry.polygon_mask([(0, 0), (10, 0), (10, 10), (0, 10)], (20, 20))
    assert mask.sum() == 100
    assert mask[:10, :10].all()
    assert not mask[10:, :].any()
    assert not mask[:, 10:].any()


def test_triangle_matches_brute_force():
    points = [(1.0, 1.0), (14.5, 3.0), (6.0, 13.0)]
    fast = geometry.polygon_mask(points, (16, 16))
    slow = oracles.brute_polygon_mask(points, 16, 16)
    assert (fast == slow).all()


def test_zero_area_polygon_sets_no_pixels():
    # three distinct collinear points enclose nothing
    mask = geometry.polygon_mask([(0, 0), (4, 4), (2, 2)], (8, 8))
    assert mask.sum() == 0


def test_random_polygons_match_brute_force():
    rng = np.random.default_rng(1234)
    for _ in range(40):
        width = int(rng.integers(4, 33))
        height = int(rng.integers(4, 33))
        points = oracles.random_polygon(rng, width, height)
        fast = geometry.polygon_mask(points, (width, height))
        slow = oracles.brute_polygon_mask(points, width, height)
        assert (fast == slow).all()


def test_rasterize_rejects_oversized_polygon():
    with pytest.raises(DimensionError):
        geometry.rasterize_polygon([(0, 0), (50, 0), (50, 50)], (20, 20))


def test_rasterize_rejects_too_few_points():
    with pytest.raises(ContractError):
        geometry.polygon_mask([(0, 0), (5, 5)], (10, 10))


# ---------------------------------------------------------------------- iou

def test_box_iou_identical_is_one():
    assert geometry.box_iou((2, 3, 8, 9), (2, 3, 8, 9)) == 1.0


def test_box_iou_disjoint_is_zero():
    assert geometry.box_iou((0, 0, 4, 4), (5, 5, 9, 9)) == 0.0


def test_box_iou_half_overlap_counted_on_grid():
    # integer-cell count: intersection 50 cells, union 150 cells
    value = geometry.box_iou((0, 0, 10, 10), (5, 0, 15, 10))
    assert abs(value - 50.0 / 150.0) < 1e-12


def test_box_iou_rejects_inverted_box():
    with pytest.raises(ContractError):
        geometry.box_iou((5, 0, 1, 10), (0, 0, 1, 1))


@given(
    x0=st.floats(0, 50), y0=st.floats(0, 50),
    w1=st.floats(0.1, 50), h1=st.floats(0.1, 50),
    dx=st.floats(-30, 30), dy=st.floats(-30, 30),
    w2=st.floats(0.1, 50), h2=st.floats(0.1, 50),
)
def test_box_iou_symmetric_and_bounded(x0, y0, w1, h1, dx, dy, w2, h2):
    a = (x0, y0, x0 + w1, y0 + h1)
    b = (x0 + dx, y0 + dy, x0 + dx + w2, y0 + dy + h2)
    ab = geometry.box_iou(a, b)
    ba = geometry.box_iou(b, a)
    assert abs(ab - ba) < 1e-12
    assert 0.0 <= ab <= 1.0 + 1e-12


def test_mask_iou_against_bit_loop():
    rng = np.random.default_rng(7)
    for _ in range(10):
        a = rng.random((13, 11)) < 0.4
        b = rng.random((13, 11)) < 0.4
        assert geometry.mask_iou(a, b) == pytest.approx(oracles.brute_mask_iou(a, b))


def test_mask_iou_both_empty_is_one():
    empty = np.zeros((5, 5), dtype=bool)
    assert geometry.mask_iou(empty, empty) == 1.0


def test_mask_iou_shape_mismatch_raises():
    with pytest.raises(ContractError):
        geometry.mask_iou(np.zeros((3, 3), bool), np.zeros((4, 3), bool))


# ---------------------------------------------------------------- mini mask

def test_mini_mask_full_frame_solid_is_all_ones():
    mask = np.ones((40, 40), dtype=bool)
    mini = geometry.encode_mini_mask(mask, (0, 0, 40, 40), side=56)
    assert mini.data.all()


def test_mini_mask_rectangle_round_trip_is_exact():
    for x0, y0, x1, y1 in [(3, 5, 19, 30), (0, 0, 56, 56), (10, 10, 11, 12), (2, 7, 50, 20)]:
        mask = np.zeros((64, 64), dtype=bool)
        mask[y0:y1, x0:x1] = True
        mini = geometry.encode_mini_mask(mask, (x0, y0, x1, y1), side=56)
        back = geometry.decode_mini_mask(mini, (64, 64))
        assert geometry.mask_iou(mask, back) == 1.0


def test_mini_mask_blob_round_trip_high_fidelity():
    rng = np.random.default_rng(99)
    for _ in range(15):
        mask = oracles.random_blob_mask(rng, 80)
        ys, xs = np.nonzero(mask)
        box = (float(xs.min()), float(ys.min()), float(xs.max() + 1), float(ys.max() + 1))
        mini = geometry.encode_mini_mask(mask, box, side=56)
        back = geometry.decode_mini_mask(mini, (80, 80))
        assert geometry.mask_iou(mask, back) >= 0.9


def test_mini_mask_requires_square_data():
    with pytest.raises(ContractError):
        geometry.MiniMask(data=np.zeros((4, 5), bool), box=(0, 0, 4, 5))


# ---------------------------------------------------------------------- rle

def test_rle_known_small_example():
    mask = np.array([[1, 0], [0, 1]], dtype=bool)
    doc = geometry.encode_rle(mask)
    # column-major flat is [1, 0, 0, 1]; first run counts zeros
    assert doc["size"] == [2, 2]
    assert doc["counts"] == [0, 1, 2, 1]
    assert doc["order"] == "column-major"


def test_rle_round_trip_random_masks():
    rng = np.random.default_rng(4)
    for _ in range(25):
        h = int(rng.integers(1, 40))
        w = int(rng.integers(1, 40))
        mask = rng.random((h, w)) < rng.uniform(0.05, 0.95)
        decoded = geometry.decode_rle(geometry.encode_rle(mask))
        assert (decoded == mask).all()


def test_rle_counts_match_column_walk():
    rng = np.random.default_rng(11)
    mask = rng.random((17, 9)) < 0.3
    doc = geometry.encode_rle(mask)
    assert doc["counts"] == oracles.brute_rle_counts(mask)


def test_rle_all_zero_and_all_one():
    zero = np.zeros((6, 4), dtype=bool)
    one = np.ones((6, 4), dtype=bool)
    assert geometry.encode_rle(zero)["counts"] == [24]
    assert geometry.encode_rle(one)["counts"] == [0, 24]
    assert (geometry.decode_rle(geometry.encode_rle(zero)) == zero).all()
    assert (geometry.decode_rle(geometry.encode_rle(one)) == one).all()


def test_rle_rejects_wrong_total():
    with pytest.raises(ContractError):
        geometry.decode_rle({"size": [4, 4], "counts": [3], "order": "column-major"})


@settings(max_examples=60)
@given(st.integers(1, 20), st.integers(1, 20), st.integers(0, 2**32 - 1))
def test_rle_round_trip_property(h, w, seed):
    mask = np.random.default_rng(seed).random((h, w)) < 0.5
    assert (geometry.decode_rle(geometry.encode_rle(mask)) == mask).all()


# ------------------------------------------------------------------- blur

def test_blur_score_constant_image_is_zero():
    assert geometry.blur_score(np.full((12, 12), 87.0)) == 0.0


def test_blur_score_invariant_under_constant_offset():
    rng = np.random.default_rng(3)
    img = rng.random((10, 10)) * 100
    assert geometry.blur_score(img) == pytest.approx(geometry.blur_score(img + 55.0))


def test_blur_score_frozen_fixture():
    fixture = np.array([
        [22, 198, 167, 112, 110, 219, 22, 178],
        [51, 24, 134, 249, 188, 194, 183, 201],
        [131, 32, 214, 115, 128, 94, 46, 237],
        [200, 164, 103, 210, 139, 113, 115, 58],
        [23, 141, 227, 16, 219, 211, 70, 161],
        [42, 194, 179, 90, 17, 248, 114, 228],
        [173, 199, 194, 49, 93, 119, 127, 11],
        [139, 39, 190, 174, 236, 190, 93, 247],
    ], dtype=np.float64)
    # value computed with the explicit per-pixel Laplacian loop
    assert geometry.blur_score(fixture) == pytest.approx(100838.98765432098)
    assert geometry.blur_score(fixture) == pytest.approx(oracles.brute_blur_score(fixture))


def test_blur_score_sharp_beats_smooth():
    checker = np.indices((16, 16)).sum(axis=0) % 2 * 255.0
    smooth = np.tile(np.linspace(0, 255, 16), (16, 1))
    assert geometry.blur_score(checker) > geometry.blur_score(smooth)


def test_blur_score_too_small_raises():
    with pytest.raises(ContractError):
        geometry.blur_score(np.zeros((2, 5)))


# -------------------------------------------------------------- letterbox

def test_letterbox_identity_when_square_matches():
    img = np.arange(64, dtype=np.uint8).reshape(8, 8)
    out, transform = geometry.resize_letterbox(img, (8, 8))
    assert (out == img).all()
    assert transform.scale == 1.0
    assert transform.pad_x == 0 and transform.pad_y == 0


def test_letterbox_landscape_photo_geometry():
    img = np.zeros((1960, 4032, 3), dtype=np.uint8)
    out, transform = geometry.resize_letterbox(img, (1024, 1024))
    assert out.shape == (1024, 1024, 3)
    assert transform.scale == pytest.approx(1024 / 4032)
    content_h = round(1960 * 1024 / 4032)
    assert content_h == 498
    assert 1024 - content_h == 526  # split above and below
    assert transform.pad_y == 263
    assert transform.pad_x == 0


def test_letterbox_box_round_trip_within_half_pixel():
    rng = np.random.default_rng(21)
    img = np.zeros((375, 500, 3), dtype=np.uint8)
    _, transform = geometry.resize_letterbox(img, (128, 128))
    for _ in range(50):
        x0, y0 = rng.uniform(0, 400), rng.uniform(0, 300)
        w, h = rng.uniform(1, 99), rng.uniform(1, 74)
        box = (x0, y0, x0 + w, y0 + h)
        back = transform.invert_box(transform.apply_box(box))
        assert max(abs(b - o) for b, o in zip(back, box)) <= 0.5


def test_letterbox_mask_inverse_restores_content_region():
    img = np.zeros((100, 200), dtype=np.uint8)
    boxed, transform = geometry.resize_letterbox(img, (64, 64))
    frame = np.zeros((64, 64), dtype=bool)
    # mark the whole content band
    frame[transform.pad_y : 64 - transform.pad_y, :] = True
    restored = transform.invert_mask(frame)
    assert restored.shape == (100, 200)
    assert restored.all()


def test_letterbox_rejects_empty_target():
    with pytest.raises(DimensionError):
        geometry.resize_letterbox(np.zeros((4, 4)), (0, 10))
