"""Rotated-box geometry: footprints, IoU vs a Monte-Carlo oracle, the
box-delta update algebra, and the unit-square coordinate maps."""

import math
import warnings

import numpy as np
import pytest

from particlebev.geometry import (
    DEFAULT_EXTENT,
    BevBox,
    BevExtent,
    BoxDelta,
    DegenerateBoxError,
    DeltaOverflowError,
    NegativeSpanWarning,
    apply_box_delta,
    center_distance_2d,
    clip_polygon,
    denormalize_center,
    footprint_polygon,
    in_unit_square,
    normalize_center,
    polygon_area,
    rotated_iou,
)

from oracles import mc_iou, random_box


def unit_square_box(yaw: float = 0.0, cx: float = 0.0, cy: float = 0.0) -> BevBox:
    return BevBox.from_yaw(cx=cx, cy=cy, cz=0.0, w=1.0, h=1.0, l=1.0, yaw=yaw)


# ---------------------------------------------------------------- BevBox


def test_box_requires_positive_extents():
    for bad in [dict(w=0.0), dict(h=-1.0), dict(l=0.0)]:
        kwargs = dict(cx=0, cy=0, cz=0, w=1, h=1, l=1, sin_yaw=0, cos_yaw=1)
        kwargs.update(bad)
        with pytest.raises(ValueError):
            BevBox(**kwargs)


def test_box_renormalizes_yaw_pair():
    box = BevBox(0, 0, 0, 1, 1, 1, sin_yaw=3.0, cos_yaw=4.0)
    assert box.sin_yaw == pytest.approx(0.6, abs=1e-12)
    assert box.cos_yaw == pytest.approx(0.8, abs=1e-12)
    with pytest.raises(ValueError):
        BevBox(0, 0, 0, 1, 1, 1, sin_yaw=0.0, cos_yaw=0.0)


def test_box_confidence_range_enforced():
    with pytest.raises(ValueError):
        BevBox(0, 0, 0, 1, 1, 1, 0, 1, confidence=1.5)
    with pytest.raises(ValueError):
        BevBox(0, 0, 0, 1, 1, 1, 0, 1, confidence=-0.1)


def test_box_vector_round_trip():
    rng = np.random.default_rng(7)
    for _ in range(50):
        box = random_box(rng)
        again = BevBox.from_vector(box.as_vector(), class_id=box.class_id,
                                   confidence=box.confidence)
        np.testing.assert_allclose(again.as_vector(), box.as_vector(), atol=1e-15)


def test_box_dict_round_trip_preserves_attribute():
    box = BevBox(1, 2, 0.5, 2, 1, 1.5, 0, 1, 3, -1, class_id="car",
                 confidence=0.7, attribute="vehicle.moving")
    again = BevBox.from_dict(box.to_dict())
    assert again == box
    plain = BevBox(0, 0, 0, 1, 1, 1, 0, 1)
    assert "attribute" not in plain.to_dict()
    assert BevBox.from_dict(plain.to_dict()).attribute is None


# ------------------------------------------------------------- footprint


def test_footprint_identity_rotation():
    corners = footprint_polygon(unit_square_box())
    expected = {(0.5, 0.5), (-0.5, 0.5), (-0.5, -0.5), (0.5, -0.5)}
    got = {tuple(np.round(p, 12)) for p in corners}
    assert got == expected


def test_footprint_quarter_turn_swaps_extents():
    box = BevBox.from_yaw(0, 0, 0, w=2.0, h=1.0, l=1.0, yaw=math.pi / 2)
    corners = footprint_polygon(box)
    expected = {(0.5, 1.0), (-0.5, 1.0), (-0.5, -1.0), (0.5, -1.0)}
    got = {tuple(np.round(p, 12)) for p in corners}
    assert got == expected


def test_footprint_diagonal_at_45_degrees():
    corners = footprint_polygon(unit_square_box(yaw=math.pi / 4))
    radii = np.linalg.norm(corners, axis=1)
    np.testing.assert_allclose(radii, math.sqrt(2) / 2, atol=1e-12)
    # vertices land on the axes after the 45-degree turn
    on_axis = np.isclose(corners[:, 0], 0, atol=1e-12) | np.isclose(corners[:, 1], 0, atol=1e-12)
    assert on_axis.all()


def test_footprint_is_ccw_and_area_matches_extents():
    rng = np.random.default_rng(11)
    for _ in range(200):
        box = random_box(rng)
        area = polygon_area(footprint_polygon(box))
        assert area > 0  # CCW orientation gives positive shoelace area
        assert area == pytest.approx(box.w * box.h, rel=1e-12)


# ------------------------------------------------------------------ IoU


def test_clip_polygon_square_with_itself():
    square = footprint_polygon(unit_square_box())
    clipped = clip_polygon(square, square)
    assert abs(polygon_area(clipped)) == pytest.approx(1.0, abs=1e-12)


def test_clip_polygon_disjoint_is_empty():
    a = footprint_polygon(unit_square_box())
    b = footprint_polygon(unit_square_box(cx=5.0))
    assert len(clip_polygon(a, b)) == 0


def test_iou_identical_boxes():
    rng = np.random.default_rng(3)
    for _ in range(20):
        box = random_box(rng)
        assert rotated_iou(box, box) == pytest.approx(1.0, abs=1e-12)


def test_iou_separated_boxes_is_zero():
    a = unit_square_box()
    b = unit_square_box(cx=10.0, yaw=0.3)
    assert rotated_iou(a, b) == 0.0


def test_iou_unit_square_rotated_45_degrees():
    a = unit_square_box()
    b = unit_square_box(yaw=math.pi / 4)
    iou = rotated_iou(a, b)
    # octagon intersection: area 2(sqrt(2)-1), union 2 - that
    exact = (2 * (math.sqrt(2) - 1)) / (2 - 2 * (math.sqrt(2) - 1))
    assert iou == pytest.approx(exact, abs=1e-12)
    assert iou == pytest.approx(0.7071, abs=1e-2)
    assert iou == pytest.approx(mc_iou(a, b, rng=np.random.default_rng(0)), abs=1e-2)


def test_iou_matches_monte_carlo_oracle():
    rng = np.random.default_rng(2024)
    for _ in range(20):
        a, b = random_box(rng), random_box(rng)
        estimate = mc_iou(a, b, n_samples=1_000_000, rng=rng)
        assert rotated_iou(a, b) == pytest.approx(estimate, abs=1e-2)


def test_iou_symmetry_and_range():
    rng = np.random.default_rng(5)
    for _ in range(100):
        a, b = random_box(rng), random_box(rng)
        iou_ab = rotated_iou(a, b)
        assert 0.0 <= iou_ab <= 1.0
        assert iou_ab == pytest.approx(rotated_iou(b, a), abs=1e-12)


def test_iou_degenerate_footprint_raises():
    thin = BevBox(0, 0, 0, w=1e-15, h=1.0, l=1.0, sin_yaw=0, cos_yaw=1)
    with pytest.raises(DegenerateBoxError):
        rotated_iou(thin, unit_square_box())


# ------------------------------------------------------- center distance


def test_center_distance_cases():
    a = unit_square_box()
    assert center_distance_2d(a, a) == 0.0
    b = unit_square_box(cx=3.0, cy=4.0)
    assert center_distance_2d(a, b) == pytest.approx(5.0, abs=1e-12)
    assert center_distance_2d(b, a) == center_distance_2d(a, b)


# ------------------------------------------------------------ box delta


def test_zero_delta_is_identity():
    rng = np.random.default_rng(13)
    zero = BoxDelta(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    for _ in range(100):
        # positive yaw keeps the update spans positive (no warning path)
        box = BevBox.from_yaw(rng.uniform(-5, 5), rng.uniform(-5, 5), 0.0,
                              rng.uniform(0.5, 4), rng.uniform(0.5, 4), 1.0,
                              yaw=rng.uniform(0.0, math.pi / 2))
        out = apply_box_delta(box, zero)
        assert (out.cx, out.cy, out.w, out.h) == (box.cx, box.cy, box.w, box.h)
        assert out.yaw == pytest.approx(box.yaw, abs=1e-12)
        assert (out.cz, out.l, out.vx, out.vy) == (box.cz, box.l, box.vx, box.vy)


def test_delta_center_shift_uses_span():
    # theta=0: w_bar = w = 2, so d_cx=0.5 moves the center by exactly 1
    box = BevBox.from_yaw(1.0, -2.0, 0.0, w=2.0, h=1.0, l=1.0, yaw=0.0)
    out = apply_box_delta(box, BoxDelta(0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0))
    assert out.cx == pytest.approx(2.0, abs=1e-12)
    assert out.cy == pytest.approx(-2.0, abs=1e-12)


def test_delta_log_scale_doubles_width():
    box = BevBox.from_yaw(0, 0, 0, w=1.5, h=1.0, l=1.0, yaw=0.0)
    out = apply_box_delta(box, BoxDelta(0, 0, 0, math.log(2.0), 0.0, 0, 0))
    assert out.w == pytest.approx(3.0, rel=1e-12)
    assert out.h == pytest.approx(1.0, rel=1e-12)


def test_delta_yaw_increment():
    box = unit_square_box(yaw=0.3)
    out = apply_box_delta(box, BoxDelta(0, 0, 0, 0, 0, 0, d_theta=0.4))
    assert out.yaw == pytest.approx(0.7, abs=1e-12)


def test_delta_passes_through_non_bev_fields():
    box = BevBox.from_yaw(0, 0, cz=1.2, w=1, h=1, l=2.5, yaw=0.1, vx=3.0, vy=-1.0,
                          class_id="truck", confidence=0.4, attribute="vehicle.moving")
    out = apply_box_delta(box, BoxDelta(0.1, 0.1, 9.9, 0.1, 0.1, 9.9, 0.1))
    assert (out.cz, out.l, out.vx, out.vy) == (1.2, 2.5, 3.0, -1.0)
    assert (out.class_id, out.confidence, out.attribute) == ("truck", 0.4, "vehicle.moving")


def test_delta_overflow_rejected():
    box = unit_square_box()
    with pytest.raises(DeltaOverflowError):
        apply_box_delta(box, BoxDelta(0, 0, 0, 10.5, 0, 0, 0))
    with pytest.raises(DeltaOverflowError):
        apply_box_delta(box, BoxDelta(0, 0, 0, 0, -11.0, 0, 0))


def test_delta_negative_span_warns_but_applies_formula():
    # yaw = -pi/2: w_bar = h*sin(theta) ... = -1, h_bar = w*sin(theta) = -1
    box = BevBox.from_yaw(0, 0, 0, w=1.0, h=1.0, l=1.0, yaw=-math.pi / 2)
    with pytest.warns(NegativeSpanWarning):
        out = apply_box_delta(box, BoxDelta(0.5, 0.0, 0, 0, 0, 0, 0))
    # the verbatim formula moves the center the "wrong" way: cx' = -1*0.5
    assert out.cx == pytest.approx(-0.5, abs=1e-12)


def test_positive_yaw_never_warns():
    rng = np.random.default_rng(17)
    with warnings.catch_warnings():
        warnings.simplefilter("error", NegativeSpanWarning)
        for _ in range(100):
            box = BevBox.from_yaw(0, 0, 0, rng.uniform(0.5, 3), rng.uniform(0.5, 3),
                                  1.0, yaw=rng.uniform(0.0, math.pi / 2))
            apply_box_delta(box, BoxDelta(0.1, -0.1, 0, 0.2, -0.2, 0, 0.05))


def test_delta_requires_finite_fields():
    with pytest.raises(ValueError):
        BoxDelta(math.nan, 0, 0, 0, 0, 0, 0)
    with pytest.raises(ValueError):
        BoxDelta(0, 0, 0, math.inf, 0, 0, 0)


# ------------------------------------------------------- coordinate maps


def test_extent_validation():
    with pytest.raises(ValueError):
        BevExtent(0, 0, -1, 1)
    with pytest.raises(ValueError):
        BevExtent(-1, 1, -1, 1, grid_h=0)
    assert DEFAULT_EXTENT.width == DEFAULT_EXTENT.height == pytest.approx(102.4)


def test_normalize_center_anchor_points():
    ext = BevExtent(-51.2, 51.2, -51.2, 51.2)
    np.testing.assert_allclose(normalize_center(np.array([0.0, 0.0]), ext), [0.5, 0.5])
    np.testing.assert_allclose(normalize_center(np.array([-51.2, -51.2]), ext), [0.0, 0.0])
    np.testing.assert_allclose(normalize_center(np.array([51.2, 51.2]), ext), [1.0, 1.0])


def test_normalize_round_trip():
    rng = np.random.default_rng(23)
    ext = BevExtent(-30.0, 70.0, -10.0, 10.0)
    pts = rng.uniform(-40, 80, size=(500, 2))
    back = denormalize_center(normalize_center(pts, ext), ext)
    np.testing.assert_allclose(back, pts, atol=1e-12)


def test_out_of_extent_maps_outside_unit_square():
    ext = BevExtent(0.0, 10.0, 0.0, 10.0)
    unit = normalize_center(np.array([[5.0, 5.0], [-1.0, 5.0], [5.0, 12.0]]), ext)
    np.testing.assert_array_equal(in_unit_square(unit), [True, False, False])
