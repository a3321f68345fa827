"""Confidence filter, per-class rotated NMS, radial merge, and stage order."""

import numpy as np
import pytest

from particlebev.geometry import BevBox, center_distance_2d, rotated_iou
from particlebev.suppression import (
    SuppressionConfig,
    confidence_filter,
    filter_pipeline,
    radial_suppression,
    rotated_nms,
)


def box_at(cx, cy, conf, class_id="car", w=1.0, h=1.0, yaw=0.0):
    return BevBox.from_yaw(cx, cy, 0.0, w, h, 1.0, yaw,
                           class_id=class_id, confidence=conf)


def nms_reference(preds, threshold, class_agnostic=False):
    """Quadratic re-derivation: a box survives iff every same-class box that
    outranks it and itself survived overlaps it below the threshold."""
    order = sorted(range(len(preds)), key=lambda i: (-preds[i].confidence, i))
    survives = {}
    for rank, i in enumerate(order):
        ok = True
        for j in order[:rank]:
            if not survives[j]:
                continue
            if not class_agnostic and preds[j].class_id != preds[i].class_id:
                continue
            if rotated_iou(preds[i], preds[j]) >= threshold:
                ok = False
                break
        survives[i] = ok
    return [preds[i] for i in order if survives[i]]


def clustered_scene(rng, n_clusters=4, per_cluster=5, spread=0.08):
    # spread is kept small relative to the 0.5 m merge radius: radial
    # suppression is only idempotent when clusters collapse in one pass
    """Stacked detections: tight same-class clusters around separated anchors."""
    classes = ["car", "truck", "pedestrian"]
    preds = []
    anchors = rng.uniform(-20, 20, size=(n_clusters, 2))
    while len(anchors) > 1 and np.min(
            np.linalg.norm(anchors[:, None] - anchors[None, :], axis=2)
            + np.eye(len(anchors)) * 1e9) < 6.0:
        anchors = rng.uniform(-20, 20, size=(n_clusters, 2))
    for a in anchors:
        cls = classes[int(rng.integers(len(classes)))]
        for _ in range(per_cluster):
            preds.append(box_at(a[0] + rng.normal(0, spread),
                                a[1] + rng.normal(0, spread),
                                float(rng.uniform(0.05, 1.0)), class_id=cls,
                                w=float(rng.uniform(1, 3)), h=float(rng.uniform(1, 3)),
                                yaw=float(rng.uniform(-0.3, 0.3))))
    return preds


# ------------------------------------------------------ confidence filter


def test_confidence_filter_cases():
    rng = np.random.default_rng(0)
    preds = [box_at(i, 0.0, c) for i, c in enumerate(rng.uniform(0, 1, 20))]
    assert confidence_filter(preds, 0.0) == preds
    assert confidence_filter(preds, 1.1) == []
    survivors = confidence_filter(preds, 0.5)
    assert survivors == [p for p in preds if p.confidence >= 0.5]


def test_confidence_filter_boundary_is_inclusive():
    preds = [box_at(0, 0, 0.02), box_at(1, 0, 0.019)]
    assert confidence_filter(preds, 0.02) == [preds[0]]


def test_confidence_filter_idempotent():
    rng = np.random.default_rng(1)
    preds = [box_at(i, 0.0, c) for i, c in enumerate(rng.uniform(0, 1, 30))]
    once = confidence_filter(preds, 0.3)
    assert confidence_filter(once, 0.3) == once


# ------------------------------------------------------------------- NMS


def test_nms_single_box_unchanged():
    preds = [box_at(0, 0, 0.5)]
    assert rotated_nms(preds, 0.1) == preds


def test_nms_identical_pair_keeps_higher_confidence():
    a, b = box_at(0, 0, 0.9), box_at(0, 0, 0.8)
    assert rotated_nms([b, a], 0.1) == [a]


def test_nms_different_classes_do_not_suppress():
    a = box_at(0, 0, 0.9, class_id="car")
    b = box_at(0, 0, 0.8, class_id="truck")
    assert rotated_nms([a, b], 0.1) == [a, b]
    assert rotated_nms([a, b], 0.1, class_agnostic=True) == [a]


def test_nms_matches_quadratic_reference():
    rng = np.random.default_rng(2)
    for _ in range(30):
        preds = clustered_scene(rng, n_clusters=int(rng.integers(2, 5)))
        for thr in (0.05, 0.1, 0.5):
            assert rotated_nms(preds, thr) == nms_reference(preds, thr)
        assert rotated_nms(preds, 0.1, class_agnostic=True) == \
            nms_reference(preds, 0.1, class_agnostic=True)


def test_nms_idempotent_on_random_scenes():
    rng = np.random.default_rng(3)
    for _ in range(20):
        preds = clustered_scene(rng)
        once = rotated_nms(preds, 0.1)
        assert rotated_nms(once, 0.1) == once


def test_nms_survivors_pairwise_below_threshold():
    rng = np.random.default_rng(4)
    preds = clustered_scene(rng, n_clusters=5)
    kept = rotated_nms(preds, 0.1)
    for i, a in enumerate(kept):
        for b in kept[i + 1:]:
            if a.class_id == b.class_id:
                assert rotated_iou(a, b) < 0.1


# ---------------------------------------------------------------- radial


def test_radial_isolated_boxes_unchanged():
    preds = [box_at(0, 0, 0.9), box_at(5, 0, 0.8), box_at(0, 5, 0.7)]
    assert radial_suppression(preds, 0.5) == sorted(
        preds, key=lambda p: -p.confidence)


def test_radial_two_box_merge_exact():
    a = box_at(0.0, 0.0, 0.6)
    b = box_at(0.3, 0.0, 0.4)
    merged = radial_suppression([a, b], 0.5)
    assert len(merged) == 1
    out = merged[0]
    assert abs(out.cx - 0.12) <= 1e-12
    assert abs(out.cy) <= 1e-12
    np.testing.assert_allclose(out.as_vector()[2:],
                               [0, 1, 1, 1, 0, 1, 0, 0], atol=1e-12)
    assert out.confidence == 0.6  # representative's confidence, not averaged


def test_radial_zero_radius_is_identity():
    rng = np.random.default_rng(5)
    preds = clustered_scene(rng)
    out = radial_suppression(preds, 0.0)
    assert out == sorted(preds, key=lambda p: -p.confidence)


def test_radial_groups_partition_the_input():
    rng = np.random.default_rng(6)
    for _ in range(20):
        preds = clustered_scene(rng, n_clusters=3, per_cluster=6)
        merged, groups = radial_suppression(preds, 0.5, return_groups=True)
        assert len(merged) == len(groups)
        flat = [i for g in groups for i in g]
        assert sorted(flat) == list(range(len(preds)))
        for out, g in zip(merged, groups):
            assert all(preds[i].class_id == out.class_id for i in g)


def test_radial_merge_recomputation_on_groups():
    rng = np.random.default_rng(7)
    preds = clustered_scene(rng, n_clusters=3, per_cluster=5)
    merged, groups = radial_suppression(preds, 0.5, return_groups=True)
    for out, g in zip(merged, groups):
        w = np.array([preds[i].confidence for i in g])
        vecs = np.stack([preds[i].as_vector() for i in g])
        want = w @ vecs / w.sum()
        got = out.as_vector()
        # sin/cos are renormalized after averaging; compare the rest directly
        np.testing.assert_allclose(got[[0, 1, 2, 3, 4, 5, 8, 9]],
                                   want[[0, 1, 2, 3, 4, 5, 8, 9]], atol=1e-12)
        norm = np.hypot(want[6], want[7])
        np.testing.assert_allclose(got[6:8], want[6:8] / norm, atol=1e-12)
        assert out.confidence == max(preds[i].confidence for i in g)


def test_radial_idempotent_on_clustered_scenes():
    rng = np.random.default_rng(8)
    for _ in range(30):
        preds = clustered_scene(rng, n_clusters=int(rng.integers(2, 6)))
        once = radial_suppression(preds, 0.5)
        assert radial_suppression(once, 0.5) == once


def test_radial_different_classes_not_merged():
    a = box_at(0, 0, 0.9, class_id="car")
    b = box_at(0.1, 0, 0.8, class_id="truck")
    assert len(radial_suppression([a, b], 0.5)) == 2


def test_radial_rejects_negative_radius():
    with pytest.raises(ValueError):
        radial_suppression([box_at(0, 0, 0.5)], -0.1)


def test_stage_counts_never_increase():
    rng = np.random.default_rng(9)
    for _ in range(10):
        preds = clustered_scene(rng)
        n = len(preds)
        a = confidence_filter(preds, 0.02)
        b = rotated_nms(a, 0.1)
        c = radial_suppression(b, 0.5)
        assert n >= len(a) >= len(b) >= len(c)


# ---------------------------------------------------------------- pipeline


def test_pipeline_all_stages_disabled_is_identity():
    rng = np.random.default_rng(10)
    preds = clustered_scene(rng)
    cfg = SuppressionConfig(enable_confidence=False, enable_nms=False,
                            enable_radial=False)
    assert filter_pipeline(preds, cfg) == preds


def test_pipeline_stage_order_matters():
    # big overlapping pair + a small nearby box: NMS-then-radial merges
    # {A, C}; radial-then-NMS merges {A, B, C}, giving a different center
    a = box_at(0.0, 0.0, 0.9, w=2.0, h=2.0)
    b = box_at(0.1, 0.0, 0.8, w=2.0, h=2.0)
    c = box_at(0.45, 0.0, 0.7, w=0.5, h=0.5)
    preds = [a, b, c]
    assert rotated_iou(a, b) >= 0.1
    assert rotated_iou(a, c) < 0.1

    nms_then_radial = radial_suppression(rotated_nms(preds, 0.1), 0.5)
    radial_then_nms = rotated_nms(radial_suppression(preds, 0.5), 0.1)
    assert len(nms_then_radial) == len(radial_then_nms) == 1
    assert nms_then_radial[0].cx == pytest.approx((0.45 * 0.7) / 1.6, abs=1e-12)
    assert radial_then_nms[0].cx == pytest.approx((0.1 * 0.8 + 0.45 * 0.7) / 2.4,
                                                  abs=1e-12)
    assert nms_then_radial[0].cx != radial_then_nms[0].cx

    # the pipeline runs NMS before radial
    assert filter_pipeline(preds, SuppressionConfig(min_confidence=0.02)) == \
        nms_then_radial


def test_pipeline_collapses_stacked_clusters():
    rng = np.random.default_rng(11)
    anchors = [(-10.0, 0.0), (0.0, 8.0), (12.0, -5.0)]
    preds = []
    for ax, ay in anchors:
        for _ in range(8):
            preds.append(box_at(ax + rng.normal(0, 0.1), ay + rng.normal(0, 0.1),
                                float(rng.uniform(0.3, 1.0)), w=2.0, h=1.0))
    preds.append(box_at(5.0, 5.0, 0.001))  # junk below the confidence floor
    out = filter_pipeline(preds, SuppressionConfig())
    assert len(out) == 3
    got = sorted((round(p.cx), round(p.cy)) for p in out)
    assert got == sorted((round(x), round(y)) for x, y in anchors)


def test_suppression_config_validation():
    with pytest.raises(ValueError):
        SuppressionConfig(nms_iou_threshold=1.5)
    with pytest.raises(ValueError):
        SuppressionConfig(min_confidence=-0.1)
    with pytest.raises(ValueError):
        SuppressionConfig(radial_radius=-1.0)
