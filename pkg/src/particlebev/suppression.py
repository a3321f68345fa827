"""Test-time filtering of stacked predictions.

Stages run in a fixed order: confidence threshold, greedy per-class
rotated NMS, then radial suppression, which replaces each remaining box
by the confidence-weighted average of its same-class neighbors within a
ball of radius r (the neighbors are consumed). Each stage can be toggled
for ablation sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import BevBox, center_distance_2d, rotated_iou


@dataclass(frozen=True)
class SuppressionConfig:
    """Thresholds and per-stage enable flags for the filtering pipeline."""

    nms_iou_threshold: float = 0.1
    min_confidence: float = 0.02
    radial_radius: float = 0.5
    enable_confidence: bool = True
    enable_nms: bool = True
    enable_radial: bool = True
    class_agnostic_nms: bool = False

    def __post_init__(self) -> None:
        if not 0.0 <= self.nms_iou_threshold <= 1.0:
            raise ValueError("nms_iou_threshold must be in [0, 1]")
        if not 0.0 <= self.min_confidence <= 1.0:
            raise ValueError("min_confidence must be in [0, 1]")
        if self.radial_radius < 0.0:
            raise ValueError("radial_radius must be nonnegative")


def confidence_filter(preds: list[BevBox], min_confidence: float) -> list[BevBox]:
    """Keep predictions with confidence >= min_confidence, order preserved."""
    return [p for p in preds if p.confidence >= min_confidence]


def _confidence_order(preds: list[BevBox]) -> list[int]:
    # descending confidence, ties toward the earlier box for determinism
    return sorted(range(len(preds)), key=lambda i: (-preds[i].confidence, i))


def rotated_nms(preds: list[BevBox], iou_threshold: float,
                class_agnostic: bool = False) -> list[BevBox]:
    """Greedy NMS on rotated footprints, applied within each class.

    Output is in descending-confidence order; a box survives iff its IoU
    with every already-kept box of the same class is below the threshold.
    """
    kept: list[int] = []
    for i in _confidence_order(preds):
        box = preds[i]
        ok = True
        for k in kept:
            other = preds[k]
            if not class_agnostic and other.class_id != box.class_id:
                continue
            if rotated_iou(box, other) >= iou_threshold:
                ok = False
                break
        if ok:
            kept.append(i)
    return [preds[i] for i in kept]


def radial_suppression(preds: list[BevBox], radius: float,
                       return_groups: bool = False):
    """Merge same-class boxes within `radius` into confidence-weighted means.

    Boxes are visited in descending confidence. Each unconsumed box becomes
    the representative of a group holding itself plus every unconsumed
    same-class box whose center lies strictly within `radius`; the group is
    replaced by the confidence-weighted average of its 10-parameter vectors
    (yaw re-normalized after averaging) carrying the representative's
    confidence. Every input box contributes to exactly one output.

    With return_groups=True also returns the list of input-index groups.
    """
    if radius < 0.0:
        raise ValueError("radius must be nonnegative")
    consumed = [False] * len(preds)
    merged: list[BevBox] = []
    groups: list[list[int]] = []
    for i in _confidence_order(preds):
        if consumed[i]:
            continue
        rep = preds[i]
        group = [
            j for j in range(len(preds))
            if not consumed[j]
            and preds[j].class_id == rep.class_id
            and center_distance_2d(rep, preds[j]) < radius
        ]
        if i not in group:  # radius = 0 keeps the box as its own group
            group = [i]
        for j in group:
            consumed[j] = True
        if len(group) == 1:
            merged.append(rep)
        else:
            weights = np.array([preds[j].confidence for j in group])
            vecs = np.stack([preds[j].as_vector() for j in group])
            mean = weights @ vecs / weights.sum()
            merged.append(BevBox.from_vector(
                mean, class_id=rep.class_id, confidence=rep.confidence,
                attribute=rep.attribute))
        groups.append(sorted(group))
    if return_groups:
        return merged, groups
    return merged


def filter_pipeline(preds: list[BevBox],
                    config: SuppressionConfig = SuppressionConfig()) -> list[BevBox]:
    """confidence filter -> rotated NMS -> radial suppression, per the flags."""
    out = list(preds)
    if config.enable_confidence:
        out = confidence_filter(out, config.min_confidence)
    if config.enable_nms:
        out = rotated_nms(out, config.nms_iou_threshold, config.class_agnostic_nms)
    if config.enable_radial:
        out = radial_suppression(out, config.radial_radius)
    return out
