"""NuScenes-style detection evaluation.

Predictions are matched to ground truth greedily by descending confidence
using 2D center distance only. AP is averaged over 101 recall percentiles
at four distance thresholds; true-positive errors (translation, scale,
orientation, velocity, attribute) are plain means over the pairs matched
at the TP threshold; the composite score folds mAP and the five errors
together. Also hosts the confidence-weighted KDE heatmap over predicted
centers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import BevBox, BevExtent, center_distance_2d


@dataclass(frozen=True)
class EvalConfig:
    """Thresholds, recall sampling, and per-class metric exclusions."""

    dist_thresholds: tuple[float, ...] = (0.5, 1.0, 2.0, 4.0)
    recall_samples: int = 101
    tp_match_threshold: float = 2.0
    min_recall: float = 0.1
    min_precision: float = 0.1
    class_names: tuple[str, ...] | None = None
    yaw_period_pi_classes: tuple[str, ...] = ("barrier",)
    exclude_orientation_classes: tuple[str, ...] = ("traffic_cone",)
    exclude_velocity_classes: tuple[str, ...] = ("traffic_cone", "barrier")
    exclude_attribute_classes: tuple[str, ...] = ("traffic_cone", "barrier")

    def __post_init__(self) -> None:
        ths = self.dist_thresholds
        if not ths or any(t <= 0 for t in ths) or list(ths) != sorted(ths):
            raise ValueError("dist_thresholds must be positive and ascending")
        if self.recall_samples < 2:
            raise ValueError("recall_samples must be >= 2")


@dataclass(frozen=True)
class TPErrors:
    """Mean true-positive errors; a component is None when no matched pair
    contributes to it (e.g. attributes absent from the corpus)."""

    trans_err: float | None
    scale_err: float | None
    orient_err: float | None
    vel_err: float | None
    attr_err: float | None

    def as_ordered(self) -> tuple[float | None, ...]:
        return (self.trans_err, self.scale_err, self.orient_err,
                self.vel_err, self.attr_err)

    def to_dict(self) -> dict:
        return {"mATE": self.trans_err, "mASE": self.scale_err,
                "mAOE": self.orient_err, "mAVE": self.vel_err,
                "mAAE": self.attr_err}


@dataclass
class MatchResult:
    """Greedy matching outcome for one class in one scene."""

    pairs: list[tuple[int, int]]
    unmatched_preds: list[int]
    unmatched_gts: list[int]


@dataclass
class EvalReport:
    """Per-class AP at each distance threshold plus the corpus aggregates."""

    ap: dict[str, dict[float, float | None]]
    mean_ap: float
    tp_errors: TPErrors
    nds: float
    n_gt: dict[str, int]
    n_pred: dict[str, int]

    def to_dict(self) -> dict:
        out = {"mAP": self.mean_ap, "NDS": self.nds}
        out.update(self.tp_errors.to_dict())
        out["per_class_ap"] = {
            cls: {f"{th:g}": ap for th, ap in per.items()}
            for cls, per in self.ap.items()
        }
        out["n_gt"] = dict(self.n_gt)
        out["n_pred"] = dict(self.n_pred)
        return out


def greedy_match(preds: list[BevBox], gts: list[BevBox],
                 threshold: float) -> MatchResult:
    """Match predictions (descending confidence) to the nearest unmatched GT
    within `threshold` meters; one GT per prediction, single class per call."""
    classes = {b.class_id for b in preds} | {b.class_id for b in gts}
    if len(classes) > 1:
        raise ValueError(f"greedy_match is per-class, got classes {sorted(classes)}")
    order = sorted(range(len(preds)), key=lambda i: (-preds[i].confidence, i))
    taken = [False] * len(gts)
    pairs: list[tuple[int, int]] = []
    unmatched_preds: list[int] = []
    for i in order:
        best_j, best_d = -1, math.inf
        for j, gt in enumerate(gts):
            if taken[j]:
                continue
            d = center_distance_2d(preds[i], gt)
            if d < best_d:
                best_j, best_d = j, d
        if best_j >= 0 and best_d < threshold:
            taken[best_j] = True
            pairs.append((i, best_j))
        else:
            unmatched_preds.append(i)
    unmatched_gts = [j for j, t in enumerate(taken) if not t]
    return MatchResult(pairs, unmatched_preds, unmatched_gts)


def average_precision(is_tp: np.ndarray, n_gt: int, recall_samples: int = 101,
                      min_recall: float = 0.1, min_precision: float = 0.1) -> float | None:
    """AP from a confidence-ordered TP/FP sequence.

    Precision is interpolated at `recall_samples` points on [0, 1]; recalls
    below min_recall and precision mass below min_precision are dropped and
    the mean renormalized. Returns None when n_gt = 0 (AP undefined).
    """
    if n_gt == 0:
        return None
    tp = np.asarray(is_tp, dtype=bool)
    if tp.size == 0:
        return 0.0
    tp_cum = np.cumsum(tp)
    fp_cum = np.cumsum(~tp)
    recall = tp_cum / n_gt
    precision = tp_cum / (tp_cum + fp_cum)
    rec_grid = np.linspace(0.0, 1.0, recall_samples)
    prec_i = np.interp(rec_grid, recall, precision, right=0.0)
    start = round((recall_samples - 1) * min_recall) + 1
    clipped = np.maximum(prec_i[start:] - min_precision, 0.0)
    return float(np.mean(clipped) / (1.0 - min_precision))


def _aligned_scale_error(pred: BevBox, gt: BevBox) -> float:
    inter = min(pred.w, gt.w) * min(pred.h, gt.h) * min(pred.l, gt.l)
    union = pred.w * pred.h * pred.l + gt.w * gt.h * gt.l - inter
    return 1.0 - inter / union


def _yaw_error(pred: BevBox, gt: BevBox, period: float) -> float:
    d = abs(pred.yaw - gt.yaw) % period
    return min(d, period - d)


def tp_errors(pairs: list[tuple[BevBox, BevBox]],
              config: EvalConfig = EvalConfig()) -> TPErrors:
    """Mean errors over matched (prediction, gt) pairs.

    Pairs are grouped by GT class; each error is averaged within a class
    and then macro-averaged over the classes that contribute, honoring the
    per-class exclusion lists. Attribute error only counts pairs where both
    boxes carry an attribute label.
    """
    by_class: dict[str, list[tuple[BevBox, BevBox]]] = {}
    for pred, gt in pairs:
        by_class.setdefault(gt.class_id, []).append((pred, gt))

    buckets: dict[str, list[float]] = {k: [] for k in
                                       ("trans", "scale", "orient", "vel", "attr")}
    for cls, cls_pairs in sorted(by_class.items()):
        trans = [center_distance_2d(p, g) for p, g in cls_pairs]
        buckets["trans"].append(float(np.mean(trans)))
        buckets["scale"].append(float(np.mean([_aligned_scale_error(p, g)
                                               for p, g in cls_pairs])))
        if cls not in config.exclude_orientation_classes:
            period = math.pi if cls in config.yaw_period_pi_classes else 2.0 * math.pi
            buckets["orient"].append(float(np.mean([_yaw_error(p, g, period)
                                                    for p, g in cls_pairs])))
        if cls not in config.exclude_velocity_classes:
            buckets["vel"].append(float(np.mean(
                [math.hypot(p.vx - g.vx, p.vy - g.vy) for p, g in cls_pairs])))
        if cls not in config.exclude_attribute_classes:
            labelled = [(p, g) for p, g in cls_pairs
                        if p.attribute is not None and g.attribute is not None]
            if labelled:
                acc = np.mean([p.attribute == g.attribute for p, g in labelled])
                buckets["attr"].append(1.0 - float(acc))

    def agg(vals: list[float]) -> float | None:
        return float(np.mean(vals)) if vals else None

    return TPErrors(agg(buckets["trans"]), agg(buckets["scale"]),
                    agg(buckets["orient"]), agg(buckets["vel"]),
                    agg(buckets["attr"]))


def nds(map_value: float, errors: TPErrors) -> float:
    """Composite detection score.

    (5 * mAP + sum over available errors of (1 - min(1, err))) normalized by
    (5 + number of available errors); with all five errors present this is
    the usual /10 composite.
    """
    # averaging many per-class APs can overshoot 1.0 by a few ulp
    if not -1e-9 <= map_value <= 1.0 + 1e-9:
        raise ValueError(f"mAP must be in [0, 1], got {map_value}")
    map_value = min(1.0, max(0.0, map_value))
    terms = [1.0 - min(1.0, e) for e in errors.as_ordered() if e is not None]
    for e in errors.as_ordered():
        if e is not None and (e < 0 or not math.isfinite(e)):
            raise ValueError(f"TP errors must be finite and nonnegative, got {e}")
    return (5.0 * map_value + sum(terms)) / (5.0 + len(terms))


def _accumulate_class(scenes_preds: list[list[BevBox]], scenes_gts: list[list[BevBox]],
                      threshold: float):
    """Corpus-wide greedy matching for one class at one distance threshold.

    Returns (is_tp in descending-confidence order, n_gt, matched box pairs).
    """
    entries = []
    for s, preds in enumerate(scenes_preds):
        for i, p in enumerate(preds):
            entries.append((-p.confidence, s, i, p))
    entries.sort(key=lambda e: (e[0], e[1], e[2]))
    taken: list[set[int]] = [set() for _ in scenes_gts]
    is_tp = np.zeros(len(entries), dtype=bool)
    pairs: list[tuple[BevBox, BevBox]] = []
    for k, (_, s, _, pred) in enumerate(entries):
        gts = scenes_gts[s]
        best_j, best_d = -1, math.inf
        for j, gt in enumerate(gts):
            if j in taken[s]:
                continue
            d = center_distance_2d(pred, gt)
            if d < best_d:
                best_j, best_d = j, d
        if best_j >= 0 and best_d < threshold:
            taken[s].add(best_j)
            is_tp[k] = True
            pairs.append((pred, gts[best_j]))
    n_gt = sum(len(g) for g in scenes_gts)
    return is_tp, n_gt, pairs


def evaluate_corpus(scenes: list, config: EvalConfig = EvalConfig()) -> EvalReport:
    """Full evaluation of SceneRecord-like objects carrying gt and pred boxes.

    Each scene needs `gt_boxes` and `pred_boxes` attributes. Classes with no
    GT anywhere are excluded from the AP mean; TP errors use only the pairs
    matched at the TP threshold.
    """
    gt_classes = sorted({b.class_id for sc in scenes for b in sc.gt_boxes})
    classes = list(config.class_names) if config.class_names else gt_classes

    ap: dict[str, dict[float, float | None]] = {}
    n_gt: dict[str, int] = {}
    n_pred: dict[str, int] = {}
    all_pairs: list[tuple[BevBox, BevBox]] = []
    ap_values: list[float] = []
    for cls in classes:
        scenes_preds = [[b for b in (sc.pred_boxes or []) if b.class_id == cls]
                        for sc in scenes]
        scenes_gts = [[b for b in sc.gt_boxes if b.class_id == cls] for sc in scenes]
        n_gt[cls] = sum(len(g) for g in scenes_gts)
        n_pred[cls] = sum(len(p) for p in scenes_preds)
        ap[cls] = {}
        for th in config.dist_thresholds:
            is_tp, total_gt, pairs = _accumulate_class(scenes_preds, scenes_gts, th)
            value = average_precision(is_tp, total_gt, config.recall_samples,
                                      config.min_recall, config.min_precision)
            ap[cls][th] = value
            if value is not None:
                ap_values.append(value)
            if th == config.tp_match_threshold:
                all_pairs.extend(pairs)
        if config.tp_match_threshold not in config.dist_thresholds:
            _, _, pairs = _accumulate_class(scenes_preds, scenes_gts,
                                            config.tp_match_threshold)
            all_pairs.extend(pairs)

    mean_ap = float(np.mean(ap_values)) if ap_values else 0.0
    errors = tp_errors(all_pairs, config)
    return EvalReport(ap=ap, mean_ap=mean_ap, tp_errors=errors,
                      nds=nds(mean_ap, errors), n_gt=n_gt, n_pred=n_pred)


def kde_heatmap(centers: np.ndarray, weights: np.ndarray | None, bandwidth: float,
                extent: BevExtent, grid_h: int | None = None,
                grid_w: int | None = None) -> np.ndarray:
    """Gaussian kernel density over BEV centers on the extent's raster grid.

    Cell (i, j) holds the density at that cell's center; the cell-area
    weighted sum approximates the total weight when the extent dwarfs the
    bandwidth. Empty input yields a zero grid.
    """
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    gh = grid_h if grid_h is not None else extent.grid_h
    gw = grid_w if grid_w is not None else extent.grid_w
    pts = np.asarray(centers, dtype=float).reshape(-1, 2)
    if pts.shape[0] == 0:
        return np.zeros((gh, gw))
    w = np.ones(pts.shape[0]) if weights is None else np.asarray(weights, dtype=float)
    if w.shape[0] != pts.shape[0]:
        raise ValueError("weights and centers must have equal length")
    dx = extent.width / gw
    dy = extent.height / gh
    xs = extent.x_min + (np.arange(gw) + 0.5) * dx
    ys = extent.y_min + (np.arange(gh) + 0.5) * dy
    # (gh, gw, N) squared distances split over axes to stay vectorized
    dx2 = (xs[None, :, None] - pts[None, None, :, 0]) ** 2
    dy2 = (ys[:, None, None] - pts[None, None, :, 1]) ** 2
    kern = np.exp(-(dx2 + dy2) / (2.0 * bandwidth ** 2))
    norm = 1.0 / (2.0 * math.pi * bandwidth ** 2)
    return norm * np.einsum("ijn,n->ij", kern, w)
