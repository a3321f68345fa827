"""Matching costs and prediction-to-target assignment strategies.

The cost of pairing a prediction with a target is the same weighted sum
used for training: lambda_cls * focal + lambda_reg * l1 over the
10-parameter box vectors. Three matchers consume it: optimal one-to-one
(Hungarian), simple many-to-one via repeated targets, and a dynamic-k
optimal-transport approximation on the raw (unmasked) cost matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import BevBox, center_distance_2d

_PROB_EPS = 1e-7


@dataclass(frozen=True)
class CostWeights:
    """Weights of the classification and regression cost terms."""

    lambda_cls: float = 2.0
    lambda_reg: float = 0.25
    focal_alpha: float = 0.25
    focal_gamma: float = 2.0

    def __post_init__(self) -> None:
        for name in ("lambda_cls", "lambda_reg", "focal_alpha", "focal_gamma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")


@dataclass
class AssignmentResult:
    """Matching between P predictions and G targets.

    pred_to_gt[i] is the target index matched to prediction i (None if
    unmatched); gt_to_preds[j] lists the predictions matched to target j.
    """

    pred_to_gt: list[int | None]
    gt_to_preds: list[list[int]]
    total_cost: float = 0.0

    @property
    def pairs(self) -> list[tuple[int, int]]:
        return [(i, j) for i, j in enumerate(self.pred_to_gt) if j is not None]

    def validate(self, one_to_one: bool = False) -> None:
        seen = [0] * len(self.gt_to_preds)
        for i, j in enumerate(self.pred_to_gt):
            if j is None:
                continue
            if not 0 <= j < len(self.gt_to_preds):
                raise ValueError(f"prediction {i} matched to invalid target {j}")
            if i not in self.gt_to_preds[j]:
                raise ValueError(f"pred_to_gt and gt_to_preds disagree at pred {i}")
            seen[j] += 1
        for j, preds in enumerate(self.gt_to_preds):
            if len(set(preds)) != len(preds):
                raise ValueError(f"target {j} lists a prediction twice")
            if len(preds) != seen[j]:
                raise ValueError(f"target {j} lists predictions not matched to it")
            if one_to_one and len(preds) > 1:
                raise ValueError(f"target {j} matched {len(preds)} predictions in one-to-one mode")


def focal_loss(pred_prob: float, target: int, alpha: float = 0.25,
               gamma: float = 2.0) -> float:
    """Focal loss -alpha * (1 - p_t)^gamma * log(p_t) on a clamped probability.

    p_t is pred_prob when target is 1, else 1 - pred_prob.
    """
    p = min(max(float(pred_prob), _PROB_EPS), 1.0 - _PROB_EPS)
    p_t = p if target else 1.0 - p
    return -alpha * (1.0 - p_t) ** gamma * math.log(p_t)


def l1_box_loss(pred: BevBox, gt: BevBox) -> float:
    """Mean absolute difference over the 10 box parameters; symmetric."""
    return float(np.mean(np.abs(pred.as_vector() - gt.as_vector())))


def class_probability(pred: BevBox, class_id: str) -> float:
    """The probability a prediction assigns to a class.

    Predictions carry a single (class, confidence) pair, so mass on any
    other class is below the clamping floor.
    """
    return pred.confidence if pred.class_id == class_id else 0.0


def build_cost_matrix(preds: list[BevBox], gts: list[BevBox],
                      weights: CostWeights = CostWeights()) -> np.ndarray:
    """P x G matching costs: lambda_cls * focal(i, j) + lambda_reg * l1(i, j)."""
    if not preds or not gts:
        raise ValueError("cost matrix needs at least one prediction and one target")
    pred_vecs = np.stack([p.as_vector() for p in preds])
    gt_vecs = np.stack([g.as_vector() for g in gts])
    l1 = np.mean(np.abs(pred_vecs[:, None, :] - gt_vecs[None, :, :]), axis=2)
    probs = np.array([[class_probability(p, g.class_id) for g in gts] for p in preds])
    p_t = np.clip(probs, _PROB_EPS, 1.0 - _PROB_EPS)
    focal = -weights.focal_alpha * (1.0 - p_t) ** weights.focal_gamma * np.log(p_t)
    return weights.lambda_cls * focal + weights.lambda_reg * l1


def hungarian(cost: np.ndarray) -> AssignmentResult:
    """Minimal-total-cost one-to-one assignment of min(P, G) pairs."""
    c = np.asarray(cost, dtype=float)
    if c.ndim != 2 or c.size == 0:
        raise ValueError("cost matrix must be 2-D and nonempty")
    if not np.all(np.isfinite(c)):
        raise ValueError("cost matrix entries must be finite")
    rows, cols = linear_sum_assignment(c)
    pred_to_gt: list[int | None] = [None] * c.shape[0]
    gt_to_preds: list[list[int]] = [[] for _ in range(c.shape[1])]
    for i, j in zip(rows.tolist(), cols.tolist()):
        pred_to_gt[i] = j
        gt_to_preds[j].append(i)
    return AssignmentResult(pred_to_gt, gt_to_preds, float(c[rows, cols].sum()))


def simple_many_to_one(preds: list[BevBox], gts: list[BevBox], repeat_k: int = 6,
                       weights: CostWeights = CostWeights()) -> AssignmentResult:
    """Repeat each target k times, solve the rectangular assignment, collapse.

    Each target receives up to repeat_k predictions; with repeat_k = 1 this
    is exactly :func:`hungarian` on the unrepeated matrix.
    """
    if repeat_k < 1:
        raise ValueError(f"repeat_k must be >= 1, got {repeat_k}")
    if not gts:
        return AssignmentResult([None] * len(preds), [], 0.0)
    cost = build_cost_matrix(preds, gts, weights)
    tiled = np.repeat(cost, repeat_k, axis=1)
    rows, cols = linear_sum_assignment(tiled)
    pred_to_gt: list[int | None] = [None] * len(preds)
    gt_to_preds: list[list[int]] = [[] for _ in range(len(gts))]
    total = 0.0
    for i, jk in zip(rows.tolist(), cols.tolist()):
        j = jk // repeat_k
        pred_to_gt[i] = j
        gt_to_preds[j].append(i)
        total += float(cost[i, j])
    for lst in gt_to_preds:
        lst.sort()
    return AssignmentResult(pred_to_gt, gt_to_preds, total)


def center_affinity(preds: list[BevBox], gts: list[BevBox]) -> np.ndarray:
    """exp(-center distance) affinity, a bounded stand-in for IoU overlap."""
    return np.array([[math.exp(-center_distance_2d(p, g)) for g in gts] for p in preds])


def simota(cost: np.ndarray, affinity: np.ndarray, top_q: int = 10) -> AssignmentResult:
    """Dynamic-k assignment on the raw cost matrix.

    Each target's capacity is round(sum of its top_q affinities) clamped to
    [1, P]; it claims its capacity-many lowest-cost predictions, and a
    prediction claimed by several targets goes to the one where it is
    cheapest. Ties break toward the lower prediction/target index.
    """
    c = np.asarray(cost, dtype=float)
    aff = np.asarray(affinity, dtype=float)
    if c.ndim != 2 or c.size == 0:
        raise ValueError("cost matrix must be 2-D and nonempty")
    if c.shape != aff.shape:
        raise ValueError("cost and affinity shapes must agree")
    if top_q < 1:
        raise ValueError(f"top_q must be >= 1, got {top_q}")
    n_pred, n_gt = c.shape
    q = min(top_q, n_pred)
    candidates: list[list[int]] = []
    for j in range(n_gt):
        top_aff = np.sort(aff[:, j])[::-1][:q]
        k = int(np.clip(round(float(top_aff.sum())), 1, n_pred))
        order = np.argsort(c[:, j], kind="stable")
        candidates.append(order[:k].tolist())
    pred_to_gt: list[int | None] = [None] * n_pred
    gt_to_preds: list[list[int]] = [[] for _ in range(n_gt)]
    total = 0.0
    for i in range(n_pred):
        claiming = [j for j in range(n_gt) if i in candidates[j]]
        if not claiming:
            continue
        best = min(claiming, key=lambda j: (c[i, j], j))
        pred_to_gt[i] = best
        gt_to_preds[best].append(i)
        total += float(c[i, best])
    return AssignmentResult(pred_to_gt, gt_to_preds, total)
