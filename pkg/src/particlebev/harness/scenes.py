"""Synthetic BEV scene corpus and JSONL serialization.

A SceneRecord holds one frame's ground-truth boxes and, optionally, a
prediction set; corpora are stored one JSON object per line (UTF-8) so
external detectors can be evaluated by exporting to the same schema.
World generation is deterministic per (corpus seed, scene index): every
scene draws from its own Generator, so serial and parallel generation
produce identical corpora.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..geometry import DEFAULT_EXTENT, BevBox, BevExtent


class SeparationError(RuntimeError):
    """Could not place the requested objects at the required separation."""


# BEV footprint (w, h), vertical size l, and speed range per class
CLASS_SPECS: dict[str, dict] = {
    "car": {"w": 4.5, "h": 1.9, "l": 1.6, "speed": (0.0, 8.0)},
    "truck": {"w": 7.0, "h": 2.5, "l": 2.9, "speed": (0.0, 6.0)},
    "pedestrian": {"w": 0.6, "h": 0.6, "l": 1.7, "speed": (0.0, 1.5)},
    "barrier": {"w": 2.0, "h": 0.5, "l": 1.0, "speed": (0.0, 0.0)},
    "traffic_cone": {"w": 0.4, "h": 0.4, "l": 0.8, "speed": (0.0, 0.0)},
}

# attribute labels keyed by (class kind, moving?)
_MOVER_ATTRS = {
    "car": ("vehicle.parked", "vehicle.moving"),
    "truck": ("vehicle.parked", "vehicle.moving"),
    "pedestrian": ("pedestrian.standing", "pedestrian.moving"),
}


@dataclass
class SceneRecord:
    """One frame: ground truth, optional predictions, and the BEV extent."""

    scene_id: str
    timestamp: float
    gt_boxes: list[BevBox]
    pred_boxes: list[BevBox] | None = None
    extent: BevExtent = field(default_factory=lambda: DEFAULT_EXTENT)

    def to_dict(self) -> dict:
        d = {
            "scene_id": self.scene_id,
            "timestamp": self.timestamp,
            "extent": self.extent.to_dict(),
            "gt_boxes": [b.to_dict() for b in self.gt_boxes],
        }
        if self.pred_boxes is not None:
            d["pred_boxes"] = [b.to_dict() for b in self.pred_boxes]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SceneRecord":
        preds = d.get("pred_boxes")
        return cls(
            scene_id=str(d["scene_id"]),
            timestamp=float(d["timestamp"]),
            gt_boxes=[BevBox.from_dict(b) for b in d["gt_boxes"]],
            pred_boxes=None if preds is None else [BevBox.from_dict(b) for b in preds],
            extent=BevExtent.from_dict(d["extent"]),
        )

    def with_predictions(self, preds: list[BevBox]) -> "SceneRecord":
        return SceneRecord(self.scene_id, self.timestamp, self.gt_boxes,
                           list(preds), self.extent)


@dataclass(frozen=True)
class WorldParams:
    """Knobs of the synthetic world."""

    n_scenes: int = 50
    objects_min: int = 2
    objects_max: int = 8
    classes: tuple[str, ...] = tuple(CLASS_SPECS)
    min_separation: float = 4.0
    border_margin: float = 6.0
    size_jitter: float = 0.15
    extent: BevExtent = field(default_factory=lambda: DEFAULT_EXTENT)

    def __post_init__(self) -> None:
        if self.n_scenes < 1:
            raise ValueError("n_scenes must be >= 1")
        if not 0 <= self.objects_min <= self.objects_max:
            raise ValueError("need 0 <= objects_min <= objects_max")
        if self.min_separation < 0 or self.border_margin < 0:
            raise ValueError("separation and margin must be nonnegative")
        unknown = set(self.classes) - set(CLASS_SPECS)
        if not self.classes or unknown:
            raise ValueError(f"classes must be a nonempty subset of {sorted(CLASS_SPECS)}")
        if not 0 <= self.size_jitter < 1:
            raise ValueError("size_jitter must be in [0, 1)")


def _place_centers(n: int, params: WorldParams, rng: np.random.Generator) -> np.ndarray:
    """Rejection-sample centers with pairwise separation; raises when infeasible."""
    lo_x = params.extent.x_min + params.border_margin
    hi_x = params.extent.x_max - params.border_margin
    lo_y = params.extent.y_min + params.border_margin
    hi_y = params.extent.y_max - params.border_margin
    if lo_x >= hi_x or lo_y >= hi_y:
        raise SeparationError("border margin leaves no room to place objects")
    placed: list[np.ndarray] = []
    attempts = 0
    budget = 200 * max(n, 1)
    while len(placed) < n:
        if attempts >= budget:
            raise SeparationError(
                f"placed {len(placed)}/{n} objects in {budget} attempts; "
                f"min_separation {params.min_separation} is infeasible here")
        attempts += 1
        cand = np.array([rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y)])
        if all(np.hypot(*(cand - p)) >= params.min_separation for p in placed):
            placed.append(cand)
    return np.array(placed).reshape(n, 2)


def _make_box(center: np.ndarray, cls: str, params: WorldParams,
              rng: np.random.Generator) -> BevBox:
    spec = CLASS_SPECS[cls]
    j = params.size_jitter
    w = spec["w"] * rng.uniform(1 - j, 1 + j)
    h = spec["h"] * rng.uniform(1 - j, 1 + j)
    length = spec["l"] * rng.uniform(1 - j, 1 + j)
    yaw = rng.uniform(-math.pi, math.pi)
    speed = rng.uniform(*spec["speed"])
    attr = None
    if cls in _MOVER_ATTRS:
        attr = _MOVER_ATTRS[cls][1] if speed > 0.5 else _MOVER_ATTRS[cls][0]
    return BevBox(cx=float(center[0]), cy=float(center[1]), cz=0.5 * length,
                  w=w, h=h, l=length,
                  sin_yaw=math.sin(yaw), cos_yaw=math.cos(yaw),
                  vx=speed * math.cos(yaw), vy=speed * math.sin(yaw),
                  class_id=cls, confidence=1.0, attribute=attr)


def generate_scenes(params: WorldParams,
                    rng: int | np.random.Generator) -> list[SceneRecord]:
    """Deterministic corpus; `rng` is a corpus seed or a Generator to draw one from."""
    if isinstance(rng, (int, np.integer)):
        base_seed = int(rng)
    else:
        base_seed = int(rng.integers(0, 2 ** 63 - 1))
    scenes = []
    for idx in range(params.n_scenes):
        srng = np.random.default_rng([base_seed, idx])
        n = int(srng.integers(params.objects_min, params.objects_max + 1))
        centers = _place_centers(n, params, srng)
        boxes = [
            _make_box(centers[k], params.classes[int(srng.integers(len(params.classes)))],
                      params, srng)
            for k in range(n)
        ]
        scenes.append(SceneRecord(scene_id=f"scene-{idx:04d}", timestamp=0.5 * idx,
                                  gt_boxes=boxes, extent=params.extent))
    return scenes


def write_scenes(scenes: list[SceneRecord], path: str | Path) -> None:
    """One JSON object per line; scene ids must be unique."""
    ids = [s.scene_id for s in scenes]
    if len(set(ids)) != len(ids):
        raise ValueError("scene ids must be unique within a corpus")
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for scene in scenes:
            fh.write(json.dumps(scene.to_dict(), separators=(",", ":")) + "\n")


def read_scenes(path: str | Path) -> list[SceneRecord]:
    scenes = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                scenes.append(SceneRecord.from_dict(json.loads(line)))
            except (KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{line_no}: bad scene record: {exc}") from exc
    ids = [s.scene_id for s in scenes]
    if len(set(ids)) != len(ids):
        raise ValueError("scene ids must be unique within a corpus")
    return scenes
