"""Oracle denoiser standing in for the trained decoder.

Emulates the learned behavior at the interface level: each ground-truth box
carries a basin of attraction; a particle landing inside a basin snaps to
that box (center jittered by sigma) with high confidence, while particles in
empty space keep their own position and receive near-zero confidence, the
stand-in for references being pushed aside. Confidence is logistic in the
distance to the nearest GT center. This is an emulation device for testing
the surrounding algorithmic stack, not a model of any trained network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..diffusion import DEFAULT_SNR, SnrScale, unscale_refs, scale_refs
from ..geometry import BevBox, denormalize_center, normalize_center
from .scenes import SceneRecord


@dataclass(frozen=True)
class OracleDenoiserConfig:
    """Basin geometry, jitter, and the confidence model."""

    basin_radius: float = 2.0
    sigma: float = 0.15
    conf_low: float = 0.01
    conf_high: float = 0.95
    conf_softness: float = 0.25
    miss_prob: float = 0.05
    attr_flip_prob: float = 0.1

    def __post_init__(self) -> None:
        if self.basin_radius < 0 or self.sigma < 0:
            raise ValueError("basin_radius and sigma must be nonnegative")
        for name in ("conf_low", "conf_high", "miss_prob", "attr_flip_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if self.conf_low > self.conf_high:
            raise ValueError("conf_low must not exceed conf_high")
        if self.conf_softness <= 0:
            raise ValueError("conf_softness must be positive")

    def confidence_at(self, distance: float) -> float:
        """Logistic falloff centered on the basin boundary."""
        z = (self.basin_radius - distance) / self.conf_softness
        sig = 1.0 / (1.0 + math.exp(-z)) if z > -500 else 0.0
        return self.conf_low + (self.conf_high - self.conf_low) * sig


_ATTR_POOL = ("vehicle.moving", "vehicle.parked", "pedestrian.moving",
              "pedestrian.standing")


def oracle_denoise(particles: np.ndarray, scene: SceneRecord,
                   cfg: OracleDenoiserConfig, rng: np.random.Generator,
                   snr: SnrScale = DEFAULT_SNR) -> tuple[np.ndarray, list[BevBox]]:
    """Predict a clean center and full box for each particle.

    `particles` live in the signal-scaled frame. Returns (z0_hat, boxes):
    z0_hat are the predicted clean centers back in the scaled frame, boxes
    the corresponding BEV predictions in meters.
    """
    pos = np.asarray(particles, dtype=float).reshape(-1, 2)
    unit = unscale_refs(pos, snr)
    meters = denormalize_center(unit, scene.extent)
    n = pos.shape[0]
    gts = scene.gt_boxes
    boxes: list[BevBox] = []
    pred_m = np.empty((n, 2))
    if gts:
        gt_centers = np.array([[b.cx, b.cy] for b in gts])
        dists = np.linalg.norm(meters[:, None, :] - gt_centers[None, :, :], axis=2)
        nearest = np.argmin(dists, axis=1)
    for i in range(n):
        if gts:
            j = int(nearest[i])
            d = float(dists[i, j])
            missed = rng.uniform() < cfg.miss_prob
            if d <= cfg.basin_radius and not missed:
                gt = gts[j]
                jitter = rng.normal(0.0, cfg.sigma, 2) if cfg.sigma > 0 else np.zeros(2)
                attr = gt.attribute
                if attr is not None and rng.uniform() < cfg.attr_flip_prob:
                    choices = [a for a in _ATTR_POOL if a != attr]
                    attr = choices[int(rng.integers(len(choices)))]
                box = BevBox(cx=gt.cx + jitter[0], cy=gt.cy + jitter[1], cz=gt.cz,
                             w=gt.w, h=gt.h, l=gt.l,
                             sin_yaw=gt.sin_yaw, cos_yaw=gt.cos_yaw,
                             vx=gt.vx, vy=gt.vy, class_id=gt.class_id,
                             confidence=cfg.confidence_at(d), attribute=attr)
                boxes.append(box)
                pred_m[i] = (box.cx, box.cy)
                continue
            conf = cfg.conf_low if missed else cfg.confidence_at(d)
            cls = gts[j].class_id
        else:
            conf = cfg.conf_low
            cls = "car"
        box = BevBox(cx=meters[i, 0], cy=meters[i, 1], cz=0.5,
                     w=1.0, h=1.0, l=1.0, sin_yaw=0.0, cos_yaw=1.0,
                     vx=0.0, vy=0.0, class_id=cls, confidence=conf)
        boxes.append(box)
        pred_m[i] = meters[i]
    z0_hat = scale_refs(normalize_center(pred_m, scene.extent), snr)
    return z0_hat, boxes


def exact_oracle_config() -> OracleDenoiserConfig:
    """Noise-free oracle whose basins cover any scene; for plumbing tests."""
    return OracleDenoiserConfig(basin_radius=1e9, sigma=0.0, miss_prob=0.0,
                                attr_flip_prob=0.0, conf_softness=1e9,
                                conf_low=0.9, conf_high=0.9)
