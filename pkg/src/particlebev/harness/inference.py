"""Training-prep and inference paths wired end to end.

`run_training_prep` composes center extraction, padding, scaling, forward
noising, and query interpolation in that order, returning every
intermediate. `run_inference` runs the particle refinement loop: random
scaled references, DDIM ladder with per-step denoising and low-confidence
renewal, union of the per-step prediction sets, then the suppression
pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from ..diffusion import (DEFAULT_SNR, DiffusionSchedule, SnrScale,
                         make_cosine_schedule, ddim_step, q_sample,
                         pad_references, renew_references, scale_refs,
                         time_pairs, unscale_refs)
from ..geometry import BevBox, normalize_center
from ..querygrid import QueryGrid, interpolate
from ..suppression import SuppressionConfig, filter_pipeline
from .oracle import OracleDenoiserConfig, oracle_denoise
from .scenes import SceneRecord

RENEWAL_MODES = ("normal", "none")


class Denoiser(Protocol):
    """Maps noisy scaled particles at diffusion time t to predictions.

    Returns (z0_hat, boxes): predicted clean centers in the scaled frame,
    one BevBox per particle. `queries` is the interpolated query matrix for
    the current particle positions, or None when no grid is in play.
    """

    def __call__(self, particles: np.ndarray, t: int, scene: SceneRecord,
                 queries: np.ndarray | None,
                 rng: np.random.Generator) -> tuple[np.ndarray, list[BevBox]]: ...


def make_oracle_denoiser(cfg: OracleDenoiserConfig,
                         snr: SnrScale = DEFAULT_SNR) -> Denoiser:
    def denoiser(particles, t, scene, queries, rng):
        return oracle_denoise(particles, scene, cfg, rng, snr)

    return denoiser


@dataclass
class TrainingPrep:
    """Intermediates of the training-side reference preparation."""

    gt_centers: np.ndarray
    centers_unit: np.ndarray
    padded_unit: np.ndarray
    refs_scaled: np.ndarray
    t: int
    eps: np.ndarray
    noisy_refs: np.ndarray
    noisy_unit: np.ndarray
    queries: np.ndarray | None


def run_training_prep(scene: SceneRecord, n_total: int,
                      schedule: DiffusionSchedule, snr: SnrScale,
                      rng: np.random.Generator, grid: QueryGrid | None = None,
                      t: int | None = None) -> TrainingPrep:
    """Extract centers, pad, scale, noise to a random diffusion time, and
    interpolate queries at the noisy references."""
    gt_centers = np.array([[b.cx, b.cy] for b in scene.gt_boxes]).reshape(-1, 2)
    centers_unit = normalize_center(gt_centers, scene.extent)
    padded_unit = pad_references(centers_unit, n_total, rng)
    refs_scaled = scale_refs(padded_unit, snr)
    if t is None:
        t = int(rng.integers(0, schedule.T))
    eps = rng.standard_normal(refs_scaled.shape)
    noisy_refs = q_sample(refs_scaled, t, eps, schedule, clamp_scale=snr.scale)
    noisy_unit = unscale_refs(noisy_refs, snr)
    queries = interpolate(grid, noisy_unit) if grid is not None else None
    return TrainingPrep(gt_centers=gt_centers, centers_unit=centers_unit,
                        padded_unit=padded_unit, refs_scaled=refs_scaled,
                        t=t, eps=eps, noisy_refs=noisy_refs,
                        noisy_unit=noisy_unit, queries=queries)


@dataclass
class InferenceResult:
    """Final predictions plus the per-step prediction sets and particle track."""

    pred_boxes: list[BevBox]
    step_boxes: list[list[BevBox]] = field(repr=False)
    particle_history: list[np.ndarray] = field(repr=False)


def run_inference(scene: SceneRecord, n_particles: int, ddim_steps: int,
                  denoiser: Denoiser, suppression: SuppressionConfig,
                  rng: np.random.Generator,
                  schedule: DiffusionSchedule | None = None,
                  snr: SnrScale = DEFAULT_SNR, grid: QueryGrid | None = None,
                  renewal: str = "normal",
                  renewal_threshold: float = 0.1) -> InferenceResult:
    """Particle refinement over the DDIM ladder with renewal and filtering.

    Collects the prediction set of every DDIM step and filters their union:
    confidence cut, per-class rotated NMS, then radial suppression.
    """
    if n_particles < 1:
        raise ValueError("n_particles must be >= 1")
    if renewal not in RENEWAL_MODES:
        raise ValueError(f"renewal must be one of {RENEWAL_MODES}, got {renewal!r}")
    if schedule is None:
        schedule = make_cosine_schedule(1000)
    refs = np.clip(rng.standard_normal((n_particles, 2)), -snr.scale, snr.scale)
    history = [refs.copy()]
    step_boxes: list[list[BevBox]] = []
    for t_now, t_next in time_pairs(schedule.T, ddim_steps):
        queries = interpolate(grid, unscale_refs(refs, snr)) if grid is not None else None
        z0_hat, boxes = denoiser(refs, t_now, scene, queries, rng)
        step_boxes.append(boxes)
        refs = ddim_step(refs, z0_hat, t_now, t_next, schedule)
        if renewal == "normal":
            confs = np.array([b.confidence for b in boxes])
            refs = renew_references(refs, confs, renewal_threshold, rng,
                                    scale=snr.scale)
        history.append(refs.copy())
    union = [b for boxes in step_boxes for b in boxes]
    final = filter_pipeline(union, suppression)
    return InferenceResult(pred_boxes=final, step_boxes=step_boxes,
                           particle_history=history)
