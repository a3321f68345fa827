"""Diffusion schedule and particle refinement.

Covers the forward noising of normalized box centers, deterministic DDIM
reverse steps, the descending time-pair ladder, reference padding and
low-confidence renewal. Coordinates pass through two frames: the unit
square [0, 1]^2 and the signal-scaled frame [-scale, scale]^2.

All randomness comes from explicitly passed numpy Generators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DegenerateTimeError(ValueError):
    """A DDIM step was requested at a time where the implied noise is undefined."""


@dataclass(frozen=True)
class DiffusionSchedule:
    """Per-step noise tables: beta[t], alpha[t] = 1 - beta[t], and the
    running product alpha_cumprod[t], indexed by diffusion time t in [0, T)."""

    betas: np.ndarray
    alphas: np.ndarray
    alpha_cumprod: np.ndarray

    def __post_init__(self) -> None:
        b = np.asarray(self.betas, dtype=float)
        a = np.asarray(self.alphas, dtype=float)
        ac = np.asarray(self.alpha_cumprod, dtype=float)
        if not (b.shape == a.shape == ac.shape) or b.ndim != 1 or b.size < 1:
            raise ValueError("schedule tables must be 1-D arrays of equal length")
        if np.any(ac <= 0.0) or np.any(ac > 1.0):
            raise ValueError("alpha_cumprod values must lie in (0, 1]")
        if np.any(np.diff(ac) >= 0.0):
            raise ValueError("alpha_cumprod must be strictly decreasing")
        recon = np.concatenate([[a[0]], ac[:-1] * a[1:]])
        if np.max(np.abs(recon - ac)) > 1e-12:
            raise ValueError("alpha_cumprod does not match the product of alphas")
        object.__setattr__(self, "betas", b)
        object.__setattr__(self, "alphas", a)
        object.__setattr__(self, "alpha_cumprod", ac)

    @property
    def T(self) -> int:
        return int(self.betas.size)

    def alpha_cumprod_at(self, t: int) -> float:
        """Table lookup with the convention alpha_cumprod(-1) = 1 (no noise)."""
        if t == -1:
            return 1.0
        if not 0 <= t < self.T:
            raise ValueError(f"diffusion time {t} outside [-1, {self.T})")
        return float(self.alpha_cumprod[t])


@dataclass(frozen=True)
class SnrScale:
    """Signal-to-noise scale mapping the unit square to [-scale, scale]."""

    scale: float = 2.0

    def __post_init__(self) -> None:
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")


DEFAULT_SNR = SnrScale(2.0)


@dataclass(frozen=True)
class ParticleSet:
    """N candidate box centers in the scaled frame at one diffusion time."""

    positions: np.ndarray
    t_d: int

    def __post_init__(self) -> None:
        p = np.asarray(self.positions, dtype=float)
        if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 1:
            raise ValueError("positions must have shape (N >= 1, 2)")
        if not np.all(np.isfinite(p)):
            raise ValueError("positions must be finite")
        object.__setattr__(self, "positions", p)

    def __len__(self) -> int:
        return self.positions.shape[0]


def make_cosine_schedule(T: int, s: float = 0.008, max_beta: float = 0.999) -> DiffusionSchedule:
    """Cosine alpha_cumprod schedule with offset s; betas capped at max_beta."""
    if T < 2:
        raise ValueError(f"schedule needs at least 2 steps, got {T}")
    steps = np.arange(T + 1, dtype=float) / T
    f = np.cos((steps + s) / (1.0 + s) * math.pi / 2.0) ** 2
    abar = f / f[0]
    betas = np.clip(1.0 - abar[1:] / abar[:-1], 0.0, max_beta)
    alphas = 1.0 - betas
    return DiffusionSchedule(betas=betas, alphas=alphas, alpha_cumprod=np.cumprod(alphas))


def scale_refs(points: np.ndarray, snr: SnrScale = DEFAULT_SNR) -> np.ndarray:
    """Map unit-square coordinates to the scaled frame: (2x - 1) * scale."""
    return (2.0 * np.asarray(points, dtype=float) - 1.0) * snr.scale


def unscale_refs(points: np.ndarray, snr: SnrScale = DEFAULT_SNR) -> np.ndarray:
    """Inverse of :func:`scale_refs`, clamped to the unit square."""
    return np.clip(np.asarray(points, dtype=float) / (2.0 * snr.scale) + 0.5, 0.0, 1.0)


def q_sample(z0: np.ndarray, t: int, eps: np.ndarray, schedule: DiffusionSchedule,
             clamp_scale: float | None = None) -> np.ndarray:
    """Forward-noise z0 to time t: sqrt(abar)*z0 + sqrt(1-abar)*eps.

    When clamp_scale is given the result is clamped to [-clamp_scale,
    clamp_scale] so unscaled coordinates stay inside the unit square.
    """
    if not 0 <= t < schedule.T:
        raise ValueError(f"diffusion time {t} outside [0, {schedule.T})")
    abar = schedule.alpha_cumprod[t]
    out = math.sqrt(abar) * np.asarray(z0, dtype=float) \
        + math.sqrt(1.0 - abar) * np.asarray(eps, dtype=float)
    if clamp_scale is not None:
        out = np.clip(out, -clamp_scale, clamp_scale)
    return out


def ddim_step(z_t: np.ndarray, z0_hat: np.ndarray, t_now: int, t_next: int,
              schedule: DiffusionSchedule) -> np.ndarray:
    """Deterministic (eta = 0) DDIM update from t_now to t_next.

    Recovers the implied noise from (z_t, z0_hat) at t_now and re-noises
    z0_hat to t_next. t_next = -1 denotes the fully denoised endpoint.
    """
    if not 0 <= t_now < schedule.T:
        raise ValueError(f"t_now {t_now} outside [0, {schedule.T})")
    if not -1 <= t_next <= t_now:
        raise ValueError(f"t_next {t_next} outside [-1, t_now={t_now}]")
    z_t = np.asarray(z_t, dtype=float)
    z0_hat = np.asarray(z0_hat, dtype=float)
    abar_now = schedule.alpha_cumprod_at(t_now)
    if abar_now >= 1.0:
        if np.allclose(z_t, z0_hat):
            return z0_hat.copy()
        raise DegenerateTimeError("alpha_cumprod(t_now) = 1 but z_t != z0_hat")
    eps_hat = (z_t - math.sqrt(abar_now) * z0_hat) / math.sqrt(1.0 - abar_now)
    abar_next = schedule.alpha_cumprod_at(t_next)
    return math.sqrt(abar_next) * z0_hat + math.sqrt(1.0 - abar_next) * eps_hat


def time_pairs(T: int, steps: int) -> list[tuple[int, int]]:
    """Descending (t_now, t_next) ladder covering T-1 ... -1 in `steps` pairs."""
    if steps < 1:
        raise ValueError(f"need at least one DDIM step, got {steps}")
    if T < 1:
        raise ValueError(f"schedule length must be positive, got {T}")
    times = np.linspace(-1, T - 1, steps + 1).astype(int)[::-1]
    return list(zip(times[:-1].tolist(), times[1:].tolist()))


def renew_references(positions: np.ndarray, confidences: np.ndarray, threshold: float,
                     rng: np.random.Generator, scale: float = DEFAULT_SNR.scale) -> np.ndarray:
    """Resample low-confidence particles from a clamped standard normal.

    Particles with confidence >= threshold keep their positions; the rest
    are replaced by fresh N(0, 1) draws clamped to the scaled box.
    """
    pos = np.asarray(positions, dtype=float)
    conf = np.asarray(confidences, dtype=float)
    if pos.shape[0] != conf.shape[0]:
        raise ValueError("positions and confidences must have equal length")
    out = pos.copy()
    low = conf < threshold
    n_low = int(np.count_nonzero(low))
    if n_low:
        out[low] = np.clip(rng.standard_normal((n_low, pos.shape[1])), -scale, scale)
    return out


def pad_references(gt_centers: np.ndarray, n_total: int,
                   rng: np.random.Generator) -> np.ndarray:
    """Pad normalized GT centers with uniform draws up to n_total points.

    With more GTs than n_total, a uniformly random subset is kept (in the
    original relative order).
    """
    if n_total < 1:
        raise ValueError(f"n_total must be >= 1, got {n_total}")
    centers = np.asarray(gt_centers, dtype=float).reshape(-1, 2)
    n_gt = centers.shape[0]
    if n_gt == n_total:
        return centers.copy()
    if n_gt > n_total:
        keep = np.sort(rng.choice(n_gt, size=n_total, replace=False))
        return centers[keep]
    extra = rng.uniform(0.0, 1.0, size=(n_total - n_gt, 2))
    return np.concatenate([centers, extra], axis=0)
