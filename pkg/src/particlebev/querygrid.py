"""Regular lattice of query vectors with bilinear lookup.

Lattice nodes sit at cell corners spanning [0, 1]^2 inclusive, so node
(i, j) of an Hq x Wq grid lies at (x, y) = (j / (Wq - 1), i / (Hq - 1)).
Points outside the unit square clamp to the border. Lookups are pure:
the same point always returns bit-identical output, and the number of
lookup points is independent of the lattice size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QueryGrid:
    """Hq x Wq lattice of C-dimensional query vectors."""

    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3:
            raise ValueError("grid values must have shape (Hq, Wq, C)")
        if v.shape[0] < 2 or v.shape[1] < 2:
            raise ValueError("grid needs at least 2 nodes per axis")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape  # type: ignore[return-value]

    @classmethod
    def random_init(cls, hq: int = 30, wq: int = 30, channels: int = 8,
                    rng: np.random.Generator | None = None, std: float = 0.02) -> "QueryGrid":
        """Standard embedding init: i.i.d. normal(0, std)."""
        rng = rng if rng is not None else np.random.default_rng(0)
        return cls(values=rng.normal(0.0, std, size=(hq, wq, channels)))


def bilinear_weights(grid_h: int, grid_w: int,
                     points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Corner indices and weights of the bilinear stencil for each point.

    Returns (indices, weights) with shapes (N, 4, 2) and (N, 4); weights are
    nonnegative and sum to 1. Points are clamped to [0, 1]^2 first.
    """
    p = np.asarray(points, dtype=float).reshape(-1, 2)
    if not np.all(np.isfinite(p)):
        raise ValueError("points must be finite")
    p = np.clip(p, 0.0, 1.0)
    u = p[:, 0] * (grid_w - 1)
    v = p[:, 1] * (grid_h - 1)
    j0 = np.minimum(np.floor(u).astype(int), grid_w - 2)
    i0 = np.minimum(np.floor(v).astype(int), grid_h - 2)
    fu = u - j0
    fv = v - i0
    weights = np.stack([
        (1.0 - fu) * (1.0 - fv),
        fu * (1.0 - fv),
        (1.0 - fu) * fv,
        fu * fv,
    ], axis=1)
    indices = np.stack([
        np.stack([i0, j0], axis=1),
        np.stack([i0, j0 + 1], axis=1),
        np.stack([i0 + 1, j0], axis=1),
        np.stack([i0 + 1, j0 + 1], axis=1),
    ], axis=1)
    return indices, weights


def interpolate(grid: QueryGrid, points: np.ndarray) -> np.ndarray:
    """Bilinear blend of the 4 lattice nodes surrounding each point, (N, C)."""
    hq, wq, _ = grid.values.shape
    indices, weights = bilinear_weights(hq, wq, points)
    corners = grid.values[indices[:, :, 0], indices[:, :, 1]]  # (N, 4, C)
    return np.einsum("nk,nkc->nc", weights, corners)


def interpolation_jacobian(grid: QueryGrid,
                           point: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stencil of a single point: 4 node indices (4, 2) and 4 weights (4,).

    The weighted sum of the indexed node vectors reconstructs
    :func:`interpolate` for the same point exactly.
    """
    hq, wq, _ = grid.values.shape
    indices, weights = bilinear_weights(hq, wq, np.asarray(point, dtype=float).reshape(1, 2))
    return indices[0], weights[0]
