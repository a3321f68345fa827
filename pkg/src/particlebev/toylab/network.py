"""Toy network for the label-ambiguity study.

Forward pass: two same-size 3x3 convolutions over a fixed random image,
bilinear lookup of the resulting features at the reference points, then two
linear layers producing a 2D location per reference. Loss is mean absolute
error against fixed targets, matched either by index or by minimum total
distance (linear sum assignment); unmatched predictions carry no loss.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..querygrid import bilinear_weights
from . import autodiff as ad
from .autodiff import Tensor

CONV_CHANNELS = 8
HIDDEN_WIDTH = 32

PARAM_SHAPES = {
    "conv1_w": None,  # depends on input channels, filled at init
    "conv1_b": (CONV_CHANNELS,),
    "conv2_w": (3, 3, CONV_CHANNELS, CONV_CHANNELS),
    "conv2_b": (CONV_CHANNELS,),
    "fc1_w": (CONV_CHANNELS, HIDDEN_WIDTH),
    "fc1_b": (HIDDEN_WIDTH,),
    "fc2_w": (HIDDEN_WIDTH, 2),
    "fc2_b": (2,),
}


def init_params(in_channels: int, rng: np.random.Generator) -> dict[str, Tensor]:
    """He-style normal init for weights, zeros for biases."""
    shapes = dict(PARAM_SHAPES)
    shapes["conv1_w"] = (3, 3, in_channels, CONV_CHANNELS)
    params: dict[str, Tensor] = {}
    for name, shape in shapes.items():
        if name.endswith("_b"):
            params[name] = Tensor(np.zeros(shape), requires_grad=True)
        else:
            fan_in = int(np.prod(shape[:-1]))
            std = np.sqrt(2.0 / fan_in)
            params[name] = Tensor(rng.normal(0.0, std, shape), requires_grad=True)
    return params


def toy_forward(image: Tensor, refs: np.ndarray,
                params: dict[str, Tensor]) -> Tensor:
    """Image (H, W, C) and refs (N, 2) in the unit square -> locations (N, 2)."""
    refs = np.asarray(refs, dtype=float)
    if refs.ndim != 2 or refs.shape[1] != 2:
        raise ValueError(f"refs must be (N, 2), got {refs.shape}")
    h, w, _ = image.shape
    x = ad.relu(ad.conv2d_same(image, params["conv1_w"], params["conv1_b"]))
    x = ad.conv2d_same(x, params["conv2_w"], params["conv2_b"])
    flat = ad.reshape(x, (h * w, CONV_CHANNELS))
    corners, weights = bilinear_weights(h, w, refs)
    flat_idx = corners[:, :, 0] * w + corners[:, :, 1]
    feats = ad.weighted_row_sum(flat, flat_idx, weights)
    hid = ad.relu(ad.add_bias(ad.matmul(feats, params["fc1_w"]), params["fc1_b"]))
    return ad.add_bias(ad.matmul(hid, params["fc2_w"]), params["fc2_b"])


def toy_loss(preds: Tensor, targets: np.ndarray,
             mode: str = "by_distance") -> tuple[Tensor, list[tuple[int, int]]]:
    """Mean L1 over matched (prediction, target) pairs.

    by_index pairs row i with target i and requires equal counts; by_distance
    solves the assignment minimizing total Euclidean distance, leaving
    |N - M| rows unmatched.
    """
    targets = np.asarray(targets, dtype=float)
    n, m = preds.shape[0], targets.shape[0]
    if mode == "by_index":
        if n != m:
            raise ValueError(f"by_index needs equal counts, got {n} preds, {m} targets")
        pairs = [(i, i) for i in range(n)]
        return ad.l1_loss(preds, targets), pairs
    if mode != "by_distance":
        raise ValueError(f"unknown matching mode {mode!r}")
    diff = preds.data[:, None, :] - targets[None, :, :]
    cost = np.sqrt(np.sum(diff * diff, axis=2))
    rows, cols = linear_sum_assignment(cost)
    pairs = sorted(zip(rows.tolist(), cols.tolist()))
    pred_idx = np.array([i for i, _ in pairs])
    tgt = targets[[j for _, j in pairs]]
    matched = ad.gather_rows(preds, pred_idx)
    return ad.l1_loss(matched, tgt), pairs


class Adam:
    """Adam with per-parameter first/second moment estimates."""

    def __init__(self, params: dict[str, Tensor], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = {k: np.zeros_like(p.data) for k, p in params.items()}
        self._v = {k: np.zeros_like(p.data) for k, p in params.items()}

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()

    def step(self) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for k, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            self._m[k] = b1 * self._m[k] + (1 - b1) * g
            self._v[k] = b2 * self._v[k] + (1 - b2) * g * g
            m_hat = self._m[k] / (1 - b1 ** self.t)
            v_hat = self._v[k] / (1 - b2 ** self.t)
            p.data = p.data - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
