"""Minimal reverse-mode autodiff on numpy arrays.

Just enough machinery for the label-ambiguity toy experiment: a Tensor
wraps a float64 ndarray, records its parents and a backward closure on a
tape, and `backward()` walks the graph in reverse topological order. Only
the ops the toy network needs are provided. Gradients accumulate in
`.grad`; call `zero_grad` on parameters between steps.
"""

from __future__ import annotations

import numpy as np


class Tensor:
    """Node in the computation graph; holds value, grad, and backward hook."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = np.zeros_like(self.data) if requires_grad else None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad = np.zeros_like(self.data)

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad = self.grad + g

    def backward(self) -> None:
        """Reverse-mode sweep from a scalar output."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar output")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen:
                    stack.append((p, False))
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def _make(data: np.ndarray, parents: tuple[Tensor, ...], backward) -> Tensor:
    out = Tensor(data)
    if any(p.requires_grad or p._parents for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ValueError("add requires equal shapes; broadcast explicitly")

    def backward(g):
        a._accumulate(g)
        b._accumulate(g)

    return _make(a.data + b.data, (a, b), backward)


def add_bias(x: Tensor, b: Tensor) -> Tensor:
    """x: (..., C) plus bias (C,), summing the gradient over leading axes."""
    if b.data.ndim != 1 or x.data.shape[-1] != b.data.shape[0]:
        raise ValueError("bias must be 1-D and match the trailing axis")

    def backward(g):
        x._accumulate(g)
        b._accumulate(g.reshape(-1, b.data.shape[0]).sum(axis=0))

    return _make(x.data + b.data, (x, b), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    def backward(g):
        a._accumulate(g @ b.data.T)
        b._accumulate(a.data.T @ g)

    return _make(a.data @ b.data, (a, b), backward)


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0

    def backward(g):
        x._accumulate(g * mask)

    return _make(np.where(mask, x.data, 0.0), (x,), backward)


def reshape(x: Tensor, shape: tuple[int, ...]) -> Tensor:
    old = x.data.shape

    def backward(g):
        x._accumulate(g.reshape(old))

    return _make(x.data.reshape(shape), (x,), backward)


def gather_rows(x: Tensor, indices: np.ndarray) -> Tensor:
    """Select rows of a 2-D tensor; gradients scatter-add back."""
    idx = np.asarray(indices, dtype=int)

    def backward(g):
        acc = np.zeros_like(x.data)
        np.add.at(acc, idx, g)
        x._accumulate(acc)

    return _make(x.data[idx], (x,), backward)


def weighted_row_sum(x: Tensor, indices: np.ndarray, weights: np.ndarray) -> Tensor:
    """Sum of selected rows with fixed scalar weights.

    indices (Q, K) into the rows of x (N, C), weights (Q, K); output (Q, C).
    This is bilinear interpolation's gather when indices/weights come from
    the query-grid corner computation.
    """
    idx = np.asarray(indices, dtype=int)
    wgt = np.asarray(weights, dtype=np.float64)
    if idx.shape != wgt.shape:
        raise ValueError("indices and weights must share a shape")

    def backward(g):
        acc = np.zeros_like(x.data)
        # g: (Q, C); each corner k contributes w[q, k] * g[q]
        for k in range(idx.shape[1]):
            np.add.at(acc, idx[:, k], wgt[:, k, None] * g)
        x._accumulate(acc)

    out = np.einsum("qkc,qk->qc", x.data[idx], wgt)
    return _make(out, (x,), backward)


def conv2d_same(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """3x3 same-padding convolution via im2col.

    x: (H, W, Cin), w: (3, 3, Cin, Cout), b: (Cout,) -> (H, W, Cout).
    """
    kh, kw, cin, cout = w.data.shape
    h, wid, cx = x.data.shape
    if cx != cin:
        raise ValueError(f"input channels {cx} != kernel channels {cin}")
    ph, pw = kh // 2, kw // 2
    padded = np.pad(x.data, ((ph, ph), (pw, pw), (0, 0)))
    # (H, W, kh, kw, Cin) patch view, then flatten for a single matmul
    view = np.lib.stride_tricks.sliding_window_view(padded, (kh, kw), axis=(0, 1))
    cols = view.transpose(0, 1, 3, 4, 2).reshape(h * wid, kh * kw * cin)
    wmat = w.data.reshape(kh * kw * cin, cout)
    out = (cols @ wmat + b.data).reshape(h, wid, cout)

    def backward(g):
        gmat = g.reshape(h * wid, cout)
        w._accumulate((cols.T @ gmat).reshape(w.data.shape))
        b._accumulate(gmat.sum(axis=0))
        gcols = (gmat @ wmat.T).reshape(h, wid, kh, kw, cin)
        gpad = np.zeros_like(padded)
        for i in range(kh):
            for j in range(kw):
                gpad[i:i + h, j:j + wid] += gcols[:, :, i, j, :]
        x._accumulate(gpad[ph:ph + h, pw:pw + wid])

    return _make(out, (x, w, b), backward)


def l1_loss(pred: Tensor, target: np.ndarray) -> Tensor:
    """Mean absolute error against a constant target."""
    t = np.asarray(target, dtype=np.float64)
    if t.shape != pred.data.shape:
        raise ValueError("target shape must match prediction")
    diff = pred.data - t
    n = diff.size

    def backward(g):
        pred._accumulate(g * np.sign(diff) / n)

    return _make(np.mean(np.abs(diff)), (pred,), backward)


def mean_all(x: Tensor) -> Tensor:
    n = x.data.size

    def backward(g):
        x._accumulate(np.full_like(x.data, float(g) / n))

    return _make(np.mean(x.data), (x,), backward)
