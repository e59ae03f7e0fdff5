"""Numerical kernels: sparse-dense products, convolution layers, losses,
and hand-derived reverse-mode gradients.

A convolution layer computes ``act(op @ dropout(H) @ W)`` where `op` is a
fixed sparse propagation operator. Forward passes record everything the
backward pass needs (aggregated inputs, pre-activations, dropout masks);
`backward` then walks the two layer stacks in reverse. Gradients never flow
into the operators or the input feature blocks — those are constants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrices import SparseMatrix

__all__ = [
    "LayerCache", "spmm", "relu", "sigmoid", "gcn_layer_forward",
    "softmax_rows", "single_label_loss", "multi_label_loss",
    "single_label_loss_grad", "multi_label_loss_grad",
    "backward", "backward_stack",
]

LOG_CLAMP = 1e-12  # fixed probability floor before logs; not configurable


def spmm(s: SparseMatrix, d: np.ndarray) -> np.ndarray:
    """Exact product of a CSR matrix with a dense matrix."""
    d = np.asarray(d, dtype=np.float64)
    if d.ndim != 2 or s.cols != d.shape[0]:
        raise ValueError(f"cannot multiply {s.shape} by {d.shape}")
    if s.nnz == 0:
        return np.zeros((s.rows, d.shape[1]))
    return np.asarray(s.csr_view() @ d)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class LayerCache:
    """Per-layer forward record used by the backward pass."""

    op: SparseMatrix
    weight: np.ndarray
    aggregated: np.ndarray        # op @ dropout(H), feeds dW
    pre_activation: np.ndarray
    post_activation: np.ndarray
    mask: np.ndarray | None       # inverted-dropout mask (0 or 1/(1-p)), None in eval
    activation: str
    weight_key: str


def gcn_layer_forward(op: SparseMatrix, h: np.ndarray, w: np.ndarray,
                      activation: str = "relu", dropout: float = 0.0,
                      training: bool = False,
                      rng: np.random.Generator | None = None,
                      weight_key: str = "") -> tuple[np.ndarray, LayerCache]:
    """One convolution layer: act(op @ drop(H) @ W).

    In training mode dropout zeroes input entries with probability p and
    scales survivors by 1/(1-p); in eval mode it is the identity.
    """
    if not 0.0 <= dropout < 1.0:
        raise ValueError("dropout must lie in [0, 1)")
    if h.shape[0] != op.cols or h.shape[1] != w.shape[0]:
        raise ValueError(
            f"shape mismatch: op {op.shape} @ H {h.shape} @ W {w.shape}")
    if activation not in ("relu", "identity"):
        raise ValueError(f"unknown activation {activation!r}")

    mask = None
    hd = h
    if training and dropout > 0.0:
        if rng is None:
            raise ValueError("training dropout needs an rng")
        mask = (rng.random(h.shape) >= dropout) / (1.0 - dropout)
        hd = h * mask
    aggregated = spmm(op, hd)
    z = aggregated @ w
    out = relu(z) if activation == "relu" else z
    cache = LayerCache(op=op, weight=w, aggregated=aggregated,
                       pre_activation=z, post_activation=out, mask=mask,
                       activation=activation, weight_key=weight_key)
    return out, cache


def softmax_rows(o: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction for overflow safety."""
    shifted = o - o.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def single_label_loss(z: np.ndarray, targets: np.ndarray) -> float:
    """Summed cross-entropy of row-stochastic predictions against one-hot
    targets; probabilities are clamped at 1e-12 before the log."""
    return float(-(targets * np.log(np.maximum(z, LOG_CLAMP))).sum())


def single_label_loss_grad(z: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Gradient of the summed softmax cross-entropy w.r.t. the logits."""
    return z - targets


def multi_label_loss(o: np.ndarray, targets: np.ndarray, mask: np.ndarray) -> float:
    """Summed binary cross-entropy on logits over the masked node rows.

    Each term is (1-y)*o + log(1+exp(-o)), evaluated through the
    overflow-safe split log(1+exp(-o)) = max(-o,0) + log1p(exp(-|o|)).
    """
    mask = np.asarray(mask, dtype=np.int64)
    if mask.size == 0:
        raise ValueError("no labeled nodes")
    om = o[mask]
    tm = targets[mask]
    softplus_neg = np.maximum(-om, 0.0) + np.log1p(np.exp(-np.abs(om)))
    return float(((1.0 - tm) * om + softplus_neg).sum())


def multi_label_loss_grad(o: np.ndarray, targets: np.ndarray,
                          mask: np.ndarray) -> np.ndarray:
    """Gradient w.r.t. the logits: sigmoid(o) - y on masked rows, 0 elsewhere."""
    mask = np.asarray(mask, dtype=np.int64)
    if mask.size == 0:
        raise ValueError("no labeled nodes")
    g = np.zeros_like(o)
    g[mask] = sigmoid(o[mask]) - targets[mask]
    return g


def backward_stack(caches: list[LayerCache], d_out: np.ndarray,
                   grads: dict[str, np.ndarray],
                   input_grad: bool = False,
                   first_op_transpose: SparseMatrix | None = None):
    """Reverse through one layer stack, accumulating weight gradients.

    Square operators are assumed symmetric (they are built that way); the
    first layer's operator is non-square, so its transpose must be supplied
    when the gradient w.r.t. the input features is requested.
    """
    g = d_out
    for idx in range(len(caches) - 1, -1, -1):
        cache = caches[idx]
        if cache.activation == "relu":
            dz = g * (cache.pre_activation > 0.0)
        else:
            dz = g
        dw = cache.aggregated.T @ dz
        if cache.weight_key in grads:
            grads[cache.weight_key] += dw
        else:
            grads[cache.weight_key] = dw
        if idx > 0 or input_grad:
            d_agg = dz @ cache.weight.T
            if idx == 0:
                op_t = first_op_transpose
                if op_t is None:
                    if cache.op.rows != cache.op.cols:
                        raise ValueError("first-layer input grad needs the operator transpose")
                    op_t = cache.op
            else:
                op_t = cache.op
            d_hd = spmm(op_t, d_agg)
            g = d_hd * cache.mask if cache.mask is not None else d_hd
    return g if input_grad else None


def backward(label_caches: list[LayerCache] | None,
             d_label_logits: np.ndarray | None,
             node_caches: list[LayerCache],
             d_node_logits: np.ndarray,
             feature_grads: bool = False,
             label_op_transpose: SparseMatrix | None = None,
             node_op_transpose: SparseMatrix | None = None):
    """Exact gradients of the collective loss w.r.t. every trainable weight.

    Returns (grads, d_label_features, d_node_features); the feature
    gradients are None unless requested (they are only needed when the
    injection projections are being trained).
    """
    if node_caches is None or (label_caches is not None and not label_caches):
        raise ValueError("missing forward cache")
    grads: dict[str, np.ndarray] = {}
    d_label_feats = None
    if label_caches is not None:
        d_label_feats = backward_stack(label_caches, d_label_logits, grads,
                                       input_grad=feature_grads,
                                       first_op_transpose=label_op_transpose)
    d_node_feats = backward_stack(node_caches, d_node_logits, grads,
                                  input_grad=feature_grads,
                                  first_op_transpose=node_op_transpose)
    for key, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for {key}")
    return grads, d_label_feats, d_node_feats
