"""Alternating training of the coupled label and node convolution stacks.

Every epoch runs the label view (single-label classification of the label
nodes against themselves), the node view (masked multi-label classification
of the training nodes), injects each view's logits into the other view's
attribute feature block on its schedule, and takes one optimizer step on the
summed objective. Injected blocks are constants for backprop; the fixed
random projections that produce them are frozen unless explicitly enabled.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .graph import DataSplit, MultiLabelGraph
from .kernels import (LayerCache, backward, gcn_layer_forward,
                      multi_label_loss, multi_label_loss_grad, relu,
                      single_label_loss, single_label_loss_grad, softmax_rows)
from .metrics import evaluate
from .operators import GraphOperators, build_operators
from .rng import rng_stream

__all__ = [
    "VARIANTS", "TrainConfig", "ModelState", "TrainHistory", "TrainResult",
    "DivergenceError", "init_model", "forward_label_gcn", "forward_node_gcn",
    "inject_label_features", "inject_node_features", "sgd_step", "train",
    "save_checkpoint", "load_checkpoint",
]

VARIANTS = ("full", "node", "1n", "2l", "gcn_baseline")

CHECKPOINT_VERSION = 1


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss or gradient."""

    def __init__(self, epoch: int, message: str = "diverged"):
        super().__init__(f"{message} at epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.02
    epochs: int = 300
    hidden_dim: int = 400
    train_ratio: float = 0.2
    update_freq_nodes: int = 50   # N: node logits -> label-view attributes
    update_freq_labels: int = 50  # M: label logits -> node-view attributes
    dropout: float = 0.5
    weight_decay: float = 0.0
    node_gcn_layers: int = 2
    label_gcn_layers: int = 1
    variant: str = "full"
    seed: int = 0
    optimizer: str = "gd"
    skip_epoch0_injection: bool = False
    train_projections: bool = False
    binarize_cooccurrence: bool = False

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be nonnegative")
        if self.epochs < 1:
            raise ValueError("epochs must be positive")
        if self.hidden_dim < 1:
            raise ValueError("hidden_dim must be positive")
        if not 0.0 < self.train_ratio < 1.0:
            raise ValueError("train_ratio must lie in (0, 1)")
        if self.update_freq_nodes < 1 or self.update_freq_labels < 1:
            raise ValueError("update frequencies must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")
        if self.node_gcn_layers not in (1, 2) or self.label_gcn_layers not in (1, 2):
            raise ValueError("layer counts must be 1 or 2")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.optimizer not in ("gd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    @property
    def effective_node_layers(self) -> int:
        return 1 if self.variant == "1n" else self.node_gcn_layers

    @property
    def effective_label_layers(self) -> int:
        return 2 if self.variant == "2l" else self.label_gcn_layers


@dataclass
class ModelState:
    """Trainable weights, frozen projections, current injected feature
    blocks, and the dropout stream."""

    weights: dict[str, np.ndarray]
    projections: dict[str, np.ndarray]
    node_block: np.ndarray   # attribute features of the label view (starts as raw X)
    label_block: np.ndarray  # attribute features of the node view (starts as raw Y)
    dropout_rng: np.random.Generator
    node_logits_snapshot: np.ndarray | None = None
    label_logits_snapshot: np.ndarray | None = None

    def trainable_keys(self, include_projections: bool = False) -> list[str]:
        keys = list(self.weights)
        if include_projections:
            keys += list(self.projections)
        return keys

    def get_param(self, key: str) -> np.ndarray:
        return self.weights[key] if key in self.weights else self.projections[key]

    def set_param(self, key: str, value: np.ndarray):
        if key in self.weights:
            self.weights[key] = value
        else:
            self.projections[key] = value


@dataclass
class TrainHistory:
    label_loss: list[float] = field(default_factory=list)
    node_loss: list[float] = field(default_factory=list)
    total_loss: list[float] = field(default_factory=list)
    val_micro_f1: list[float] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.total_loss)


@dataclass
class TrainResult:
    model: ModelState
    history: TrainHistory
    embeddings: np.ndarray  # final eval-mode node logits, n x m


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_model(graph: MultiLabelGraph, config: TrainConfig) -> ModelState:
    """Glorot-uniform weights and projections from the seed's init stream;
    injected blocks start as the raw feature matrices."""
    d, m = graph.feature_dim, graph.label_count
    dh = config.hidden_dim
    rng = rng_stream(config.seed, "init")

    weights: dict[str, np.ndarray] = {}
    projections: dict[str, np.ndarray] = {}
    if config.variant != "gcn_baseline":
        if config.effective_label_layers == 1:
            weights["w0_label"] = _glorot(rng, d, m)
        else:
            weights["w0_label"] = _glorot(rng, d, dh)
            weights["w1_label"] = _glorot(rng, dh, m)
    if config.effective_node_layers == 1:
        weights["w0_node"] = _glorot(rng, d, m)
    else:
        weights["w0_node"] = _glorot(rng, d, dh)
        weights["w1_node"] = _glorot(rng, dh, m)
    if config.variant != "gcn_baseline":
        projections["proj_node"] = _glorot(rng, m, d)   # maps node logits to features
        projections["proj_label"] = _glorot(rng, m, d)  # maps label logits to features

    return ModelState(
        weights=weights, projections=projections,
        node_block=np.array(graph.node_features, dtype=np.float64, copy=True),
        label_block=np.array(graph.label_features, dtype=np.float64, copy=True),
        dropout_rng=rng_stream(config.seed, "dropout"))


def label_feature_stack(graph: MultiLabelGraph, model: ModelState) -> np.ndarray:
    """Label-view input: raw label features over the injected node block."""
    return np.vstack([graph.label_features, model.node_block])


def node_feature_stack(graph: MultiLabelGraph, model: ModelState) -> np.ndarray:
    """Node-view input: raw node features over the injected label block."""
    return np.vstack([graph.node_features, model.label_block])


def forward_label_gcn(graph: MultiLabelGraph, operators: GraphOperators,
                      model: ModelState, config: TrainConfig,
                      training: bool = False
                      ) -> tuple[np.ndarray, list[LayerCache]]:
    """Label-view logits (m x m). One layer by default; the two-layer form
    stacks the intra-label operator on top."""
    h = label_feature_stack(graph, model)
    rng = model.dropout_rng
    if config.effective_label_layers == 1:
        out, cache = gcn_layer_forward(
            operators.label.truncated, h, model.weights["w0_label"],
            activation="identity", dropout=config.dropout, training=training,
            rng=rng, weight_key="w0_label")
        return out, [cache]
    hidden, c0 = gcn_layer_forward(
        operators.label.truncated, h, model.weights["w0_label"],
        activation="relu", dropout=config.dropout, training=training,
        rng=rng, weight_key="w0_label")
    out, c1 = gcn_layer_forward(
        operators.label.intra, hidden, model.weights["w1_label"],
        activation="identity", dropout=config.dropout, training=training,
        rng=rng, weight_key="w1_label")
    return out, [c0, c1]


def forward_node_gcn(graph: MultiLabelGraph, operators: GraphOperators,
                     model: ModelState, config: TrainConfig,
                     training: bool = False
                     ) -> tuple[np.ndarray, list[LayerCache]]:
    """Node-view logits (n x m).

    Default: two layers, composite operator then intra-node operator. The
    one-layer form keeps just the composite aggregation. The plain-GCN
    baseline ignores the composite view entirely: both layers use the
    intra-node operator on the raw node features.
    """
    rng = model.dropout_rng
    if config.variant == "gcn_baseline":
        h = np.asarray(graph.node_features, dtype=np.float64)
        hidden, c0 = gcn_layer_forward(
            operators.node.intra, h, model.weights["w0_node"],
            activation="relu", dropout=config.dropout, training=training,
            rng=rng, weight_key="w0_node")
        out, c1 = gcn_layer_forward(
            operators.node.intra, hidden, model.weights["w1_node"],
            activation="identity", dropout=config.dropout, training=training,
            rng=rng, weight_key="w1_node")
        return out, [c0, c1]

    h = node_feature_stack(graph, model)
    if config.effective_node_layers == 1:
        out, cache = gcn_layer_forward(
            operators.node.truncated, h, model.weights["w0_node"],
            activation="identity", dropout=config.dropout, training=training,
            rng=rng, weight_key="w0_node")
        return out, [cache]
    hidden, c0 = gcn_layer_forward(
        operators.node.truncated, h, model.weights["w0_node"],
        activation="relu", dropout=config.dropout, training=training,
        rng=rng, weight_key="w0_node")
    out, c1 = gcn_layer_forward(
        operators.node.intra, hidden, model.weights["w1_node"],
        activation="identity", dropout=config.dropout, training=training,
        rng=rng, weight_key="w1_node")
    return out, [c0, c1]


def inject_node_features(model: ModelState, node_logits: np.ndarray) -> np.ndarray:
    """Replace the label view's attribute block with projected node logits."""
    model.node_block = relu(node_logits @ model.projections["proj_node"])
    model.node_logits_snapshot = node_logits
    return model.node_block


def inject_label_features(model: ModelState, label_logits: np.ndarray) -> np.ndarray:
    """Replace the node view's attribute block with projected label logits."""
    model.label_block = relu(label_logits @ model.projections["proj_label"])
    model.label_logits_snapshot = label_logits
    return model.label_block


class _Optimizer:
    """Plain gradient descent or Adam; weight decay enters as an L2 term."""

    def __init__(self, config: TrainConfig):
        self.config = config
        self.step_count = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, model: ModelState, grads: dict[str, np.ndarray]):
        cfg = self.config
        self.step_count += 1
        for key, g in grads.items():
            if np.any(np.isnan(g)):
                raise ValueError(f"diverged: NaN gradient for {key}")
            w = model.get_param(key)
            g = g + cfg.weight_decay * w
            if cfg.optimizer == "gd":
                model.set_param(key, w - cfg.learning_rate * g)
            else:
                b1, b2, eps = 0.9, 0.999, 1e-8
                m = self.m.setdefault(key, np.zeros_like(w))
                v = self.v.setdefault(key, np.zeros_like(w))
                m[:] = b1 * m + (1 - b1) * g
                v[:] = b2 * v + (1 - b2) * g * g
                mhat = m / (1 - b1 ** self.step_count)
                vhat = v / (1 - b2 ** self.step_count)
                model.set_param(key, w - cfg.learning_rate * mhat / (np.sqrt(vhat) + eps))


def sgd_step(model: ModelState, grads: dict[str, np.ndarray],
             config: TrainConfig, optimizer: _Optimizer | None = None) -> ModelState:
    """One optimizer step; raises on NaN gradients."""
    (optimizer or _Optimizer(config)).step(model, grads)
    return model


def _projection_grads(model: ModelState, grads: dict[str, np.ndarray],
                      d_label_feats: np.ndarray | None,
                      d_node_feats: np.ndarray | None, m: int, n: int):
    """Gradients for the injection projections, differentiating the current
    blocks with the recorded logits snapshots held constant."""
    if d_label_feats is not None and model.node_logits_snapshot is not None:
        d_block = d_label_feats[m:] * (model.node_block > 0.0)
        grads["proj_node"] = model.node_logits_snapshot.T @ d_block
    if d_node_feats is not None and model.label_logits_snapshot is not None:
        d_block = d_node_feats[n:] * (model.label_block > 0.0)
        grads["proj_label"] = model.label_logits_snapshot.T @ d_block


def train(graph: MultiLabelGraph, split: DataSplit, config: TrainConfig,
          rule: str = "top_k_true", threshold: float = 0.5) -> TrainResult:
    """Run the full alternating schedule for `config.epochs` epochs.

    Per epoch: label forward (skipped for the plain-GCN baseline, where the
    label loss is identically zero), node forward with the masked
    multi-label loss, scheduled cross-injections, one optimizer step on the
    summed loss, and an eval-mode validation Micro-F1. Deterministic for a
    fixed (seed, config).
    """
    if split.train_nodes.size == 0:
        raise ValueError("no labeled nodes")
    variant = config.variant
    operators = build_operators(graph, variant, config.binarize_cooccurrence)
    model = init_model(graph, config)
    optimizer = _Optimizer(config)
    history = TrainHistory()

    n, m = graph.node_count, graph.label_count
    node_targets = graph.label_assignments.to_dense()
    label_targets = np.eye(m)
    train_mask = split.train_nodes

    label_op_t = node_op_t = None
    if config.train_projections and variant != "gcn_baseline":
        label_op_t = operators.label.truncated.transpose()
        node_op_t = operators.node.truncated.transpose()

    for epoch in range(config.epochs):
        t0 = time.perf_counter()

        if variant == "gcn_baseline":
            label_loss = 0.0
            label_caches = None
            d_label = None
            label_logits = None
        else:
            label_logits, label_caches = forward_label_gcn(
                graph, operators, model, config, training=True)
            z = softmax_rows(label_logits)
            label_loss = single_label_loss(z, label_targets)
            d_label = single_label_loss_grad(z, label_targets)

        node_logits, node_caches = forward_node_gcn(
            graph, operators, model, config, training=True)
        node_loss = multi_label_loss(node_logits, node_targets, train_mask)
        total = label_loss + node_loss
        if not np.isfinite(total):
            raise DivergenceError(epoch)

        if variant != "gcn_baseline":
            skip = config.skip_epoch0_injection and epoch == 0
            if epoch % config.update_freq_nodes == 0 and not skip:
                inject_node_features(model, node_logits)
            if epoch % config.update_freq_labels == 0 and not skip:
                inject_label_features(model, label_logits)

        d_node = multi_label_loss_grad(node_logits, node_targets, train_mask)
        want_feature_grads = config.train_projections and variant != "gcn_baseline"
        try:
            grads, d_label_feats, d_node_feats = backward(
                label_caches, d_label, node_caches, d_node,
                feature_grads=want_feature_grads,
                label_op_transpose=label_op_t, node_op_transpose=node_op_t)
            if want_feature_grads:
                _projection_grads(model, grads, d_label_feats, d_node_feats, m, n)
            sgd_step(model, grads, config, optimizer)
        except (FloatingPointError, ValueError) as exc:
            raise DivergenceError(epoch, str(exc)) from exc

        if split.val_nodes.size:
            val_logits, _ = forward_node_gcn(graph, operators, model, config,
                                             training=False)
            val_f1 = evaluate(val_logits, node_targets, split.val_nodes,
                              rule=rule, threshold=threshold).micro_f1
        else:
            val_f1 = float("nan")

        history.label_loss.append(label_loss)
        history.node_loss.append(node_loss)
        history.total_loss.append(total)
        history.val_micro_f1.append(val_f1)
        history.epoch_seconds.append(time.perf_counter() - t0)

    embeddings, _ = forward_node_gcn(graph, operators, model, config,
                                     training=False)
    return TrainResult(model=model, history=history, embeddings=embeddings)


# -- checkpointing ----------------------------------------------------------

def save_checkpoint(path, model: ModelState, config: TrainConfig,
                    epoch: int, fingerprint: str,
                    optimizer: _Optimizer | None = None):
    """Versioned npz dump of weights, projections, injected blocks, rng
    state, config and the dataset fingerprint."""
    meta = {
        "version": CHECKPOINT_VERSION,
        "config": asdict(config),
        "epoch": epoch,
        "fingerprint": fingerprint,
        "weight_keys": list(model.weights),
        "projection_keys": list(model.projections),
        "dropout_rng_state": model.dropout_rng.bit_generator.state,
        "optimizer_steps": optimizer.step_count if optimizer else 0,
    }
    arrays: dict[str, np.ndarray] = {}
    for key, w in model.weights.items():
        arrays[f"weight__{key}"] = w
    for key, w in model.projections.items():
        arrays[f"projection__{key}"] = w
    arrays["node_block"] = model.node_block
    arrays["label_block"] = model.label_block
    if optimizer is not None and config.optimizer == "adam":
        for key, a in optimizer.m.items():
            arrays[f"adam_m__{key}"] = a
        for key, a in optimizer.v.items():
            arrays[f"adam_v__{key}"] = a
    with open(path, "wb") as fh:
        np.savez(fh, __meta__=np.frombuffer(
            json.dumps(meta).encode("utf-8"), dtype=np.uint8), **arrays)


def load_checkpoint(path):
    """Load a checkpoint; returns (model, config, epoch, fingerprint)."""
    with np.load(path) as data:
        meta = json.loads(bytes(data["__meta__"]).decode("utf-8"))
        if meta["version"] != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta['version']}")
        config = TrainConfig(**meta["config"])
        weights = {k: data[f"weight__{k}"] for k in meta["weight_keys"]}
        projections = {k: data[f"projection__{k}"] for k in meta["projection_keys"]}
        model = ModelState(
            weights=weights, projections=projections,
            node_block=data["node_block"], label_block=data["label_block"],
            dropout_rng=rng_stream(config.seed, "dropout"))
        model.dropout_rng.bit_generator.state = meta["dropout_rng_state"]
    return model, config, meta["epoch"], meta["fingerprint"]
