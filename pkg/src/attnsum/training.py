"""Loss, exact gradients, Adam, and the document-level training loop.

Gradients are hand-derived reverse-mode passes through the full model
(two shared-weight multi-head GCN layers, gated readout, sigmoid head,
per-sentence binary cross-entropy) and are checked against central finite
differences; ``grad_check`` packages that comparison. Everything here
computes in float64; model files store float32.

The loss clamps probabilities into [eps_p, 1 - eps_p] before the logs and
the backward pass differentiates exactly that composition: entries pushed
into the clamp have zero gradient, which is also what finite differences
measure there.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np
from scipy.special import expit

from . import bundle_io
from .errors import ConfigError, ContractError, DataError
from .gcn_core import GcnParams, ModelDims, init_params, save_params
from .graph_extract import (
    UNIFORM,
    SentenceGraph,
    ThresholdPolicy,
    build_graphs,
    graphs_from_binary,
)


@dataclass
class TrainConfig:
    """Dimensions, graph threshold policy, and optimizer hyperparameters."""

    dims: ModelDims = ModelDims()
    threshold: ThresholdPolicy = UNIFORM
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    epochs: int = 100
    seed: int = 0
    val_fraction: float = 0.1
    patience: Optional[int] = 3  # epochs without val improvement; None disables
    clamp_eps: float = 1e-7  # probability clamp inside the loss

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if not 0.0 < self.val_fraction < 1.0:
            raise ConfigError("val_fraction must lie in (0, 1)")
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if self.patience is not None and self.patience < 1:
            raise ConfigError("patience must be at least 1 (or None)")

    def to_dict(self) -> dict:
        return {
            "d": self.dims.d,
            "heads": self.dims.heads,
            "d1": self.dims.d1,
            "d2": self.dims.d2,
            "dr": self.dims.dr,
            "threshold": self.threshold,
            "learning_rate": self.learning_rate,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "adam_eps": self.adam_eps,
            "epochs": self.epochs,
            "seed": self.seed,
            "val_fraction": self.val_fraction,
            "patience": self.patience,
            "clamp_eps": self.clamp_eps,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "TrainConfig":
        raw = dict(raw)
        dim_keys = {k: int(raw.pop(k)) for k in ("d", "heads", "d1", "d2", "dr") if k in raw}
        base = cls(dims=ModelDims(**dim_keys)) if dim_keys else cls()
        known = {
            "threshold",
            "learning_rate",
            "beta1",
            "beta2",
            "adam_eps",
            "epochs",
            "seed",
            "val_fraction",
            "patience",
            "clamp_eps",
        }
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return replace(base, **raw)

    @classmethod
    def from_json(cls, path: str | os.PathLike) -> "TrainConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class AdamState:
    """First/second moment estimates mirroring GcnParams, plus the step
    counter used for bias correction."""

    m: GcnParams
    v: GcnParams
    t: int = 0

    @classmethod
    def zeros(cls, dims: ModelDims) -> "AdamState":
        return cls(m=GcnParams.zeros(dims), v=GcnParams.zeros(dims))


def count_params(dims: ModelDims) -> int:
    """Trainable-scalar count for a dimension choice.

    Shared GCN weights keep the two graph layers head-count independent;
    only the readout input widths grow with the number of heads. The
    default dims give 393,729.
    """
    total = dims.d * dims.d1 + dims.d1
    total += (dims.heads * dims.d1) * dims.d2 + dims.d2
    total += (dims.heads * dims.d2 + dims.d) * dims.dr + dims.dr
    total += (dims.heads * dims.d2) * dims.dr + dims.dr
    total += dims.dr + 1
    return total


def bce_loss(y_hat: np.ndarray, y: np.ndarray, clamp_eps: float = 1e-7) -> float:
    """Mean binary cross-entropy with probability clamping."""
    y_hat = np.asarray(y_hat, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if y_hat.shape != y.shape:
        raise ContractError(f"length mismatch: y_hat {y_hat.shape} vs y {y.shape}")
    clamped = np.clip(y_hat, clamp_eps, 1.0 - clamp_eps)
    return float(-np.mean(y * np.log(clamped) + (1.0 - y) * np.log1p(-clamped)))


def _forward_cached(adjs: np.ndarray, x: np.ndarray, params: GcnParams) -> dict:
    """Forward pass keeping every intermediate the backward pass needs."""
    heads = adjs.shape[0]
    n = x.shape[0]

    z1 = x @ params.w1 + params.b1
    p1 = adjs @ z1  # [H, N, d1]
    h1 = np.maximum(p1, 0.0).transpose(1, 0, 2).reshape(n, -1)

    z2 = h1 @ params.w2 + params.b2
    p2 = adjs @ z2  # [H, N, d2]
    h2 = np.maximum(p2, 0.0).transpose(1, 0, 2).reshape(n, -1)

    cat = np.concatenate([h2, x], axis=1)
    gate = expit(cat @ params.wr1 + params.br1)
    value = h2 @ params.wr2 + params.br2
    r = gate * value

    s = r @ params.wo + params.bo
    y_hat = expit(s).ravel()
    return {
        "heads": heads,
        "z1": z1,
        "p1": p1,
        "h1": h1,
        "z2": z2,
        "p2": p2,
        "h2": h2,
        "cat": cat,
        "gate": gate,
        "value": value,
        "r": r,
        "y_hat": y_hat,
    }


def backward(
    graph: Union[SentenceGraph, np.ndarray],
    x: np.ndarray,
    y: np.ndarray,
    params: GcnParams,
    clamp_eps: float = 1e-7,
) -> tuple[float, GcnParams]:
    """Loss and its exact gradient with respect to every parameter tensor."""
    adjs = graph.normalized_adjacency if isinstance(graph, SentenceGraph) else np.asarray(graph)
    adjs = np.asarray(adjs, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    if y.shape != (n,):
        raise ContractError(f"labels shape {y.shape} does not match {n} sentences")

    cache = _forward_cached(adjs, x, params)
    y_hat = cache["y_hat"]
    loss = bce_loss(y_hat, y, clamp_eps)

    clamped = np.clip(y_hat, clamp_eps, 1.0 - clamp_eps)
    in_range = (y_hat >= clamp_eps) & (y_hat <= 1.0 - clamp_eps)
    d_clamped = (-(y / clamped) + (1.0 - y) / (1.0 - clamped)) / n
    d_s = np.where(in_range, d_clamped * y_hat * (1.0 - y_hat), 0.0)[:, None]

    r, gate, value, cat, h2, h1 = (
        cache["r"],
        cache["gate"],
        cache["value"],
        cache["cat"],
        cache["h2"],
        cache["h1"],
    )
    heads = cache["heads"]
    d1 = params.w1.shape[1]
    d2 = params.w2.shape[1]

    g_wo = r.T @ d_s
    g_bo = np.array(d_s.sum())
    d_r = d_s @ params.wo.T

    d_gate = d_r * value
    d_value = d_r * gate

    g_wr2 = h2.T @ d_value
    g_br2 = d_value.sum(axis=0)
    d_h2 = d_value @ params.wr2.T

    d_gate_pre = d_gate * gate * (1.0 - gate)
    g_wr1 = cat.T @ d_gate_pre
    g_br1 = d_gate_pre.sum(axis=0)
    d_cat = d_gate_pre @ params.wr1.T
    d_h2 += d_cat[:, : heads * d2]  # columns past H*d2 flow into x, not params

    # second GCN layer: un-concatenate heads, gate through the relu masks,
    # and pull back through each head's adjacency into the shared z2
    d_h2_heads = d_h2.reshape(n, heads, d2).transpose(1, 0, 2)
    d_p2 = d_h2_heads * (cache["p2"] > 0.0)
    d_z2 = np.matmul(adjs.transpose(0, 2, 1), d_p2).sum(axis=0)

    g_w2 = h1.T @ d_z2
    g_b2 = d_z2.sum(axis=0)
    d_h1 = d_z2 @ params.w2.T

    d_h1_heads = d_h1.reshape(n, heads, d1).transpose(1, 0, 2)
    d_p1 = d_h1_heads * (cache["p1"] > 0.0)
    d_z1 = np.matmul(adjs.transpose(0, 2, 1), d_p1).sum(axis=0)

    g_w1 = x.T @ d_z1
    g_b1 = d_z1.sum(axis=0)

    grads = GcnParams(
        w1=g_w1,
        b1=g_b1,
        w2=g_w2,
        b2=g_b2,
        wr1=g_wr1,
        br1=g_br1,
        wr2=g_wr2,
        br2=g_br2,
        wo=g_wo,
        bo=g_bo,
    )
    return loss, grads


def adam_step(
    params: GcnParams, grads: GcnParams, state: AdamState, config: TrainConfig
) -> tuple[GcnParams, AdamState]:
    """One bias-corrected Adam update, applied to ``params`` in place."""
    state.t += 1
    b1, b2 = config.beta1, config.beta2
    corr1 = 1.0 - b1**state.t
    corr2 = 1.0 - b2**state.t
    for name, p in params.tensors():
        g = getattr(grads, name)
        m = getattr(state.m, name)
        v = getattr(state.v, name)
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * np.square(g)
        update = config.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + config.adam_eps)
        np.subtract(p, update, out=p)
    return params, state


def finite_difference_grads(
    graph: Union[SentenceGraph, np.ndarray],
    x: np.ndarray,
    y: np.ndarray,
    params: GcnParams,
    step: float = 1e-5,
    clamp_eps: float = 1e-7,
) -> GcnParams:
    """Central-difference gradient of the loss, one entry at a time.

    Independent of ``backward``: only the plain forward pass and the loss
    are evaluated. Quadratic cost in parameter count; for small dims only.
    """
    from .gcn_core import forward  # local import keeps module deps one-way

    adjs = graph.normalized_adjacency if isinstance(graph, SentenceGraph) else np.asarray(graph)
    work = params.copy()
    grads = GcnParams.zeros(params.dims)
    for name, tensor in work.tensors():
        flat = tensor.reshape(-1)
        g_flat = getattr(grads, name).reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            loss_plus = bce_loss(forward(adjs, x, work), y, clamp_eps)
            flat[i] = original - step
            loss_minus = bce_loss(forward(adjs, x, work), y, clamp_eps)
            flat[i] = original
            g_flat[i] = (loss_plus - loss_minus) / (2.0 * step)
    return grads


def max_relative_error(a: GcnParams, b: GcnParams, guard: float = 1e-4) -> float:
    """Worst guarded relative error over all tensors:
    |a - b| / max(|a|, |b|, guard) entrywise."""
    worst = 0.0
    for name, ta in a.tensors():
        tb = getattr(b, name)
        denom = np.maximum(np.maximum(np.abs(ta), np.abs(tb)), guard)
        worst = max(worst, float(np.max(np.abs(ta - tb) / denom)))
    return worst


def instance_is_smooth(
    graph: Union[SentenceGraph, np.ndarray],
    x: np.ndarray,
    params: GcnParams,
    clamp_eps: float = 1e-7,
    margin: float = 1e-3,
) -> bool:
    """True when no relu preactivation or clamp boundary sits within
    ``margin`` of its kink.

    The loss is non-differentiable exactly on a kink (a relu input of 0,
    or a probability pinned at the clamp), where the analytic subgradient
    and a central difference legitimately disagree; gradient comparisons
    are only meaningful away from those points.
    """
    adjs = graph.normalized_adjacency if isinstance(graph, SentenceGraph) else np.asarray(graph)
    cache = _forward_cached(np.asarray(adjs, dtype=np.float64), np.asarray(x, dtype=np.float64), params)
    if np.abs(cache["p1"]).min() < margin or np.abs(cache["p2"]).min() < margin:
        return False
    y_hat = cache["y_hat"]
    near_low = np.abs(y_hat - clamp_eps) < margin
    near_high = np.abs(y_hat - (1.0 - clamp_eps)) < margin
    return not (near_low.any() or near_high.any())


def grad_check(
    config: TrainConfig | None = None, seed: int = 0, step: float = 1e-5
) -> float:
    """Analytic-vs-finite-difference comparison on one random instance.

    Uses small dims (d=8, 2 heads) by default; returns the max guarded
    relative error, which should sit far below 1e-4 for a correct
    backward pass. Instances landing numerically on a relu kink are
    redrawn (deterministically, by continuing the seeded stream), since
    the two sides measure different one-sided objects there.
    """
    if config is None:
        config = TrainConfig(dims=ModelDims(d=8, heads=2, d1=4, d2=4, dr=6))
    dims = config.dims
    rng = np.random.Generator(np.random.PCG64(seed))
    params = init_params(dims, seed=seed)

    for _ in range(100):
        n = int(rng.integers(2, 7))
        binary = np.zeros((dims.heads, n, n), dtype=np.uint8)
        for h in range(dims.heads):
            upper = rng.random((n, n)) < 0.5
            adj = np.triu(upper, k=1)
            binary[h] = adj | adj.T
        graph = graphs_from_binary(binary)
        x = rng.standard_normal((n, dims.d))
        y = rng.integers(0, 2, size=n).astype(np.float64)
        if instance_is_smooth(graph, x, params, config.clamp_eps):
            break
    else:  # pragma: no cover - would need a pathological config
        raise DataError("could not draw a kink-free instance in 100 tries")

    _, analytic = backward(graph, x, y, params, config.clamp_eps)
    numeric = finite_difference_grads(graph, x, y, params, step, config.clamp_eps)
    return max_relative_error(analytic, numeric)


@dataclass
class TrainResult:
    params: GcnParams
    history: list[tuple[int, float, float]] = field(default_factory=list)
    stopped_early: bool = False

    def write_history_csv(self, path: str | os.PathLike):
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_loss", "val_loss"])
            for epoch, train_loss, val_loss in self.history:
                writer.writerow([epoch, format(train_loss, ".12g"), format(val_loss, ".12g")])


def _mean_loss(doc_indices, graphs, xs, ys, params, clamp_eps) -> float:
    from .gcn_core import forward

    total = 0.0
    for i in doc_indices:
        total += bce_loss(forward(graphs[i], xs[i], params), ys[i], clamp_eps)
    return total / len(doc_indices)


def train(
    corpus_dir: str | os.PathLike,
    config: TrainConfig,
    model_path: str | os.PathLike | None = None,
    history_path: str | os.PathLike | None = None,
) -> TrainResult:
    """Fit the model on a labeled bundle corpus.

    One Adam step per document (documents in seeded-shuffled order each
    epoch, graphs built once and cached), validation split carved out by
    the same seed, best-validation parameters kept and written to
    ``model_path``. Fixed seed means bit-identical model files.
    """
    paths = bundle_io.corpus_paths(corpus_dir)
    if not paths:
        raise DataError(f"no bundles found under {corpus_dir}")

    graphs, xs, ys = [], [], []
    for path in paths:
        bundle = bundle_io.load_bundle(path)
        if bundle.labels is None:
            raise DataError(f"bundle {bundle.doc_id} has no labels; run labeling first")
        graphs.append(build_graphs(bundle, config.threshold).normalized_adjacency)
        xs.append(bundle.embeddings.astype(np.float64))
        ys.append(bundle.labels.astype(np.float64))

    n_docs = len(paths)
    rng = np.random.Generator(np.random.PCG64(config.seed))
    perm = rng.permutation(n_docs)
    if n_docs >= 2:
        n_val = min(max(1, round(config.val_fraction * n_docs)), n_docs - 1)
        val_idx = list(perm[:n_val])
        train_idx = list(perm[n_val:])
    else:
        # single document: the validation view degenerates onto it
        val_idx = [0]
        train_idx = [0]

    params = init_params(config.dims, config.seed)
    state = AdamState.zeros(config.dims)

    best_val = np.inf
    best_params = params.copy()
    stale = 0
    result = TrainResult(params=best_params)

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(train_idx))
        for j in order:
            i = train_idx[j]
            _, grads = backward(graphs[i], xs[i], ys[i], params, config.clamp_eps)
            adam_step(params, grads, state, config)

        train_loss = _mean_loss(train_idx, graphs, xs, ys, params, config.clamp_eps)
        val_loss = _mean_loss(val_idx, graphs, xs, ys, params, config.clamp_eps)
        result.history.append((epoch, train_loss, val_loss))

        if val_loss < best_val:
            best_val = val_loss
            best_params = params.copy()
            stale = 0
        else:
            stale += 1
            if config.patience is not None and stale >= config.patience:
                result.stopped_early = True
                break

    result.params = best_params
    if model_path is not None:
        save_params(best_params, model_path)
    if history_path is not None:
        result.write_history_csv(history_path)
    return result
