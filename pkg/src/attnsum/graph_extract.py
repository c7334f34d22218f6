"""From raw CLS attention slices to the adjacency matrices the GCN eats.

The pipeline per attention head: re-normalize each row with a softmax (the
raw slices are cut out of a distribution over a longer token sequence, so
their rows don't sum to 1), threshold into a directed binary graph,
symmetrize (OR with the transpose, diagonal cleared), then build the
degree-normalized propagation matrix

    A_norm = D^(-1/2) (A + I) D^(-1/2),   D = diag(rowsum(A + I)).

The self-loop added here guarantees every degree is >= 1, so isolated
sentences stay classifiable (their row of A_norm is a 1 on the diagonal).

Threshold policy: "uniform" resolves to 1/N, i.e. an edge survives where a
sentence pays another at least the uniform share of its attention; a float
is used as-is. For N=1 the uniform value 1.0 is clamped to the largest
float below 1 so it stays inside the open interval (the singleton's graph
is the same for every threshold anyway).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .bundle_io import DocumentBundle
from .errors import ConfigError, ContractError, DataError

ThresholdPolicy = Union[str, float]

UNIFORM = "uniform"


@dataclass
class SentenceGraph:
    """Per-head graphs derived from one bundle at one threshold.

    ``stochastic_attention`` [H, N, N] has row-stochastic slices,
    ``binary_adjacency`` [H, N, N] is symmetric with zero diagonal, and
    ``normalized_adjacency`` [H, N, N] holds the propagation matrices.
    """

    threshold: float
    stochastic_attention: np.ndarray
    binary_adjacency: np.ndarray
    normalized_adjacency: np.ndarray

    @property
    def n_heads(self) -> int:
        return self.normalized_adjacency.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.normalized_adjacency.shape[1]


def resolve_threshold(policy: ThresholdPolicy, n: int) -> float:
    if policy == UNIFORM:
        return min(1.0 / n, float(np.nextafter(1.0, 0.0)))
    tau = float(policy)
    if not 0.0 < tau < 1.0:
        raise ConfigError(f"threshold must lie in (0, 1), got {tau}")
    return tau


def resoftmax_rows(raw: np.ndarray) -> np.ndarray:
    """Row-wise stabilized softmax over the last axis.

    out[..., i, j] = exp(raw[..., i, j]) / sum_k exp(raw[..., i, k]),
    computed after subtracting the row max.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if not np.isfinite(raw).all():
        raise DataError("attention contains non-finite values")
    shifted = raw - raw.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def binarize(stochastic: np.ndarray, threshold: float) -> np.ndarray:
    """Directed edge (i, j) where stochastic[i, j] >= threshold (ties kept)."""
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"threshold must lie in (0, 1), got {threshold}")
    return (np.asarray(stochastic) >= threshold).astype(np.uint8)


def symmetrize(directed: np.ndarray) -> np.ndarray:
    """Undirected graph: OR with the transpose, then clear the diagonal."""
    directed = np.asarray(directed)
    out = ((directed + directed.T) > 0).astype(np.uint8)
    np.fill_diagonal(out, 0)
    return out


def normalize_adjacency(adjacency: np.ndarray) -> np.ndarray:
    """D^(-1/2) (A + I) D^(-1/2) for a symmetric zero-diagonal binary A.

    The added self-loop makes every row sum >= 1, so the inverse square
    root is always defined. Output is symmetric with spectral radius <= 1.
    """
    a = np.asarray(adjacency, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError(f"adjacency must be square, got shape {a.shape}")
    if not np.array_equal(a, a.T):
        raise ContractError("adjacency must be symmetric")
    a_hat = a + np.eye(a.shape[0])
    inv_sqrt_deg = 1.0 / np.sqrt(a_hat.sum(axis=1))
    return inv_sqrt_deg[:, None] * a_hat * inv_sqrt_deg[None, :]


def build_graphs(bundle: DocumentBundle, policy: ThresholdPolicy = UNIFORM) -> SentenceGraph:
    """Run the whole per-head pipeline on one bundle."""
    n = bundle.n_sentences
    tau = resolve_threshold(policy, n)
    stochastic = resoftmax_rows(bundle.raw_attention)
    heads = stochastic.shape[0]
    binary = np.empty((heads, n, n), dtype=np.uint8)
    normalized = np.empty((heads, n, n), dtype=np.float64)
    for h in range(heads):
        binary[h] = symmetrize(binarize(stochastic[h], tau))
        normalized[h] = normalize_adjacency(binary[h])
    return SentenceGraph(
        threshold=tau,
        stochastic_attention=stochastic,
        binary_adjacency=binary,
        normalized_adjacency=normalized,
    )


def graphs_from_binary(binary: np.ndarray, threshold: float = 0.5) -> SentenceGraph:
    """Wrap pre-built symmetric binary adjacencies [H, N, N] as a
    SentenceGraph (stochastic part filled with the uniform distribution).
    Handy for tests and N-independent experiments."""
    binary = np.asarray(binary, dtype=np.uint8)
    heads, n, _ = binary.shape
    normalized = np.stack([normalize_adjacency(binary[h]) for h in range(heads)])
    uniform = np.full((heads, n, n), 1.0 / n)
    return SentenceGraph(
        threshold=threshold,
        stochastic_attention=uniform,
        binary_adjacency=binary,
        normalized_adjacency=normalized,
    )
