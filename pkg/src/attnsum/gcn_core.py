"""Multi-head GCN classifier over sentence graphs.

One graph-convolution layer propagates features through a normalized
adjacency and a fully connected map:

    gcn(Hin, A) = relu(A @ (Hin @ W + b))

The same (W, b) is applied under every head's adjacency and the head
outputs are concatenated along the feature axis, so the layer's parameter
count is independent of the number of heads. Two such layers are followed
by a gated readout

    R = sigmoid([H2 | H0] @ Wr1 + br1) * (H2 @ Wr2 + br2)

(concatenation order: second-layer features first, then the raw inputs)
and a single affine head squashed through a sigmoid, giving one
selection probability per sentence.

Parameters travel in the ATSM file format: magic b"ATSM", version=1, the
five dimensions (d, heads, d1, d2, dr) as little-endian uint32, then every
tensor in field order (w1, b1, w2, b2, wr1, br1, wr2, br2, wo, bo) as
little-endian float32, row-major.
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, fields
from typing import BinaryIO, Union

import numpy as np
from scipy.special import expit

from .errors import ContractError, FormatError, TruncationError, ValidationError
from .graph_extract import SentenceGraph

MODEL_MAGIC = b"ATSM"
MODEL_VERSION = 1

_U32 = struct.Struct("<I")


@dataclass(frozen=True)
class ModelDims:
    """Layer widths: input d, attention heads, GCN widths d1/d2, readout dr."""

    d: int = 768
    heads: int = 12
    d1: int = 64
    d2: int = 64
    dr: int = 128

    def __post_init__(self):
        for name in ("d", "heads", "d1", "d2", "dr"):
            if getattr(self, name) < 1:
                raise ValidationError(f"dims.{name} must be positive")


def _expected_shapes(dims: ModelDims) -> dict[str, tuple[int, ...]]:
    return {
        "w1": (dims.d, dims.d1),
        "b1": (dims.d1,),
        "w2": (dims.heads * dims.d1, dims.d2),
        "b2": (dims.d2,),
        "wr1": (dims.heads * dims.d2 + dims.d, dims.dr),
        "br1": (dims.dr,),
        "wr2": (dims.heads * dims.d2, dims.dr),
        "br2": (dims.dr,),
        "wo": (dims.dr, 1),
        "bo": (),
    }


@dataclass
class GcnParams:
    """All trainable tensors. The two GCN layers' weights are shared
    across heads; only the readout widths depend on the head count."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    wr1: np.ndarray
    br1: np.ndarray
    wr2: np.ndarray
    br2: np.ndarray
    wo: np.ndarray
    bo: np.ndarray

    def tensors(self):
        """(name, array) pairs in serialization order."""
        for f in fields(self):
            yield f.name, getattr(self, f.name)

    @property
    def dims(self) -> ModelDims:
        d, d1 = self.w1.shape
        d2 = self.w2.shape[1]
        heads = self.w2.shape[0] // d1
        dr = self.wr1.shape[1]
        return ModelDims(d=d, heads=heads, d1=d1, d2=d2, dr=dr)

    def validate(self, dims: ModelDims | None = None):
        dims = dims or self.dims
        for name, want in _expected_shapes(dims).items():
            got = getattr(self, name).shape
            if got != want:
                raise ValidationError(f"{name}: expected shape {want}, got {got}")
        for name, tensor in self.tensors():
            if not np.isfinite(tensor).all():
                raise ValidationError(f"{name}: non-finite entries")

    def copy(self) -> "GcnParams":
        return GcnParams(**{name: tensor.copy() for name, tensor in self.tensors()})

    @classmethod
    def zeros(cls, dims: ModelDims) -> "GcnParams":
        return cls(
            **{
                name: np.zeros(shape, dtype=np.float64)
                for name, shape in _expected_shapes(dims).items()
            }
        )


def init_params(dims: ModelDims, seed: int = 0) -> GcnParams:
    """Glorot-uniform weights, zero biases.

    Weights are drawn uniformly from +-sqrt(6 / (fan_in + fan_out)) using
    numpy's PCG64 generator seeded with ``seed`` (draw order: w1, w2, wr1,
    wr2, wo), so a (dims, seed) pair pins the parameters bit-for-bit.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    params = GcnParams.zeros(dims)
    for name in ("w1", "w2", "wr1", "wr2", "wo"):
        shape = getattr(params, name).shape
        limit = np.sqrt(6.0 / (shape[0] + shape[1]))
        setattr(params, name, rng.uniform(-limit, limit, size=shape))
    return params


def _relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


def gcn_layer(hin: np.ndarray, a_norm: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """relu(A @ (Hin @ W + b)) for a single adjacency."""
    hin = np.asarray(hin, dtype=np.float64)
    if hin.ndim != 2 or hin.shape[1] != w.shape[0]:
        raise ContractError(
            f"feature/weight mismatch: Hin {hin.shape} vs W {np.shape(w)}"
        )
    if np.shape(a_norm) != (hin.shape[0], hin.shape[0]):
        raise ContractError(
            f"adjacency shape {np.shape(a_norm)} does not match {hin.shape[0]} rows"
        )
    return _relu(a_norm @ (hin @ w + b))


def _adjacencies(graph: Union[SentenceGraph, np.ndarray]) -> np.ndarray:
    adjs = graph.normalized_adjacency if isinstance(graph, SentenceGraph) else graph
    adjs = np.asarray(adjs, dtype=np.float64)
    if adjs.ndim != 3 or adjs.shape[1] != adjs.shape[2]:
        raise ContractError(f"expected [H, N, N] adjacencies, got shape {adjs.shape}")
    return adjs


def multi_head_layer(
    hin: np.ndarray, graph: Union[SentenceGraph, np.ndarray], w: np.ndarray, b: np.ndarray
) -> np.ndarray:
    """Concatenate gcn_layer outputs over all heads, sharing (W, b).

    Output is [N, heads * q] with head h occupying columns [h*q, (h+1)*q).
    """
    adjs = _adjacencies(graph)
    hin = np.asarray(hin, dtype=np.float64)
    if hin.shape[1] != w.shape[0]:
        raise ContractError(
            f"feature/weight mismatch: Hin {hin.shape} vs W {np.shape(w)}"
        )
    z = hin @ w + b  # shared across heads
    stacked = _relu(adjs @ z)  # [H, N, q]
    heads, n, q = stacked.shape
    return stacked.transpose(1, 0, 2).reshape(n, heads * q)


def readout(h2: np.ndarray, h0: np.ndarray, params: GcnParams) -> np.ndarray:
    """Gated combination sigmoid([H2|H0] Wr1 + br1) * (H2 Wr2 + br2)."""
    h2 = np.asarray(h2, dtype=np.float64)
    h0 = np.asarray(h0, dtype=np.float64)
    if h2.shape[0] != h0.shape[0]:
        raise ContractError(f"row mismatch: H2 has {h2.shape[0]}, H0 has {h0.shape[0]}")
    cat = np.concatenate([h2, h0], axis=1)
    if cat.shape[1] != params.wr1.shape[0]:
        raise ContractError(
            f"readout width {cat.shape[1]} does not match Wr1 {params.wr1.shape}"
        )
    gate = expit(cat @ params.wr1 + params.br1)
    value = h2 @ params.wr2 + params.br2
    return gate * value


def forward(
    graph: Union[SentenceGraph, np.ndarray], x: np.ndarray, params: GcnParams
) -> np.ndarray:
    """Selection probability per sentence, strictly inside (0, 1).

    ``graph`` is a SentenceGraph or a raw [H, N, N] stack of normalized
    adjacencies; ``x`` is the [N, d] sentence-embedding matrix.
    """
    adjs = _adjacencies(graph)
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != adjs.shape[1]:
        raise ContractError(
            f"embeddings rows {x.shape[0]} do not match graph order {adjs.shape[1]}"
        )
    h1 = multi_head_layer(x, adjs, params.w1, params.b1)
    h2 = multi_head_layer(h1, adjs, params.w2, params.b2)
    r = readout(h2, x, params)
    return expit(r @ params.wo + params.bo).ravel()


def save_params(params: GcnParams, destination: Union[str, os.PathLike, BinaryIO]) -> int:
    """Write the ATSM model file; returns bytes written. Tensors are
    stored float32 regardless of in-memory precision."""
    params.validate()
    dims = params.dims
    parts = [
        MODEL_MAGIC,
        _U32.pack(MODEL_VERSION),
        _U32.pack(dims.d),
        _U32.pack(dims.heads),
        _U32.pack(dims.d1),
        _U32.pack(dims.d2),
        _U32.pack(dims.dr),
    ]
    for _, tensor in params.tensors():
        parts.append(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
    blob = b"".join(parts)
    if hasattr(destination, "write"):
        destination.write(blob)
    else:
        with open(destination, "wb") as fh:
            fh.write(blob)
    return len(blob)


def load_params(source: Union[str, os.PathLike, BinaryIO]) -> GcnParams:
    """Read an ATSM model file back into float64 tensors."""
    if hasattr(source, "read"):
        data = source.read()
    else:
        with open(source, "rb") as fh:
            data = fh.read()
    if data[:4] != MODEL_MAGIC:
        raise FormatError("bad magic: not an ATSM stream")
    if len(data) < 28:
        raise TruncationError("stream too short for an ATSM header")
    version, d, heads, d1, d2, dr = struct.unpack("<6I", data[4:28])
    if version != MODEL_VERSION:
        raise FormatError(f"unsupported ATSM version {version}")
    dims = ModelDims(d=d, heads=heads, d1=d1, d2=d2, dr=dr)
    pos = 28
    arrays = {}
    for name, shape in _expected_shapes(dims).items():
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        end = pos + 4 * count
        if end > len(data):
            raise TruncationError(f"stream ends inside tensor {name}")
        flat = np.frombuffer(data[pos:end], dtype="<f4")
        arrays[name] = flat.reshape(shape).astype(np.float64)
        pos = end
    if pos != len(data):
        raise FormatError(f"{len(data) - pos} trailing bytes after model tensors")
    params = GcnParams(**arrays)
    params.validate(dims)
    return params
