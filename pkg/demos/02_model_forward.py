# Anatomy of the forward pass
# ===========================
#
# The classifier runs two graph-convolution layers whose weights are
# shared across attention heads, concatenates the per-head outputs, mixes
# them through a gated readout, and squashes a final affine map into one
# selection probability per sentence. This script shows each stage's
# shapes and the head-sharing property.

import numpy as np

from attnsum import (
    ModelDims,
    count_params,
    forward,
    init_params,
    multi_head_layer,
    readout,
)
from attnsum.graph_extract import graphs_from_binary

rng = np.random.default_rng(1)
dims = ModelDims(d=16, heads=3, d1=8, d2=8, dr=12)
n = 5

# three random undirected graphs, one per head
binary = np.zeros((dims.heads, n, n), dtype=np.uint8)
for h in range(dims.heads):
    upper = np.triu(rng.random((n, n)) < 0.5, k=1)
    binary[h] = upper | upper.T
graph = graphs_from_binary(binary)

x = rng.standard_normal((n, dims.d))
params = init_params(dims, seed=42)

h1 = multi_head_layer(x, graph, params.w1, params.b1)
h2 = multi_head_layer(h1, graph, params.w2, params.b2)
r = readout(h2, x, params)
y_hat = forward(graph, x, params)

print(f"input X:            {x.shape}")
print(f"H1 = concat heads:  {h1.shape}   (heads x d1 = {dims.heads} x {dims.d1})")
print(f"H2 = concat heads:  {h2.shape}")
print(f"readout R:          {r.shape}")
print(f"probabilities:      {y_hat.shape} -> {np.round(y_hat, 4)}")

# Head sharing: the same (w1, b1) serves every head, so feeding all heads
# the SAME adjacency makes the H1 blocks identical.
same = graphs_from_binary(np.stack([binary[0]] * dims.heads))
h1_same = multi_head_layer(x, same, params.w1, params.b1)
blocks = [h1_same[:, i * dims.d1 : (i + 1) * dims.d1] for i in range(dims.heads)]
print(f"\nidentical adjacencies -> identical head blocks: "
      f"{all(np.array_equal(blocks[0], b) for b in blocks[1:])}")

# Parameter budget: head count leaves the GCN weights untouched.
print(f"\nparameters at these dims: {count_params(dims):,}")
print(f"parameters at default dims (d=768, 12 heads): {count_params(ModelDims()):,}")
for heads in (1, 6, 12):
    d = ModelDims(d=768, heads=heads, d1=64, d2=64, dr=128)
    print(f"  heads={heads:>2}: {count_params(d):,}")
