# Bundles and sentence graphs
# ===========================
#
# A document enters the pipeline as an ATSB bundle: its sentences, one
# encoder embedding per sentence, and the raw per-head CLS-to-CLS
# attention slices. This script builds a tiny bundle by hand, round-trips
# it through the binary format, and walks the attention through the full
# graph pipeline: row re-softmax -> threshold -> symmetrize -> normalize.

import io

import numpy as np

from attnsum import DocumentBundle, read_bundle, write_bundle, build_graphs

rng = np.random.default_rng(0)

sentences = [
    "The storm closed the harbor for two days.",
    "Ships waited at anchor outside the breakwater.",
    "Cargo deliveries resumed on Thursday morning.",
    "Officials praised the port crews.",
]
n = len(sentences)

# Raw attention rows do NOT sum to one: they are slices of a distribution
# over a longer token sequence, hence the re-softmax later.
raw_attention = rng.uniform(0.0, 1.0, size=(2, n, n)).astype(np.float32)
embeddings = rng.standard_normal((n, 8)).astype(np.float32)

bundle = DocumentBundle(
    doc_id="harbor-01",
    sentences=sentences,
    embeddings=embeddings,
    raw_attention=raw_attention,
)

# --- round-trip through the byte format -------------------------------
buffer = io.BytesIO()
count = write_bundle(bundle, buffer)
buffer.seek(0)
restored = read_bundle(buffer)
print(f"wrote {count} bytes; round-trip equal: {restored == bundle}")

# --- attention -> graphs ------------------------------------------------
# "uniform" resolves the threshold to 1/N: an edge survives where one
# sentence pays another at least the uniform share of its attention.
graph = build_graphs(bundle, "uniform")
print(f"\nresolved threshold: {graph.threshold:.3f}")

np.set_printoptions(precision=3, suppress=True)
print("\nhead 0 stochastic attention (rows sum to 1):")
print(graph.stochastic_attention[0])
print("row sums:", graph.stochastic_attention[0].sum(axis=1))

print("\nhead 0 binary adjacency (symmetric, zero diagonal):")
print(graph.binary_adjacency[0])

print("\nhead 0 normalized adjacency D^-1/2 (A+I) D^-1/2:")
print(graph.normalized_adjacency[0])

radius = np.max(np.abs(np.linalg.eigvalsh(graph.normalized_adjacency[0])))
print(f"spectral radius: {radius:.6f} (always <= 1)")

# A harsher threshold prunes edges; isolated sentences keep their
# self-loop so every sentence stays classifiable.
sparse = build_graphs(bundle, 0.45)
print(f"\nedges per head at tau=0.45: {[int(a.sum()) // 2 for a in sparse.binary_adjacency]}")
print("head 0 normalized adjacency at tau=0.45:")
print(sparse.normalized_adjacency[0])
